//! Deficits of Moser–Trudinger type inequalities on the discrete disk.
//!
//! Every report stores `left`, `right` and `deficit = right − left`; an
//! inequality holds on a sample iff its deficit is nonnegative. Constants
//! `C` are supplied by the caller and recorded (they default to `0`); only
//! the Lebedev–Milin inequality is sharp with `C = 0`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::math::{atan2, cos, dot, exp, hypot, ln, log_weighted_exp_sum, sin, tanh};
use crate::mesh::DiskMesh;
use crate::symmetry::SymmetryGroup;
use crate::TWO_PI;

const PI: f64 = core::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeficitReport {
    pub family: String,
    pub param: f64,
    pub left: f64,
    pub right: f64,
    pub deficit: f64,
    pub constant_used: f64,
}

impl DeficitReport {
    pub fn new(family: impl Into<String>, param: f64, left: f64, right: f64, constant_used: f64) -> Self {
        DeficitReport {
            family: family.into(),
            param,
            left,
            right,
            deficit: right - left,
            constant_used,
        }
    }

    pub fn with_param(mut self, family: impl Into<String>, param: f64) -> Self {
        self.family = family.into();
        self.param = param;
        self
    }
}

/// Concentrating test families.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BubbleFamily {
    /// [`interior_bubble`] with concentration `lambda ≥ 1`.
    Interior { lambda: f64, center: [f64; 2] },
    /// [`mobius_field`] with center `a`, `|a| < 1`.
    MobiusBoundary { a: [f64; 2] },
}

impl BubbleFamily {
    pub fn field(&self, mesh: &DiskMesh) -> Result<ScalarField> {
        match *self {
            BubbleFamily::Interior { lambda, center } => interior_bubble(mesh, lambda, center),
            BubbleFamily::MobiusBoundary { a } => mobius_field(mesh, a),
        }
    }
}

fn check_center(a: [f64; 2]) -> Result<()> {
    let r = hypot(a[0], a[1]);
    if r < 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("Möbius center |a| = {r} must be < 1")))
    }
}

/// `log|1 − ā z|` at each node.
fn log_abs_one_minus(mesh: &DiskMesh, a: [f64; 2]) -> ScalarField {
    ScalarField::from_fn(mesh, |x, y| {
        let re = 1.0 - (a[0] * x + a[1] * y);
        let im = -(a[0] * y - a[1] * x);
        ln(hypot(re, im))
    })
}

/// `u = 2 log|φ_a'|` for the disk automorphism `φ_a(z) = (z − a)/(1 − āz)`:
/// the conformal factor of the pulled-back flat metric. Preserves area `π`
/// and boundary length `2π`.
pub fn mobius_field(mesh: &DiskMesh, a: [f64; 2]) -> Result<ScalarField> {
    check_center(a)?;
    let c = 2.0 * ln(1.0 - (a[0] * a[0] + a[1] * a[1]));
    Ok(log_abs_one_minus(mesh, a).scaled(-4.0).shifted(c))
}

/// `log|φ_a'|`, half of [`mobius_field`]: the equality family of the
/// Lebedev–Milin inequality.
pub fn mobius_log_derivative(mesh: &DiskMesh, a: [f64; 2]) -> Result<ScalarField> {
    Ok(mobius_field(mesh, a)?.scaled(0.5))
}

/// `log` of the orbit average of `e^u`: a `G`-symmetric field whose
/// exponential carries one copy of the mass of `u` per group image.
pub fn exp_symmetrize(group: &SymmetryGroup, u: &ScalarField) -> ScalarField {
    let shift = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let e: ScalarField = u.iter().map(|v| exp(v - shift)).collect::<Vec<_>>().into();
    group.symmetrize(&e).iter().map(|v| ln(*v) + shift).collect::<Vec<_>>().into()
}

/// Concentration level at which a bubble is resolved by about one ring
/// spacing; larger requests saturate smoothly toward `2 / h`.
fn resolved_lambda(mesh: &DiskMesh, lambda: f64) -> f64 {
    let half_cap = 1.0 / mesh.radial_spacing();
    if lambda <= half_cap {
        lambda
    } else {
        half_cap + half_cap * tanh((lambda - half_cap) / half_cap)
    }
}

/// `u = 2 log(2λ / (1 + λ²|x − center|²))`. For `λ = 1` and the origin this is
/// the round-hemisphere field, which solves the problem with `K ≡ 1, h ≡ 0`.
pub fn interior_bubble(mesh: &DiskMesh, lambda: f64, center: [f64; 2]) -> Result<ScalarField> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::Precondition(format!("bubble concentration λ = {lambda} must be ≥ 1")));
    }
    if hypot(center[0], center[1]) >= 1.0 {
        return Err(Error::Precondition("bubble center must be interior".to_string()));
    }
    let l = resolved_lambda(mesh, lambda);
    Ok(ScalarField::from_fn(mesh, |x, y| {
        let d2 = (x - center[0]) * (x - center[0]) + (y - center[1]) * (y - center[1]);
        2.0 * ln(2.0 * l / (1.0 + l * l * d2))
    }))
}

struct Integrals {
    dirichlet: f64,
    area_mean: f64,
    boundary_mean: f64,
}

fn integrals(mesh: &DiskMesh, u: &ScalarField) -> Result<Integrals> {
    u.validate(mesh)?;
    let q = mesh.quadrature();
    let trace = u.trace(mesh);
    Ok(Integrals {
        dirichlet: mesh.stiffness().bilinear(u, u),
        area_mean: dot(u, q.node_weights()) / q.area(),
        boundary_mean: dot(&trace, q.boundary_weights()) / q.boundary_length(),
    })
}

fn log_int_area(mesh: &DiskMesh, u: &[f64], mask: Option<&dyn Fn(usize) -> bool>) -> Option<f64> {
    let w: Vec<f64> = mesh
        .quadrature()
        .node_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| if mask.map_or(true, |m| m(i)) { *w } else { 0.0 })
        .collect();
    let ones = alloc::vec![1.0; u.len()];
    log_weighted_exp_sum(&w, &ones, u, 1.0).map(|(l, _)| l)
}

fn log_int_boundary(mesh: &DiskMesh, u: &ScalarField, mask: Option<&dyn Fn(usize) -> bool>) -> Option<f64> {
    let trace = u.trace(mesh);
    let w: Vec<f64> = mesh
        .quadrature()
        .boundary_weights()
        .iter()
        .enumerate()
        .map(|(j, w)| if mask.map_or(true, |m| m(j)) { *w } else { 0.0 })
        .collect();
    let ones = alloc::vec![1.0; trace.len()];
    log_weighted_exp_sum(&w, &ones, &trace, 1.0).map(|(l, _)| l)
}

/// `log ⨍_{S¹} e^u ≤ (1/4π)∫|∇u|² + ⨍_{S¹} u`, sharp with constant `0`.
pub fn lebedev_milin_deficit(mesh: &DiskMesh, u: &ScalarField) -> Result<DeficitReport> {
    let ints = integrals(mesh, u)?;
    let left = log_int_boundary(mesh, u, None).expect("positive weights") - ln(TWO_PI);
    let right = ints.dirichlet / (4.0 * PI) + ints.boundary_mean;
    Ok(DeficitReport::new("lebedev-milin", 0.0, left, right, 0.0))
}

/// Forms of the interior inequality `log∫_D e^u ≤ …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MtVariant {
    /// `(1/16π)∫|∇u|² + C` for `u = 0` on the boundary.
    Dirichlet,
    /// `(1/8π)∫|∇u|² + ⨍_D u + C`.
    MeanForm,
    /// `(1/8π)∫|∇u|² + ⨍_{S¹} u + C`.
    BoundaryMeanForm,
}

impl MtVariant {
    pub fn name(&self) -> &'static str {
        match self {
            MtVariant::Dirichlet => "mt-dirichlet",
            MtVariant::MeanForm => "mt-mean",
            MtVariant::BoundaryMeanForm => "mt-boundary-mean",
        }
    }
}

pub fn mt_interior_deficit(
    mesh: &DiskMesh,
    u: &ScalarField,
    variant: MtVariant,
    constant: f64,
) -> Result<DeficitReport> {
    let ints = integrals(mesh, u)?;
    let left = log_int_area(mesh, u, None).expect("positive weights");
    let right = match variant {
        MtVariant::Dirichlet => {
            let worst = u.trace(mesh).max_abs();
            if worst > 1e-12 {
                return Err(Error::Precondition(format!(
                    "Dirichlet form needs u = 0 on the boundary (max |u| = {worst:e})"
                )));
            }
            ints.dirichlet / (16.0 * PI)
        }
        MtVariant::MeanForm => ints.dirichlet / (8.0 * PI) + ints.area_mean,
        MtVariant::BoundaryMeanForm => ints.dirichlet / (8.0 * PI) + ints.boundary_mean,
    } + constant;
    Ok(DeficitReport::new(variant.name(), 0.0, left, right, constant))
}

/// `log∫_{S¹} e^u ≤ (1/4π)∫|∇u|² + ⨍_D u + C`: the boundary inequality with
/// the area mean in place of the boundary mean.
pub fn mt_boundary_area_mean_deficit(mesh: &DiskMesh, u: &ScalarField, constant: f64) -> Result<DeficitReport> {
    let ints = integrals(mesh, u)?;
    let left = log_int_boundary(mesh, u, None).expect("positive weights");
    let right = ints.dirichlet / (4.0 * PI) + ints.area_mean + constant;
    Ok(DeficitReport::new("mt-boundary-area-mean", 0.0, left, right, constant))
}

/// A subset carrying mass in the localized inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum LocalRegion {
    /// Closed disk `|x − center| ≤ radius`, away from the boundary.
    Interior { center: [f64; 2], radius: f64 },
    /// Boundary arc of angles within `half_width` of `center_angle`.
    BoundaryArc { center_angle: f64, half_width: f64 },
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = libm::fmod(a - b, TWO_PI);
    let d = if d < 0.0 { d + TWO_PI } else { d };
    d.min(TWO_PI - d)
}

impl LocalRegion {
    /// Euclidean distance from `p` to the region.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        match *self {
            LocalRegion::Interior { center, radius } => {
                (hypot(p[0] - center[0], p[1] - center[1]) - radius).max(0.0)
            }
            LocalRegion::BoundaryArc {
                center_angle,
                half_width,
            } => {
                let r = hypot(p[0], p[1]);
                if r > 0.0 && angle_gap(atan2(p[1], p[0]), center_angle) <= half_width {
                    (1.0 - r).abs()
                } else {
                    [center_angle - half_width, center_angle + half_width]
                        .iter()
                        .map(|t| hypot(p[0] - cos(*t), p[1] - sin(*t)))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    fn check(&self, delta: f64) -> Result<()> {
        match *self {
            LocalRegion::Interior { center, radius } => {
                let reach = hypot(center[0], center[1]) + radius + delta;
                if radius <= 0.0 || reach >= 1.0 {
                    return Err(Error::Config(format!(
                        "interior region with its δ-neighborhood reaches the boundary \
                         (|center| + radius + δ = {reach})"
                    )));
                }
            }
            LocalRegion::BoundaryArc { half_width, .. } => {
                if !(half_width > 0.0 && half_width < PI) {
                    return Err(Error::Config(format!("arc half-width {half_width} must lie in (0, π)")));
                }
            }
        }
        Ok(())
    }

    fn is_interior(&self) -> bool {
        matches!(self, LocalRegion::Interior { .. })
    }
}

/// Piecewise-linear cutoff over the δ-collar: `1` within `δ/2` of the
/// region, `0` beyond `δ`.
pub fn collar_cutoff(distance: f64, delta: f64) -> f64 {
    if distance <= 0.5 * delta {
        1.0
    } else if distance >= delta {
        0.0
    } else {
        2.0 * (delta - distance) / delta
    }
}

/// `∫ g |∇u|²` with `g` the collar cutoff of `region`, sampled at centroids.
pub fn localized_dirichlet(mesh: &DiskMesh, u: &ScalarField, region: &LocalRegion, delta: f64) -> f64 {
    (0..mesh.triangles().len())
        .map(|t| {
            let g = collar_cutoff(region.distance(mesh.centroid(t)), delta);
            if g == 0.0 {
                0.0
            } else {
                g * mesh.element_dirichlet(t, u)
            }
        })
        .sum()
}

fn check_zero_mean(mesh: &DiskMesh, u: &ScalarField) -> Result<()> {
    let mean = dot(u, mesh.quadrature().node_weights()) / mesh.quadrature().area();
    if mean.abs() > 1e-9 * (1.0 + u.max_abs()) {
        return Err(Error::Precondition(format!("field must have zero disk mean (mean = {mean:e})")));
    }
    Ok(())
}

fn check_parameters(delta: f64, epsilon: f64) -> Result<()> {
    if delta > 0.0 && epsilon > 0.0 && delta.is_finite() && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("δ = {delta} and ε = {epsilon} must be positive")))
    }
}

/// Localized inequality on one region, for zero-mean `u`:
///
/// * interior: `16π log∫_{Σ₁} e^u ≤ ∫_{(Σ₁)^δ}|∇u|² + ε∫|∇u|² + C`,
/// * boundary arc: `4π log∫_{Γ₁} e^u ≤ ∫_{(Γ₁)^δ}|∇u|² + ε∫|∇u|² + C`,
///
/// with the neighborhood energy weighted by [`collar_cutoff`].
pub fn local_deficit(
    mesh: &DiskMesh,
    u: &ScalarField,
    region: LocalRegion,
    delta: f64,
    epsilon: f64,
    constant: f64,
) -> Result<DeficitReport> {
    u.validate(mesh)?;
    check_parameters(delta, epsilon)?;
    region.check(delta)?;
    check_zero_mean(mesh, u)?;
    let (left, family) = region_log_mass(mesh, u, &region)?;
    let left = if region.is_interior() { 16.0 * PI * left } else { 4.0 * PI * left };
    let total = mesh.stiffness().bilinear(u, u);
    let right = localized_dirichlet(mesh, u, &region, delta) + epsilon * total + constant;
    Ok(DeficitReport::new(family, delta, left, right, constant))
}

/// `log ∫_{region} e^u` (area measure for interior regions, arc length for
/// arcs).
fn region_log_mass(mesh: &DiskMesh, u: &ScalarField, region: &LocalRegion) -> Result<(f64, &'static str)> {
    let empty = || Error::Config(format!("region {region:?} contains no mesh nodes"));
    match region {
        LocalRegion::Interior { .. } => {
            let inside = |i: usize| region.distance(mesh.nodes()[i]) == 0.0;
            Ok((log_int_area(mesh, u, Some(&inside)).ok_or_else(empty)?, "local-interior"))
        }
        LocalRegion::BoundaryArc { .. } => {
            let bn = mesh.boundary_nodes();
            let inside = |j: usize| region.distance(mesh.nodes()[bn[j]]) <= 1e-12;
            Ok((log_int_boundary(mesh, u, Some(&inside)).ok_or_else(empty)?, "local-boundary"))
        }
    }
}

/// Several separated regions each holding at least a fraction `γ` of the
/// mass. For zero-mean `u` the coefficient improves by the number `l` of
/// regions:
///
/// * interior: `8lπ log∫_D e^u ≤ (1 + ε)∫|∇u|² + C`,
/// * boundary: `4lπ log∫_{S¹} e^u ≤ (1 + ε)∫|∇u|² + C`.
pub fn multi_region_deficit(
    mesh: &DiskMesh,
    u: &ScalarField,
    regions: &[LocalRegion],
    gamma: f64,
    delta: f64,
    epsilon: f64,
    constant: f64,
) -> Result<DeficitReport> {
    u.validate(mesh)?;
    check_parameters(delta, epsilon)?;
    check_zero_mean(mesh, u)?;
    let l = regions.len();
    if l == 0 {
        return Err(Error::Config("at least one region is required".into()));
    }
    let interior = regions[0].is_interior();
    if regions.iter().any(|r| r.is_interior() != interior) {
        return Err(Error::Config("regions must all be interior or all boundary arcs".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0 / l as f64) {
        return Err(Error::Config(format!("γ = {gamma} must lie in (0, 1/{l})")));
    }
    for r in regions {
        r.check(delta)?;
    }
    // δ-neighborhoods must be disjoint: test on nodes
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if mesh
                .nodes()
                .iter()
                .any(|&p| a.distance(p) < delta && b.distance(p) < delta)
            {
                return Err(Error::Config(format!(
                    "δ-neighborhoods of {a:?} and {b:?} overlap"
                )));
            }
        }
    }
    let total = if interior {
        log_int_area(mesh, u, None)
    } else {
        log_int_boundary(mesh, u, None)
    }
    .expect("positive weights");
    for r in regions {
        let (part, _) = region_log_mass(mesh, u, r)?;
        let fraction = exp(part - total);
        if fraction < gamma {
            return Err(Error::Precondition(format!(
                "region {r:?} holds mass fraction {fraction:.4} < γ = {gamma}"
            )));
        }
    }
    let coefficient = if interior { 8.0 } else { 4.0 } * l as f64 * PI;
    let left = coefficient * total;
    let right = (1.0 + epsilon) * mesh.stiffness().bilinear(u, u) + constant;
    let family = if interior { "multi-interior" } else { "multi-boundary" };
    Ok(DeficitReport::new(family, l as f64, left, right, constant))
}

/// Lebedev–Milin deficits on the equality family `log|φ_a'|`, `a = (s, 0)`.
pub fn mobius_lebedev_milin_sweep(mesh: &DiskMesh, radii: &[f64]) -> Result<Vec<DeficitReport>> {
    radii
        .iter()
        .map(|&s| {
            let u = mobius_log_derivative(mesh, [s, 0.0])?;
            Ok(lebedev_milin_deficit(mesh, &u)?.with_param("mobius-lebedev-milin", s))
        })
        .collect()
}

/// Interior inequality deficits along centered bubbles of increasing
/// concentration.
pub fn interior_bubble_sweep(
    mesh: &DiskMesh,
    lambdas: &[f64],
    variant: MtVariant,
    constant: f64,
) -> Result<Vec<DeficitReport>> {
    lambdas
        .iter()
        .map(|&l| {
            let u = interior_bubble(mesh, l, [0.0, 0.0])?;
            let family = format!("interior-bubble-{}", variant.name());
            Ok(mt_interior_deficit(mesh, &u, variant, constant)?.with_param(family, l))
        })
        .collect()
}

/// Running minimum of the deficits, in sweep order.
pub fn running_infimum(reports: &[DeficitReport]) -> Vec<f64> {
    let mut m = f64::INFINITY;
    reports
        .iter()
        .map(|r| {
            m = m.min(r.deficit);
            m
        })
        .collect()
}

/// Least-squares slope of `log∫_{S¹} e^{u − ⨍_D u}` against `∫|∇u|²` over a
/// family: the effective constant of the boundary inequality along it.
pub fn boundary_growth_coefficient(mesh: &DiskMesh, family: &[ScalarField]) -> Result<f64> {
    if family.len() < 2 {
        return Err(Error::Precondition("need at least two fields to fit a slope".into()));
    }
    let mut xs = Vec::with_capacity(family.len());
    let mut ys = Vec::with_capacity(family.len());
    for u in family {
        let v = mesh.zero_mean(u);
        xs.push(mesh.stiffness().bilinear(&v, &v));
        ys.push(log_int_boundary(mesh, &v, None).expect("positive weights"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
