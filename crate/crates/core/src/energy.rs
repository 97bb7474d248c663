//! The discrete joint functional `I(u, ρ)`, its endpoint limits and exact
//! gradients.
//!
//! The functional is defined on nodal vectors with the mesh quadrature, and
//! every gradient here is the exact derivative of that discrete value, so
//! finite differences match to rounding and descent is guaranteed.
//!
//! Log-integrals factor out the largest exponent before exponentiating;
//! `e^x` is never evaluated with `x > 0`.

use alloc::vec::Vec;

use crate::error::{Admissible, Error, Result};
use crate::field::{BoundaryTrace, ScalarField};
use crate::math::{dot, exp, ln, log_weighted_exp_sum, sqrt};
use crate::mesh::DiskMesh;
use crate::TWO_PI;

const PI: f64 = core::f64::consts::PI;

/// The five summands of `I(u, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyBreakdown {
    /// `½∫|∇u|²`
    pub dirichlet: f64,
    /// `−2ρ log∫K e^u`
    pub area_log: f64,
    /// `2∫_{S¹} u`
    pub boundary_linear: f64,
    /// `−4(2π−ρ) log∫_{S¹} h e^{u/2}`
    pub boundary_log: f64,
    /// `f(ρ)`
    pub f_rho: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn assemble(dirichlet: f64, area_log: f64, boundary_linear: f64, boundary_log: f64, f_rho: f64) -> Self {
        EnergyBreakdown {
            dirichlet,
            area_log,
            boundary_linear,
            boundary_log,
            f_rho,
            total: dirichlet + area_log + boundary_linear + boundary_log + f_rho,
        }
    }
}

/// Mass parameter `ρ ∈ [0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RhoValue(f64);

impl RhoValue {
    pub const ZERO: RhoValue = RhoValue(0.0);
    pub const TWO_PI: RhoValue = RhoValue(TWO_PI);

    pub fn new(rho: f64) -> Result<Self> {
        if (0.0..=TWO_PI).contains(&rho) {
            Ok(RhoValue(rho))
        } else {
            Err(Error::Precondition(alloc::format!("ρ = {rho} is outside [0, 2π]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `2π − ρ`.
    pub fn complement(self) -> f64 {
        TWO_PI - self.0
    }

    pub fn is_endpoint(self) -> bool {
        self.0 == 0.0 || self.0 == TWO_PI
    }
}

/// `f(ρ) = 4(2π−ρ) log(2π−ρ) + 2ρ + 2ρ log ρ`, continuously extended to
/// the closed interval.
pub fn f_correction(rho: RhoValue) -> f64 {
    let r = rho.get();
    if r == 0.0 {
        8.0 * PI * ln(TWO_PI)
    } else if r == TWO_PI {
        4.0 * PI + 4.0 * PI * ln(TWO_PI)
    } else {
        let c = rho.complement();
        4.0 * c * ln(c) + 2.0 * r + 2.0 * r * ln(r)
    }
}

/// `f'(ρ) = 2 log ρ − 4 log(2π−ρ)` on the open interval.
pub fn f_correction_derivative(rho: f64) -> f64 {
    2.0 * ln(rho) - 4.0 * ln(TWO_PI - rho)
}

/// `log ∫_D K e^u`.
pub fn log_area_integral(mesh: &DiskMesh, k: &ScalarField, u: &ScalarField) -> Result<f64> {
    k.validate(mesh)?;
    u.validate(mesh)?;
    log_weighted_exp_sum(mesh.quadrature().node_weights(), k, u, 1.0)
        .map(|(l, _)| l)
        .ok_or(Error::OutsideAdmissible(Admissible::Area))
}

/// `log ∫_{S¹} h e^{u/2}`.
pub fn log_boundary_integral(mesh: &DiskMesh, h: &BoundaryTrace, u: &ScalarField) -> Result<f64> {
    h.validate(mesh)?;
    u.validate(mesh)?;
    let trace = u.trace(mesh);
    log_weighted_exp_sum(mesh.quadrature().boundary_weights(), h, &trace, 0.5)
        .map(|(l, _)| l)
        .ok_or(Error::OutsideAdmissible(Admissible::Boundary))
}

/// The `ρ` solving `(2π−ρ)²/ρ = (∫h e^{u/2})² / ∫K e^u`, from the two
/// log-integrals. It is the unique minimizer of `ρ ↦ I(u, ρ)` because
/// `f'' > 0`.
pub fn stationary_rho(log_area: f64, log_boundary: f64) -> f64 {
    let q = exp(2.0 * log_boundary - log_area);
    // smaller root of ρ² − (4π + q)ρ + 4π² = 0, written without cancellation
    if q.is_infinite() {
        return 0.0;
    }
    8.0 * PI * PI / (2.0 * TWO_PI + q + sqrt(q * (4.0 * TWO_PI + q)))
}

/// Energy, `u`-gradient and `ρ`-derivative of the discrete functional.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub breakdown: EnergyBreakdown,
    pub grad_u: Vec<f64>,
    /// `∂I/∂ρ`; `None` at the endpoints.
    pub grad_rho: Option<f64>,
    pub log_area: Option<f64>,
    pub log_boundary: Option<f64>,
}

/// Evaluates `I(u, ρ)`. `K` is only read when `ρ > 0` and `h` only when
/// `ρ < 2π`, which makes the endpoint values the limiting functionals on
/// their larger admissible sets.
pub(crate) fn evaluate(
    mesh: &DiskMesh,
    k: Option<&[f64]>,
    h: Option<&[f64]>,
    u: &[f64],
    rho: RhoValue,
    with_gradient: bool,
) -> Result<Evaluation> {
    let q = mesh.quadrature();
    let r = rho.get();
    let c = rho.complement();
    let au = mesh.stiffness().apply(u);
    let dirichlet = 0.5 * dot(u, &au);
    let bnodes = mesh.boundary_nodes();
    let bw = q.boundary_weights();
    let trace: Vec<f64> = bnodes.iter().map(|&i| u[i]).collect();
    let boundary_linear = 2.0 * dot(bw, &trace);

    let mut grad = if with_gradient { au } else { Vec::new() };

    let mut log_area = None;
    let mut area_log = 0.0;
    if r > 0.0 {
        let k = k.expect("Gaussian curvature required for ρ > 0");
        let (la, shift) = log_weighted_exp_sum(q.node_weights(), k, u, 1.0)
            .ok_or(Error::OutsideAdmissible(if r < TWO_PI { Admissible::Both } else { Admissible::Area }))?;
        area_log = -2.0 * r * la;
        if with_gradient {
            let scale = -2.0 * r * exp(shift - la);
            for i in 0..u.len() {
                grad[i] += scale * q.node_weights()[i] * k[i] * exp(u[i] - shift);
            }
        }
        log_area = Some(la);
    }

    let mut log_boundary = None;
    let mut boundary_log = 0.0;
    if r < TWO_PI {
        let h = h.expect("geodesic curvature required for ρ < 2π");
        let (lb, shift) = log_weighted_exp_sum(bw, h, &trace, 0.5)
            .ok_or(Error::OutsideAdmissible(if r > 0.0 { Admissible::Both } else { Admissible::Boundary }))?;
        boundary_log = -4.0 * c * lb;
        if with_gradient {
            let scale = -2.0 * c * exp(shift - lb);
            for (j, &node) in bnodes.iter().enumerate() {
                grad[node] += scale * bw[j] * h[j] * exp(0.5 * trace[j] - shift);
            }
        }
        log_boundary = Some(lb);
    }

    if with_gradient {
        for (j, &node) in bnodes.iter().enumerate() {
            grad[node] += 2.0 * bw[j];
        }
    }

    let grad_rho = match (log_area, log_boundary) {
        (Some(la), Some(lb)) if !rho.is_endpoint() => {
            Some(-2.0 * la + 4.0 * lb + f_correction_derivative(r))
        }
        _ => None,
    };

    Ok(Evaluation {
        breakdown: EnergyBreakdown::assemble(dirichlet, area_log, boundary_linear, boundary_log, f_correction(rho)),
        grad_u: grad,
        grad_rho,
        log_area,
        log_boundary,
    })
}

fn check_inputs(mesh: &DiskMesh, k: &ScalarField, h: &BoundaryTrace, u: &ScalarField) -> Result<()> {
    k.validate(mesh)?;
    h.validate(mesh)?;
    u.validate(mesh)
}

/// `I(u, ρ)` with its breakdown.
pub fn energy(
    mesh: &DiskMesh,
    k: &ScalarField,
    h: &BoundaryTrace,
    u: &ScalarField,
    rho: RhoValue,
) -> Result<EnergyBreakdown> {
    check_inputs(mesh, k, h, u)?;
    Ok(evaluate(mesh, Some(k), Some(h), u, rho, false)?.breakdown)
}

/// `I(u, 0) = ½∫|∇u|² + 2∫_{S¹}u − 8π log∫h e^{u/2} + 8π log 2π`.
pub fn energy_limit0(mesh: &DiskMesh, h: &BoundaryTrace, u: &ScalarField) -> Result<f64> {
    h.validate(mesh)?;
    u.validate(mesh)?;
    Ok(evaluate(mesh, None, Some(h), u, RhoValue::ZERO, false)?.breakdown.total)
}

/// `I(u, 2π) = ½∫|∇u|² + 2∫_{S¹}u − 4π log∫K e^u + 4π + 4π log 2π`.
pub fn energy_limit2pi(mesh: &DiskMesh, k: &ScalarField, u: &ScalarField) -> Result<f64> {
    k.validate(mesh)?;
    u.validate(mesh)?;
    Ok(evaluate(mesh, Some(k), None, u, RhoValue::TWO_PI, false)?.breakdown.total)
}

/// Nodal gradient of the discrete `I(·, ρ)`:
/// `A u − 2ρ (w⊙K e^u)/∫K e^u + 2b − 2(2π−ρ)(b⊙h e^{u/2})/∫h e^{u/2}`.
pub fn grad_u(
    mesh: &DiskMesh,
    k: &ScalarField,
    h: &BoundaryTrace,
    u: &ScalarField,
    rho: RhoValue,
) -> Result<ScalarField> {
    check_inputs(mesh, k, h, u)?;
    Ok(evaluate(mesh, Some(k), Some(h), u, rho, true)?.grad_u.into())
}

/// `∂I/∂ρ = −2 log∫K e^u + 4 log∫h e^{u/2} + 2 log ρ − 4 log(2π−ρ)`.
pub fn grad_rho(
    mesh: &DiskMesh,
    k: &ScalarField,
    h: &BoundaryTrace,
    u: &ScalarField,
    rho: RhoValue,
) -> Result<f64> {
    check_inputs(mesh, k, h, u)?;
    if rho.is_endpoint() {
        return Err(Error::EndpointDerivative { rho: rho.get() });
    }
    let la = log_area_integral(mesh, k, u)?;
    let lb = log_boundary_integral(mesh, h, u)?;
    Ok(-2.0 * la + 4.0 * lb + f_correction_derivative(rho.get()))
}

/// Gradient of `I(·, 0)` (only `h` enters).
pub fn grad_limit0(mesh: &DiskMesh, h: &BoundaryTrace, u: &ScalarField) -> Result<ScalarField> {
    h.validate(mesh)?;
    u.validate(mesh)?;
    Ok(evaluate(mesh, None, Some(h), u, RhoValue::ZERO, true)?.grad_u.into())
}

/// Gradient of `I(·, 2π)` (only `K` enters).
pub fn grad_limit2pi(mesh: &DiskMesh, k: &ScalarField, u: &ScalarField) -> Result<ScalarField> {
    k.validate(mesh)?;
    u.validate(mesh)?;
    Ok(evaluate(mesh, Some(k), None, u, RhoValue::TWO_PI, true)?.grad_u.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn correction_endpoint_values() {
        assert_eq!(f_correction(RhoValue::ZERO), 8.0 * PI * ln(TWO_PI));
        assert_eq!(f_correction(RhoValue::TWO_PI), 4.0 * PI + 4.0 * PI * ln(TWO_PI));
        // continuity of the extension
        let near0 = f_correction(RhoValue::new(1e-12).unwrap());
        assert!((near0 - 8.0 * PI * ln(TWO_PI)).abs() < 1e-9);
        let near2pi = f_correction(RhoValue::new(TWO_PI - 1e-12).unwrap());
        assert!((near2pi - (4.0 * PI + 4.0 * PI * ln(TWO_PI))).abs() < 1e-9);
    }

    #[test]
    fn correction_at_pi() {
        let v = f_correction(RhoValue::new(PI).unwrap());
        assert!((v - (6.0 * PI * ln(PI) + 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn rho_out_of_range_rejected() {
        assert!(RhoValue::new(-1e-9).is_err());
        assert!(RhoValue::new(TWO_PI + 1e-9).is_err());
        assert!(RhoValue::new(f64::NAN).is_err());
    }

    #[test]
    fn stationary_rho_for_constant_data() {
        // A = π, B = 2π  →  ρ = (4 − 2√3)π
        let rho = stationary_rho(ln(PI), ln(TWO_PI));
        assert!((rho - (4.0 - 2.0 * sqrt(3.0)) * PI).abs() < 1e-13);
    }

    #[test]
    fn negative_mass_is_outside_admissible_set() {
        let mesh = build_mesh(3, 16, 1).unwrap();
        let k = ScalarField::constant(&mesh, -1.0);
        let u = ScalarField::constant(&mesh, 0.0);
        assert!(matches!(
            log_area_integral(&mesh, &k, &u),
            Err(Error::OutsideAdmissible(Admissible::Area))
        ));
        let h = BoundaryTrace::constant(&mesh, 0.0);
        assert!(matches!(
            log_boundary_integral(&mesh, &h, &u),
            Err(Error::OutsideAdmissible(Admissible::Boundary))
        ));
    }

    #[test]
    fn endpoint_derivative_is_a_distinct_error() {
        let mesh = build_mesh(3, 16, 1).unwrap();
        let k = ScalarField::constant(&mesh, 1.0);
        let h = BoundaryTrace::constant(&mesh, 1.0);
        let u = ScalarField::constant(&mesh, 0.0);
        assert!(matches!(
            grad_rho(&mesh, &k, &h, &u, RhoValue::ZERO),
            Err(Error::EndpointDerivative { .. })
        ));
    }

    #[test]
    fn large_fields_do_not_overflow() {
        let mesh = build_mesh(3, 16, 1).unwrap();
        let k = ScalarField::constant(&mesh, 1.0);
        let u = ScalarField::constant(&mesh, 900.0);
        let l = log_area_integral(&mesh, &k, &u).unwrap();
        assert!((l - 900.0 - ln(mesh.quadrature().area())).abs() < 1e-10);
    }
}
