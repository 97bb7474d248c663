//! Residuals of computed solutions, refinement studies, perturbation sweeps
//! and coercivity probes.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::curvature::{sample_boundary, sample_disk, CurvatureProfile, CurvatureSpec};
use crate::energy::{evaluate, EnergyBreakdown, RhoValue};
use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, ScalarField};
use crate::math::{dot, exp, ln, sqrt};
use crate::mesh::{build_mesh, DiskMesh};
use crate::solver::{minimize_joint, solve_limit_0, solve_limit_2pi, SolveConfig, SolveResult};
use crate::symmetry::SymmetryGroup;
use crate::TWO_PI;

const PI: f64 = core::f64::consts::PI;

/// Gauss–Bonnet residual accepted for a retained solve.
pub const GAUSS_BONNET_TOLERANCE: f64 = 1e-4;

/// Relative residual of the `ρ` identity accepted for a retained solve.
pub const RHO_CONSTRAINT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsReport {
    pub gauss_bonnet_residual: f64,
    pub weak_residual_interior: f64,
    pub weak_residual_boundary: f64,
    /// `|(2π−ρ)²/ρ − (∫h e^{u/2})²/∫K e^u|` relative to `(2π−ρ)²/ρ`; zero
    /// for the limiting problems, where the identity does not apply.
    pub rho_constraint_residual: f64,
    pub symmetry_residual: f64,
    pub rho: f64,
    pub energy: EnergyBreakdown,
    pub converged: bool,
    pub iterations: usize,
}

impl DiagnosticsReport {
    pub fn weak_residual(&self) -> f64 {
        self.weak_residual_interior.max(self.weak_residual_boundary)
    }

    /// Gauss–Bonnet and (for interior `ρ`) the `ρ` identity within the
    /// retention tolerances.
    pub fn is_consistent(&self) -> bool {
        self.gauss_bonnet_residual <= GAUSS_BONNET_TOLERANCE
            && self.rho_constraint_residual <= RHO_CONSTRAINT_TOLERANCE
    }
}

/// `|∫K e^u + ∫h e^{u/2} − 2π|`.
pub fn gauss_bonnet_residual(mesh: &DiskMesh, k: &ScalarField, h: &BoundaryTrace, u: &ScalarField) -> Result<f64> {
    k.validate(mesh)?;
    h.validate(mesh)?;
    u.validate(mesh)?;
    let q = mesh.quadrature();
    let area: f64 = (0..u.len()).map(|i| q.node_weights()[i] * k[i] * exp(u[i])).sum();
    let boundary: f64 = mesh
        .boundary_nodes()
        .iter()
        .enumerate()
        .map(|(j, &i)| q.boundary_weights()[j] * h[j] * exp(0.5 * u[i]))
        .sum();
    Ok((area + boundary - TWO_PI).abs())
}

/// The residual functional `v ↦ ∫∇u·∇v − 2∫K e^u v + 2∫_{S¹} v − 2∫_{S¹} h e^{u/2} v`
/// on the hat basis.
pub fn weak_residual_load(mesh: &DiskMesh, k: &ScalarField, h: &BoundaryTrace, u: &ScalarField) -> Result<Vec<f64>> {
    k.validate(mesh)?;
    h.validate(mesh)?;
    u.validate(mesh)?;
    let q = mesh.quadrature();
    let mut r = mesh.stiffness().apply(u);
    for i in 0..u.len() {
        r[i] -= 2.0 * q.node_weights()[i] * k[i] * exp(u[i]);
    }
    for (j, &i) in mesh.boundary_nodes().iter().enumerate() {
        let b = q.boundary_weights()[j];
        r[i] += 2.0 * b - 2.0 * b * h[j] * exp(0.5 * u[i]);
    }
    Ok(r)
}

/// `H¹` dual norms of the residual functional restricted to hat functions of
/// interior nodes and of boundary nodes.
pub fn weak_residual(mesh: &DiskMesh, k: &ScalarField, h: &BoundaryTrace, u: &ScalarField) -> Result<(f64, f64)> {
    let r = weak_residual_load(mesh, k, h, u)?;
    let mut interior = r.clone();
    let mut boundary = r;
    for i in 0..interior.len() {
        if mesh.is_boundary(i) {
            interior[i] = 0.0;
        } else {
            boundary[i] = 0.0;
        }
    }
    Ok((mesh.h1_dual_norm(&interior), mesh.h1_dual_norm(&boundary)))
}

/// Relative residual of `(2π−ρ)²/ρ = (∫h e^{u/2})²/∫K e^u`.
pub fn rho_constraint_residual(log_area: f64, log_boundary: f64, rho: f64) -> f64 {
    let lhs = ln(TWO_PI - rho) * 2.0 - ln(rho);
    let rhs = 2.0 * log_boundary - log_area;
    // |e^{rhs} − e^{lhs}| / e^{lhs}
    (exp(rhs - lhs) - 1.0).abs()
}

/// Assembles the report for a minimizer `u_min` and its normalization
/// `u_solution`.
pub fn diagnose(
    mesh: &DiskMesh,
    group: &SymmetryGroup,
    k: &ScalarField,
    h: &BoundaryTrace,
    u_min: &ScalarField,
    u_solution: &ScalarField,
    rho: RhoValue,
    energy: EnergyBreakdown,
    converged: bool,
    iterations: usize,
) -> DiagnosticsReport {
    let gb = gauss_bonnet_residual(mesh, k, h, u_solution).unwrap_or(f64::INFINITY);
    let (wi, wb) = weak_residual(mesh, k, h, u_solution).unwrap_or((f64::INFINITY, f64::INFINITY));
    let rho_residual = if rho.is_endpoint() {
        0.0
    } else {
        match evaluate(mesh, Some(k), Some(h), u_min, rho, false) {
            Ok(e) => rho_constraint_residual(e.log_area.unwrap(), e.log_boundary.unwrap(), rho.get()),
            Err(_) => f64::INFINITY,
        }
    };
    DiagnosticsReport {
        gauss_bonnet_residual: gb,
        weak_residual_interior: wi,
        weak_residual_boundary: wb,
        rho_constraint_residual: rho_residual,
        symmetry_residual: group.symmetry_residual(u_min),
        rho: rho.get(),
        energy,
        converged,
        iterations,
    }
}

/// `2 log(2μ/(1 + μ²|x|²))`: solves `−Δu = 2e^u` with
/// `∂u/∂η + 2 = 2h e^{u/2}` for the constant `h = (1 − μ²)/(2μ)`, and has
/// `∫e^u = 4πμ²/(1 + μ²)`.
pub fn radial_bubble(mesh: &DiskMesh, mu: f64) -> ScalarField {
    ScalarField::from_fn(mesh, |x, y| 2.0 * ln(2.0 * mu / (1.0 + mu * mu * (x * x + y * y))))
}

/// Concentration of the radial solution for `K ≡ 1, h ≡ 1`: the positive
/// root of `μ² + 2μ − 1 = 0`.
pub fn constant_curvature_mu() -> f64 {
    sqrt(2.0) - 1.0
}

/// Mass `ρ = ∫e^u` of the radial solution for `K ≡ 1, h ≡ 1`, `(2 − √2)π`.
pub fn constant_curvature_rho() -> f64 {
    (2.0 - sqrt(2.0)) * PI
}

/// Problems with a known or self-referenced convergence target.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum RefinementProblem {
    /// `K ≡ 1, h ≡ 0` at `ρ = 2π`; error is the max-norm distance to
    /// `2 log(2/(1+|x|²))`.
    HemisphereBubble,
    /// `K ≡ 1, h ≡ 1` solved jointly; error is `|ρ̂ − (2 − √2)π|`, field
    /// error against [`radial_bubble`] with [`constant_curvature_mu`].
    ConstantCurvature,
    /// Any data solved jointly; errors are measured against the finest level.
    Joint { curvature: CurvatureSpec },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefinementRow {
    pub n_radial: usize,
    pub n_angular: usize,
    pub converged: bool,
    pub rho: f64,
    /// Primary error against the closed form, when there is one.
    pub error: Option<f64>,
    /// Max-norm field error against the closed form, when there is one.
    pub field_error: Option<f64>,
    /// `|ρ̂ − ρ̂_finest|`.
    pub rho_diff_finest: f64,
    pub gauss_bonnet_residual: f64,
    pub weak_residual: f64,
    pub iterations: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    /// `log₂(e_{i−1}/e_i)` between consecutive levels.
    pub pairwise_orders: Vec<Option<f64>>,
    /// Least-squares slope of `log e` against `log h`.
    pub order: Option<f64>,
}

/// The mesh ladder must double both resolutions at every step.
pub fn check_ladder(levels: &[(usize, usize)]) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::Precondition(format!(
            "a refinement study needs at least 3 levels, got {}",
            levels.len()
        )));
    }
    for w in levels.windows(2) {
        if w[1].0 != 2 * w[0].0 || w[1].1 != 2 * w[0].1 {
            return Err(Error::Precondition(format!(
                "levels {:?} → {:?} do not double the resolution",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn solve_problem(
    problem: &RefinementProblem,
    mesh: &DiskMesh,
    config: &SolveConfig,
) -> Result<(SolveResult, Option<f64>, Option<f64>)> {
    match problem {
        RefinementProblem::HemisphereBubble => {
            let k = ScalarField::constant(mesh, 1.0);
            let r = solve_limit_2pi(mesh, &k, config)?;
            let err = r.u_solution.max_abs_diff(&radial_bubble(mesh, 1.0));
            Ok((r, Some(err), Some(err)))
        }
        RefinementProblem::ConstantCurvature => {
            let k = ScalarField::constant(mesh, 1.0);
            let h = BoundaryTrace::constant(mesh, 1.0);
            let r = minimize_joint(mesh, &k, &h, config)?;
            let err = (r.rho_min - constant_curvature_rho()).abs();
            let field = r.u_solution.max_abs_diff(&radial_bubble(mesh, constant_curvature_mu()));
            Ok((r, Some(err), Some(field)))
        }
        RefinementProblem::Joint { curvature } => {
            let k = sample_disk(&curvature.gaussian, mesh)?;
            let h = sample_boundary(&curvature.geodesic, mesh)?;
            Ok((minimize_joint(mesh, &k, &h, config)?, None, None))
        }
    }
}

/// One level of a refinement study; failures are recorded in the row.
pub fn refinement_level(
    problem: &RefinementProblem,
    n_radial: usize,
    n_angular: usize,
    config: &SolveConfig,
) -> RefinementRow {
    let failed = |msg: String| RefinementRow {
        n_radial,
        n_angular,
        converged: false,
        rho: f64::NAN,
        error: None,
        field_error: None,
        rho_diff_finest: f64::NAN,
        gauss_bonnet_residual: f64::NAN,
        weak_residual: f64::NAN,
        iterations: 0,
        failure: Some(msg),
    };
    let mesh = match build_mesh(n_radial, n_angular, config.group.rotation_order()) {
        Ok(m) => m,
        Err(e) => return failed(e.to_string()),
    };
    match solve_problem(problem, &mesh, config) {
        Ok((r, error, field_error)) => RefinementRow {
            n_radial,
            n_angular,
            converged: r.converged,
            rho: r.rho_min,
            error,
            field_error,
            rho_diff_finest: f64::NAN,
            gauss_bonnet_residual: r.diagnostics.gauss_bonnet_residual,
            weak_residual: r.diagnostics.weak_residual(),
            iterations: r.iterations,
            failure: (!r.converged).then(|| "did not converge".to_string()),
        },
        Err(e) => failed(e.to_string()),
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Observed order of `errors` at mesh sizes `1/n_radial`, or `None` when an
/// error is missing or not positive.
pub fn estimated_order(n_radial: &[usize], errors: &[Option<f64>]) -> Option<f64> {
    let pts: Option<Vec<(f64, f64)>> = n_radial
        .iter()
        .zip(errors)
        .map(|(&n, e)| e.filter(|e| *e > 0.0 && e.is_finite()).map(|e| (ln(1.0 / n as f64), ln(e))))
        .collect();
    let pts = pts?;
    if pts.len() < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(slope(&xs, &ys))
}

impl RefinementTable {
    /// Fills in the finest-level differences and the orders.
    pub fn from_rows(mut rows: Vec<RefinementRow>) -> Self {
        let finest = rows.last().map(|r| r.rho).unwrap_or(f64::NAN);
        for r in &mut rows {
            r.rho_diff_finest = (r.rho - finest).abs();
        }
        let has_target = rows.iter().all(|r| r.error.is_some());
        let (ns, errs): (Vec<usize>, Vec<Option<f64>>) = if has_target {
            rows.iter().map(|r| (r.n_radial, r.error)).unzip()
        } else {
            // the finest level is the reference and has no error of its own
            rows.iter()
                .take(rows.len().saturating_sub(1))
                .map(|r| (r.n_radial, Some(r.rho_diff_finest)))
                .unzip()
        };
        let pairwise_orders = errs
            .windows(2)
            .map(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some(ln(a / b) / ln(2.0)),
                _ => None,
            })
            .collect();
        let order = if rows.iter().all(|r| r.failure.is_none()) {
            estimated_order(&ns, &errs)
        } else {
            None
        };
        RefinementTable { rows, pairwise_orders, order }
    }
}

/// Solves `problem` on every level of a doubling ladder.
pub fn refinement_study(
    problem: &RefinementProblem,
    levels: &[(usize, usize)],
    config: &SolveConfig,
) -> Result<RefinementTable> {
    check_ladder(levels)?;
    let rows = levels
        .iter()
        .map(|&(nr, na)| refinement_level(problem, nr, na, config))
        .collect();
    Ok(RefinementTable::from_rows(rows))
}

/// `K = K0 − ε·bump_K`, `h = h0 − ε·bump_h`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationSpec {
    pub base: CurvatureSpec,
    pub bump: CurvatureSpec,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepEntry {
    pub epsilon: f64,
    pub converged: bool,
    pub rho: f64,
    pub gb_residual: f64,
    pub weak_residual: f64,
    pub rho_constraint_residual: f64,
    /// `∫K e^{û₀} > 0` at the minimizer of the `ρ = 0` problem.
    pub limit0_area_positive: Option<bool>,
    /// `∫h e^{û_{2π}/2} > 0` at the minimizer of the `ρ = 2π` problem.
    pub limit2pi_boundary_positive: Option<bool>,
    pub status: String,
}

impl SweepEntry {
    /// Converged and consistent with Gauss–Bonnet and the `ρ` identity.
    pub fn retained(&self) -> bool {
        self.converged
            && self.gb_residual <= GAUSS_BONNET_TOLERANCE
            && self.rho_constraint_residual <= RHO_CONSTRAINT_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// Largest `ε` whose entry is retained; `None` if none is.
    pub max_feasible_epsilon: Option<f64>,
    /// Retained entries form a prefix of the grid.
    pub monotone: bool,
}

impl SweepResult {
    pub fn from_entries(entries: Vec<SweepEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| w[1].epsilon <= w[0].epsilon) {
            return Err(Error::Config("ε grid must be strictly increasing".into()));
        }
        let max_feasible_epsilon = entries.iter().filter(|e| e.retained()).map(|e| e.epsilon).last();
        let first_failure = entries.iter().position(|e| !e.retained()).unwrap_or(entries.len());
        let monotone = entries[first_failure..].iter().all(|e| !e.retained());
        Ok(SweepResult { entries, max_feasible_epsilon, monotone })
    }
}

/// Checks the hypotheses on the unperturbed data: nonnegative, invariant
/// under the group, neither identically zero.
pub fn check_perturbation_base(mesh: &DiskMesh, group: &SymmetryGroup, spec: &PerturbationSpec) -> Result<()> {
    let k0 = sample_disk(&spec.base.gaussian, mesh)?;
    let h0 = sample_boundary(&spec.base.geodesic, mesh)?;
    if k0.iter().any(|v| *v < 0.0) || h0.iter().any(|v| *v < 0.0) {
        return Err(Error::Config("base curvatures K0, h0 must be nonnegative".into()));
    }
    if k0.iter().all(|v| *v == 0.0) && h0.iter().all(|v| *v == 0.0) {
        return Err(Error::Config("base curvatures K0, h0 must not both vanish identically".into()));
    }
    spec.base.validate_symmetry(mesh, group)?;
    spec.bump.validate_symmetry(mesh, group)
}

fn perturbed(base: &CurvatureProfile, bump: &CurvatureProfile, mesh: &DiskMesh, eps: f64) -> Result<(ScalarField, BoundaryTrace)> {
    let k = sample_disk(base, mesh)?;
    let kb = sample_disk(bump, mesh)?;
    let h = sample_boundary(base, mesh)?;
    let hb = sample_boundary(bump, mesh)?;
    Ok((
        k.iter().zip(kb.iter()).map(|(a, b)| a - eps * b).collect::<Vec<_>>().into(),
        h.iter().zip(hb.iter()).map(|(a, b)| a - eps * b).collect::<Vec<_>>().into(),
    ))
}

/// One point of a perturbation sweep: the joint solve and the sign checks on
/// the two limiting minimizers.
pub fn sweep_entry(mesh: &DiskMesh, spec: &PerturbationSpec, epsilon: f64, config: &SolveConfig) -> SweepEntry {
    let (k, _) = match perturbed(&spec.base.gaussian, &spec.bump.gaussian, mesh, epsilon) {
        Ok(v) => v,
        Err(e) => return failed_entry(epsilon, e.to_string()),
    };
    let (_, h) = match perturbed(&spec.base.geodesic, &spec.bump.geodesic, mesh, epsilon) {
        Ok(v) => v,
        Err(e) => return failed_entry(epsilon, e.to_string()),
    };
    let limit0_area_positive = solve_limit_0(mesh, &h, config).ok().map(|r| {
        let mass: f64 = (0..mesh.num_nodes())
            .map(|i| mesh.quadrature().node_weights()[i] * k[i] * exp(r.u_min[i]))
            .sum();
        mass > 0.0
    });
    let limit2pi_boundary_positive = solve_limit_2pi(mesh, &k, config).ok().map(|r| {
        let trace = r.u_min.trace(mesh);
        dot(
            mesh.quadrature().boundary_weights(),
            &h.iter().zip(trace.iter()).map(|(h, u)| h * exp(0.5 * u)).collect::<Vec<_>>(),
        ) > 0.0
    });
    match minimize_joint(mesh, &k, &h, config) {
        Ok(r) => SweepEntry {
            epsilon,
            converged: r.converged,
            rho: r.rho_min,
            gb_residual: r.diagnostics.gauss_bonnet_residual,
            weak_residual: r.diagnostics.weak_residual(),
            rho_constraint_residual: r.diagnostics.rho_constraint_residual,
            limit0_area_positive,
            limit2pi_boundary_positive,
            status: if r.converged { "converged".into() } else { "not converged".into() },
        },
        Err(e) => SweepEntry {
            limit0_area_positive,
            limit2pi_boundary_positive,
            ..failed_entry(epsilon, e.to_string())
        },
    }
}

fn failed_entry(epsilon: f64, status: String) -> SweepEntry {
    SweepEntry {
        epsilon,
        converged: false,
        rho: f64::NAN,
        gb_residual: f64::NAN,
        weak_residual: f64::NAN,
        rho_constraint_residual: f64::NAN,
        limit0_area_positive: None,
        limit2pi_boundary_positive: None,
        status,
    }
}

/// Solves the perturbed problems over an increasing `ε` grid.
pub fn perturbation_sweep(
    mesh: &DiskMesh,
    spec: &PerturbationSpec,
    epsilons: &[f64],
    config: &SolveConfig,
) -> Result<SweepResult> {
    let group = config.group_on(mesh)?;
    check_perturbation_base(mesh, &group, spec)?;
    let entries = epsilons.iter().map(|&e| sweep_entry(mesh, spec, e, config)).collect();
    SweepResult::from_entries(entries)
}

/// Quadratic model `a t² − b t + c` of `t ↦ I(t·v, ρ)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoercivityFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub used: usize,
    /// Grid points where `t·v` left the admissible set.
    pub dropped: Vec<f64>,
}

/// Least-squares fit of `I(t·v, ρ)` over `t_grid`, where `v` is `direction`
/// with its mean removed, scaled to unit `H¹` norm.
pub fn coercivity_probe(
    mesh: &DiskMesh,
    group: &SymmetryGroup,
    k: &ScalarField,
    h: &BoundaryTrace,
    rho: RhoValue,
    direction: &ScalarField,
    t_grid: &[f64],
) -> Result<CoercivityFit> {
    k.validate(mesh)?;
    h.validate(mesh)?;
    direction.validate(mesh)?;
    if group.symmetry_residual(direction) > 1e-10 * (1.0 + direction.max_abs()) {
        return Err(Error::Precondition("probe direction is not invariant under the group".into()));
    }
    let v = mesh.zero_mean(direction);
    let seminorm = sqrt(mesh.stiffness().bilinear(&v, &v).max(0.0));
    if seminorm <= 1e-12 * (1.0 + direction.max_abs()) {
        return Err(Error::Precondition("probe direction is constant (zero norm after mean removal)".into()));
    }
    let v = v.scaled(1.0 / mesh.h1_norm(&v));
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for &t in t_grid {
        match evaluate(mesh, Some(k), Some(h), &v.scaled(t), rho, false) {
            Ok(e) => rows.push((t, e.breakdown.total)),
            Err(Error::OutsideAdmissible(_)) => dropped.push(t),
            Err(e) => return Err(e),
        }
    }
    if rows.len() < 3 {
        return Err(Error::Precondition("fewer than 3 admissible grid points".into()));
    }
    // normal equations for the basis (t², −t, 1)
    let mut m = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for &(t, y) in &rows {
        let phi = [t * t, -t, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += phi[i] * phi[j];
            }
            rhs[i] += phi[i] * y;
        }
    }
    let [a, b, c] = solve3(m, rhs).ok_or_else(|| Error::Precondition("degenerate t grid".into()))?;
    Ok(CoercivityFit { a, b, c, used: rows.len(), dropped })
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for j in col..3 {
                m[row][j] -= f * m[col][j];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|j| m[i][j] * x[j]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

/// Default `ε` grid for perturbation sweeps.
pub fn default_epsilon_grid() -> Vec<f64> {
    vec![0.0, 0.025, 0.05, 0.1, 0.2, 0.4]
}
