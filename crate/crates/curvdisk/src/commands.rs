//! The six commands. Each writes its files under the output directory and
//! returns a one-line summary, or a [`RunError`] carrying the exit status.

use std::f64::consts::PI;
use std::path::Path;

use curvdisk_core::diagnostics::{
    check_perturbation_base, radial_bubble, refinement_level, sweep_entry, RefinementProblem,
    RefinementTable, SweepResult,
};
use curvdisk_core::inequality::{
    exp_symmetrize, interior_bubble, interior_bubble_sweep, lebedev_milin_deficit, local_deficit,
    mobius_field, mobius_lebedev_milin_sweep, mobius_log_derivative, mt_boundary_area_mean_deficit, mt_interior_deficit,
    multi_region_deficit, running_infimum, LocalRegion, MtVariant,
};
use curvdisk_core::mesh::area_integral;
use curvdisk_core::solver::{minimize_joint, solve_limit_0, solve_limit_2pi, Side};
use curvdisk_core::{
    build_mesh, sample_curvatures, BoundaryTrace, DeficitReport, DiskMesh, Error, ScalarField,
    SolveResult, SymmetryGroup, TWO_PI,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{RefineProblemConfig, RunConfig};
use crate::io::{self, Check};
use crate::{RunError, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    SolveLimit(Side),
    CheckInequalities,
    Verify,
    Refine,
    Perturb,
}

pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    std::fs::create_dir_all(out)
        .map_err(|e| RunError::failure(format!("cannot create {}: {e}", out.display())))?;
    let effective = toml::to_string(cfg).map_err(|e| RunError::failure(e.to_string()))?;
    std::fs::write(out.join("config.toml"), effective)
        .map_err(|e| RunError::failure(format!("cannot write config echo: {e}")))?;
    match command {
        Command::Solve => solve(cfg, out),
        Command::SolveLimit(side) => solve_limit(cfg, side, out),
        Command::CheckInequalities => check_inequalities(cfg, out),
        Command::Verify => verify(cfg, out),
        Command::Refine => refine(cfg, out),
        Command::Perturb => perturb(cfg, out),
    }
}

/// The hypothesis behind each admissible set, for error messages.
#[derive(Debug, Clone, Copy)]
enum Problem {
    Joint,
    Limit(Side),
}

impl Problem {
    fn hypothesis(self) -> &'static str {
        match self {
            Problem::Joint => {
                "the admissible set {u : ∫K e^u > 0, ∫h e^(u/2) > 0} is empty; existence needs \
                 K > 0 somewhere in the open disk and h > 0 somewhere on the circle"
            }
            Problem::Limit(Side::Zero) => {
                "the admissible set {u : ∫h e^(u/2) > 0} of the ρ = 0 problem is empty; it needs \
                 h > 0 somewhere on the circle"
            }
            Problem::Limit(Side::TwoPi) => {
                "the admissible set {u : ∫K e^u > 0} of the ρ = 2π problem is empty; it needs \
                 K > 0 somewhere in the open disk"
            }
        }
    }

    fn uses_k(self) -> bool {
        !matches!(self, Problem::Limit(Side::Zero))
    }

    fn uses_h(self) -> bool {
        !matches!(self, Problem::Limit(Side::TwoPi))
    }
}

fn infeasible(problem: Problem, detail: &str) -> RunError {
    RunError::new(Status::Infeasible, format!("infeasible data: {} ({detail})", problem.hypothesis()))
}

fn check_feasible(problem: Problem, mesh: &DiskMesh, k: &ScalarField, h: &BoundaryTrace) -> Result<(), RunError> {
    if problem.uses_k() && !(0..mesh.num_nodes()).any(|i| !mesh.is_boundary(i) && k[i] > 0.0) {
        return Err(infeasible(problem, "K ≤ 0 at every interior node"));
    }
    if problem.uses_h() && !h.iter().any(|v| *v > 0.0) {
        return Err(infeasible(problem, "h ≤ 0 at every boundary node"));
    }
    Ok(())
}

fn core_error(problem: Problem, e: Error, out: &Path) -> RunError {
    match e {
        Error::Infeasible(detail) => infeasible(problem, &detail),
        Error::EndpointCollapse(report) => {
            let path = out.join("endpoint.json");
            if let Err(w) = io::write_json(&path, &report) {
                return RunError::failure(format!("{w:#}"));
            }
            RunError::new(
                Status::EndpointCollapse,
                format!(
                    "endpoint collapse: ρ → {} ({}); report written to {}",
                    report.side.name(),
                    report.message,
                    path.display()
                ),
            )
        }
        e => RunError::failure(e.to_string()),
    }
}

fn emit(out: &Path, mesh: &DiskMesh, r: &SolveResult) -> anyhow::Result<()> {
    io::write_mesh(out, mesh)?;
    io::write_solution(&out.join("solution.csv"), mesh, &r.u_solution)?;
    io::write_json(&out.join("report.json"), &r.diagnostics)?;
    io::write_history(&out.join("history.csv"), &r.energy_history)
}

fn finish_solve(out: &Path, mesh: &DiskMesh, r: &SolveResult, max_iterations: usize) -> Result<String, RunError> {
    emit(out, mesh, r)?;
    let d = &r.diagnostics;
    if !r.converged {
        return Err(RunError::failure(format!(
            "no convergence within {max_iterations} iterations (gradient norm {:e}); outputs written to {}",
            r.gradient_norm,
            out.display()
        )));
    }
    Ok(format!(
        "converged in {} iterations: rho = {}, energy = {}, gauss-bonnet residual = {:e}, weak residual = {:e}",
        r.iterations,
        r.rho_min,
        r.energy.total,
        d.gauss_bonnet_residual,
        d.weak_residual()
    ))
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let p = cfg.prepare()?;
    let (k, h) = sample_curvatures(&p.curvature, &p.mesh).map_err(|e| RunError::failure(e.to_string()))?;
    check_feasible(Problem::Joint, &p.mesh, &k, &h)?;
    let r = minimize_joint(&p.mesh, &k, &h, &p.solve).map_err(|e| core_error(Problem::Joint, e, out))?;
    finish_solve(out, &p.mesh, &r, p.solve.max_iterations)
}

pub fn solve_limit(cfg: &RunConfig, side: Side, out: &Path) -> Result<String, RunError> {
    let p = cfg.prepare()?;
    let (k, h) = sample_curvatures(&p.curvature, &p.mesh).map_err(|e| RunError::failure(e.to_string()))?;
    let problem = Problem::Limit(side);
    check_feasible(problem, &p.mesh, &k, &h)?;
    let r = match side {
        Side::Zero => solve_limit_0(&p.mesh, &h, &p.solve),
        Side::TwoPi => solve_limit_2pi(&p.mesh, &k, &p.solve),
    }
    .map_err(|e| core_error(problem, e, out))?;
    finish_solve(out, &p.mesh, &r, p.solve.max_iterations)
}

/// `c r² + Σ_{m=1}^{4} r^m (a_m cos mθ + b_m sin mθ)` with coefficients
/// uniform in `[-1, 1]`.
fn random_field(mesh: &DiskMesh, rng: &mut StdRng) -> ScalarField {
    let c: f64 = rng.gen_range(-1.0..1.0);
    let modes: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ScalarField::from_fn(mesh, |x, y| {
        let (r, t) = (x.hypot(y), y.atan2(x));
        let series: f64 = modes
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let m = (i + 1) as f64;
                r.powi(i as i32 + 1) * (a * (m * t).cos() + b * (m * t).sin())
            })
            .sum();
        c * r * r + series
    })
}

#[derive(Debug, Clone, serde::Serialize)]
struct Violation {
    family: String,
    param: f64,
    deficit: f64,
    bound: String,
}

#[derive(Debug, Clone, serde::Serialize)]
struct Skipped {
    family: String,
    param: f64,
    reason: String,
}

pub fn check_inequalities(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let q = &cfg.inequalities;
    let fail = |e: Error| RunError::failure(e.to_string());
    let mesh = build_mesh(q.n_radial, q.n_angular, cfg.group.rotation_order()).map_err(fail)?;
    let group = SymmetryGroup::new(cfg.group, &mesh).map_err(fail)?;
    let tol = q.tolerance();

    // asserted: the sharp boundary inequality, on its equality family and on
    // random smooth fields
    let mobius = mobius_lebedev_milin_sweep(&mesh, &q.radii).map_err(fail)?;
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let fields: Vec<ScalarField> = (0..q.random_fields).map(|_| random_field(&mesh, &mut rng)).collect();
    let random = fields
        .par_iter()
        .enumerate()
        .map(|(i, u)| Ok(lebedev_milin_deficit(&mesh, u)?.with_param("random-lebedev-milin", i as f64)))
        .collect::<Result<Vec<_>, Error>>()
        .map_err(fail)?;

    let mut violations = Vec::new();
    for r in mobius.iter().chain(&random) {
        if !(r.deficit >= -tol) {
            violations.push(Violation {
                family: r.family.clone(),
                param: r.param,
                deficit: r.deficit,
                bound: format!(">= -{tol:e}"),
            });
        }
    }
    for r in &mobius {
        if r.deficit > q.sharpness {
            violations.push(Violation {
                family: r.family.clone(),
                param: r.param,
                deficit: r.deficit,
                bound: format!("<= {:e}", q.sharpness),
            });
        }
    }

    // reported: inequalities whose best constant is not pinned down
    let variants = [MtVariant::MeanForm, MtVariant::BoundaryMeanForm];
    let mut bubble_sweeps = variants
        .par_iter()
        .map(|&v| interior_bubble_sweep(&mesh, &q.lambdas, v, q.constant))
        .collect::<Result<Vec<_>, Error>>()
        .map_err(fail)?;
    // centered bubbles are radial, so subtracting the boundary value gives
    // the zero trace the Dirichlet form needs
    let dirichlet = q
        .lambdas
        .par_iter()
        .map(|&l| {
            let b = interior_bubble(&mesh, l, [0.0, 0.0])?;
            let u = b.shifted(-b.trace(&mesh)[0]);
            Ok(mt_interior_deficit(&mesh, &u, MtVariant::Dirichlet, q.constant)?
                .with_param("interior-bubble-mt-dirichlet", l))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(fail)?;
    bubble_sweeps.insert(0, dirichlet);
    let area_mean = q
        .radii
        .par_iter()
        .map(|&a| {
            let u = mobius_field(&mesh, [a, 0.0])?;
            Ok(mt_boundary_area_mean_deficit(&mesh, &u, q.constant)?.with_param("mobius-mt-boundary-area-mean", a))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(fail)?;
    let disc = LocalRegion::Interior { center: [0.0, 0.0], radius: 0.3 };
    let local_interior = q
        .lambdas
        .par_iter()
        .map(|&l| {
            let u = mesh.zero_mean(&interior_bubble(&mesh, l, [0.0, 0.0])?);
            Ok(local_deficit(&mesh, &u, disc, q.delta, q.epsilon, q.constant)?.with_param("local-interior-bubble", l))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(fail)?;
    let arc = LocalRegion::BoundaryArc { center_angle: 0.0, half_width: 0.3 };
    let local_boundary = q
        .radii
        .par_iter()
        .map(|&a| {
            let u = mesh.zero_mean(&mobius_log_derivative(&mesh, [a, 0.0])?);
            Ok(local_deficit(&mesh, &u, arc, q.delta, q.epsilon, q.constant)?.with_param("local-boundary-mobius", a))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(fail)?;

    // one arc per rotation, each expected to hold an equal share of the mass
    let l = cfg.group.rotation_order();
    let arcs: Vec<LocalRegion> = (0..l)
        .map(|j| LocalRegion::BoundaryArc {
            center_angle: TWO_PI * j as f64 / l as f64,
            half_width: 0.3f64.min(PI / (2.0 * l as f64)),
        })
        .collect();
    let gamma = 0.6 / l as f64;
    let multi: Vec<Result<DeficitReport, (f64, Error)>> = q
        .concentrations
        .par_iter()
        .map(|&a| {
            let u = mobius_log_derivative(&mesh, [a, 0.0]).map_err(|e| (a, e))?;
            let s = mesh.zero_mean(&exp_symmetrize(&group, &u));
            multi_region_deficit(&mesh, &s, &arcs, gamma, q.delta, q.epsilon, q.constant)
                .map(|r| r.with_param("multi-arc-symmetric-mobius", a))
                .map_err(|e| (a, e))
        })
        .collect();
    let mut skipped = Vec::new();
    let mut multi_ok = Vec::new();
    for m in multi {
        match m {
            Ok(r) => multi_ok.push(r),
            Err((a, Error::Precondition(reason))) => skipped.push(Skipped {
                family: "multi-arc-symmetric-mobius".into(),
                param: a,
                reason,
            }),
            Err((_, e)) => return Err(fail(e)),
        }
    }

    let mut all: Vec<DeficitReport> = mobius.clone();
    all.extend(random);
    let reported: Vec<&Vec<DeficitReport>> =
        bubble_sweeps.iter().chain([&area_mean, &local_interior, &local_boundary, &multi_ok]).collect();
    let infima: serde_json::Map<String, serde_json::Value> = reported
        .iter()
        .filter(|rs| !rs.is_empty())
        .map(|rs| (rs[0].family.clone(), json!(running_infimum(rs))))
        .collect();
    for rs in reported {
        all.extend(rs.iter().cloned());
    }
    io::write_deficits(&out.join("deficits.csv"), &all)?;
    io::write_json(
        &out.join("inequalities.json"),
        &json!({
            "n_radial": q.n_radial,
            "n_angular": q.n_angular,
            "tolerance": tol,
            "sharpness": q.sharpness,
            "asserted_families": ["mobius-lebedev-milin", "random-lebedev-milin"],
            "violations": violations,
            "running_infimum": infima,
            "skipped": skipped,
        }),
    )?;

    if violations.is_empty() {
        let worst = mobius.iter().map(|r| r.deficit).fold(f64::INFINITY, f64::min);
        Ok(format!(
            "{} deficits written; asserted families within tolerance {tol:e} (smallest equality-family deficit {worst:e})",
            all.len()
        ))
    } else {
        let list: Vec<String> = violations
            .iter()
            .map(|v| format!("{} at param {}: deficit {:e} (needs {})", v.family, v.param, v.deficit, v.bound))
            .collect();
        Err(RunError::new(
            Status::DeficitViolation,
            format!("deficit violation (tolerance {tol:e}): {}", list.join("; ")),
        ))
    }
}

fn verify_limit0(mesh: &DiskMesh, cfg: &RunConfig) -> Result<(Vec<Check>, SolveResult), Error> {
    let h = BoundaryTrace::constant(mesh, 1.0);
    let r = solve_limit_0(mesh, &h, &cfg.solve_config())?;
    let case = "limit0-flat";
    let checks = vec![
        Check::at_most(case, "unconverged", f64::from(u8::from(!r.converged)), 0.0),
        Check::at_most(case, "max_abs_u", r.u_solution.max_abs(), 1e-3),
        Check::at_most(case, "weak_residual", r.diagnostics.weak_residual(), 1e-6),
    ];
    Ok((checks, r))
}

fn verify_limit2pi(mesh: &DiskMesh, cfg: &RunConfig) -> Result<(Vec<Check>, SolveResult), Error> {
    let k = ScalarField::constant(mesh, 1.0);
    let r = solve_limit_2pi(mesh, &k, &cfg.solve_config())?;
    let case = "limit2pi-hemisphere";
    let exp_u: ScalarField = r.u_solution.iter().map(|v| v.exp()).collect::<Vec<_>>().into();
    let mass = area_integral(mesh, &exp_u)?;
    let checks = vec![
        Check::at_most(case, "unconverged", f64::from(u8::from(!r.converged)), 0.0),
        Check::at_most(case, "max_error_vs_bubble", r.u_solution.max_abs_diff(&radial_bubble(mesh, 1.0)), 5e-3),
        Check::at_most(case, "area_mass_error", (mass - TWO_PI).abs(), 1e-3),
    ];
    Ok((checks, r))
}

/// The two limiting problems with closed-form solutions: `u ≡ 0` for
/// `K ≡ 0, h ≡ 1` at `ρ = 0` and the hemisphere bubble for `K ≡ 1, h ≡ 0`
/// at `ρ = 2π`.
pub fn verify(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let p = cfg.prepare()?;
    let (a, b) = rayon::join(|| verify_limit0(&p.mesh, cfg), || verify_limit2pi(&p.mesh, cfg));
    let (ca, ra) = a.map_err(|e| core_error(Problem::Limit(Side::Zero), e, out))?;
    let (cb, rb) = b.map_err(|e| core_error(Problem::Limit(Side::TwoPi), e, out))?;
    let checks: Vec<Check> = ca.into_iter().chain(cb).collect();
    io::write_checks(&out.join("verify.csv"), &checks)?;
    io::write_json(
        &out.join("verify.json"),
        &json!({
            "checks": checks,
            "limit0-flat": ra.diagnostics,
            "limit2pi-hemisphere": rb.diagnostics,
        }),
    )?;
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.pass).map(|c| format!("{} {} = {:e} > {:e}", c.case, c.quantity, c.value, c.tolerance)).collect();
    if failed.is_empty() {
        Ok(format!("{} checks passed", checks.len()))
    } else {
        Err(RunError::failure(format!("verification failed: {}", failed.join("; "))))
    }
}

pub fn refine(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let problem = match cfg.refine.problem {
        RefineProblemConfig::HemisphereBubble => RefinementProblem::HemisphereBubble,
        RefineProblemConfig::ConstantCurvature => RefinementProblem::ConstantCurvature,
        RefineProblemConfig::Joint => RefinementProblem::Joint {
            curvature: cfg
                .curvature
                .parametric()
                .ok_or_else(|| RunError::failure("a joint refinement study needs parametric curvature"))?,
        },
    };
    let ladder = cfg.refine.ladder();
    curvdisk_core::diagnostics::check_ladder(&ladder).map_err(|e| RunError::failure(e.to_string()))?;
    let solve = cfg.solve_config();
    let rows = ladder
        .par_iter()
        .map(|&(nr, na)| refinement_level(&problem, nr, na, &solve))
        .collect();
    let table = RefinementTable::from_rows(rows);
    io::write_refinement(&out.join("refine.csv"), &table)?;
    io::write_json(&out.join("refine.json"), &table)?;
    let failed: Vec<String> = table
        .rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("{}x{}: {f}", r.n_radial, r.n_angular)))
        .collect();
    if !failed.is_empty() {
        return Err(RunError::failure(format!("refinement levels failed: {}", failed.join("; "))));
    }
    Ok(match table.order {
        Some(o) => format!("{} levels; estimated order {o:.3}", table.rows.len()),
        None => format!("{} levels; no closed-form error, order not estimated", table.rows.len()),
    })
}

pub fn perturb(cfg: &RunConfig, out: &Path) -> Result<String, RunError> {
    let p = cfg.prepare()?;
    let spec = cfg.perturbation_spec(&p.mesh)?;
    check_perturbation_base(&p.mesh, &p.group, &spec).map_err(|e| RunError::failure(e.to_string()))?;
    let entries = cfg
        .perturb
        .epsilons
        .par_iter()
        .map(|&eps| sweep_entry(&p.mesh, &spec, eps, &p.solve))
        .collect();
    let sweep = SweepResult::from_entries(entries).map_err(|e| RunError::failure(e.to_string()))?;
    io::write_sweep(&out.join("sweep.csv"), &sweep.entries)?;
    io::write_json(&out.join("sweep.json"), &sweep)?;
    match sweep.max_feasible_epsilon {
        Some(eps) => Ok(format!(
            "max_feasible_epsilon = {eps}; retained entries {} a prefix of the grid",
            if sweep.monotone { "form" } else { "do not form" }
        )),
        None => Err(RunError::failure(format!(
            "no ε on the grid was retained (first status: {})",
            sweep.entries.first().map_or("none", |e| e.status.as_str())
        ))),
    }
}
