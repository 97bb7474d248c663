mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use common::smooth_field;
use curvdisk_core::diagnostics::{constant_curvature_rho, radial_bubble, weak_residual};
use curvdisk_core::energy::{log_area_integral, log_boundary_integral};
use curvdisk_core::mesh::area_integral;
use curvdisk_core::solver::*;
use curvdisk_core::{
    build_mesh, sample_curvatures, BoundaryTrace, CurvatureProfile, CurvatureSpec, DiskMesh, Error, GroupKind,
    RhoValue, ScalarField, SymmetryGroup, TWO_PI,
};

fn default_mesh() -> &'static DiskMesh {
    static MESH: OnceLock<DiskMesh> = OnceLock::new();
    MESH.get_or_init(|| build_mesh(48, 192, 2).unwrap())
}

fn small_mesh() -> &'static DiskMesh {
    static MESH: OnceLock<DiskMesh> = OnceLock::new();
    MESH.get_or_init(|| build_mesh(24, 96, 2).unwrap())
}

fn constants(m: &DiskMesh, k: f64, h: f64) -> (ScalarField, BoundaryTrace) {
    (ScalarField::constant(m, k), BoundaryTrace::constant(m, h))
}

fn z2(m: &DiskMesh) -> SymmetryGroup {
    SymmetryGroup::new(GroupKind::Cyclic { k: 2 }, m).unwrap()
}

fn area_mass(m: &DiskMesh, k: &ScalarField, u: &ScalarField) -> f64 {
    log_area_integral(m, k, u).unwrap().exp()
}

fn boundary_mass(m: &DiskMesh, h: &BoundaryTrace, u: &ScalarField) -> f64 {
    log_boundary_integral(m, h, u).unwrap().exp()
}

#[test]
fn config_validation() {
    let mut c = SolveConfig::default();
    assert!(c.validate().is_ok());
    assert_eq!(c.group, GroupKind::Cyclic { k: 2 });
    assert_eq!(c.initial_rho, PI);
    c.initial_rho = 0.0;
    assert!(c.validate().is_err());
    c.initial_rho = PI;
    c.gradient_tolerance = 0.0;
    assert!(c.validate().is_err());
    let mut c = SolveConfig::default();
    c.line_search.shrink = 1.0;
    assert!(c.validate().is_err());
}

#[test]
fn groups_with_fixed_points_are_refused() {
    let m = small_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let c = SolveConfig { group: GroupKind::Trivial, ..SolveConfig::default() };
    assert!(matches!(minimize_joint(m, &k, &h, &c), Err(Error::Config(_))));
    assert!(matches!(solve_limit_0(m, &h, &c), Err(Error::Config(_))));
}

#[test]
fn initializer_accepts_zero_for_positive_constants() {
    let m = small_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let phi = feasible_initializer(m, &k, &h, &z2(m)).unwrap();
    assert_eq!(phi.max_abs(), 0.0);
}

#[test]
fn initializer_climbs_out_of_negative_background() {
    let m = small_mesh();
    // positive only on two small antipodal bumps, −0.1 elsewhere
    let k = ScalarField::from_fn(m, |x, y| {
        let near = |cx: f64| ((x - cx).powi(2) + y * y).sqrt() < 0.2;
        if near(0.5) || near(-0.5) {
            1.0
        } else {
            -0.1
        }
    });
    let h = BoundaryTrace::constant(m, 1.0);
    assert!(area_integral(m, &k).unwrap() < 0.0);
    let g = z2(m);
    let phi = feasible_initializer(m, &k, &h, &g).unwrap();
    assert!(phi.max_abs() > 0.0);
    assert!(g.is_symmetric(&phi, 0.0));
    assert!(log_area_integral(m, &k, &phi).is_ok());
    assert!(log_boundary_integral(m, &h, &phi).is_ok());
}

#[test]
fn initializer_handles_negative_boundary_background() {
    let m = small_mesh();
    let k = ScalarField::constant(m, 1.0);
    let h = BoundaryTrace::from_angle_fn(m, |t| if (2.0 * t).cos() > 0.95 { 1.0 } else { -0.5 });
    let phi = feasible_initializer(m, &k, &h, &z2(m)).unwrap();
    assert!(log_area_integral(m, &k, &phi).is_ok());
    assert!(log_boundary_integral(m, &h, &phi).is_ok());
}

#[test]
fn negative_curvatures_are_infeasible() {
    let m = small_mesh();
    let (k, h) = constants(m, -1.0, -1.0);
    assert!(matches!(feasible_initializer(m, &k, &h, &z2(m)), Err(Error::Infeasible(_))));
    let c = SolveConfig::default();
    assert!(matches!(minimize_joint(m, &k, &h, &c), Err(Error::Infeasible(_))));
    assert!(matches!(solve_limit_0(m, &h, &c), Err(Error::Infeasible(_))));
    assert!(matches!(solve_limit_2pi(m, &k, &c), Err(Error::Infeasible(_))));
}

#[test]
fn boundary_limit_with_unit_curvature_is_flat() {
    let m = default_mesh();
    let h = BoundaryTrace::constant(m, 1.0);
    let r = solve_limit_0(m, &h, &SolveConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.u_solution.max_abs() <= 1e-3);
    assert!(r.energy.total.abs() < 1e-10);
    assert!(r.diagnostics.weak_residual() <= 1e-6);
    assert_eq!(r.rho_min, 0.0);
}

#[test]
fn boundary_limit_with_varying_curvature() {
    let m = small_mesh();
    let c = SolveConfig::default();
    for h in [
        BoundaryTrace::from_angle_fn(m, |t| 1.0 + 0.5 * (2.0 * t).cos()),
        BoundaryTrace::from_angle_fn(m, |t| 0.2 + (2.0 * t).cos()),
    ] {
        let r = solve_limit_0(m, &h, &c).unwrap();
        assert!(r.converged);
        assert!(r.diagnostics.weak_residual() <= 10.0 * c.gradient_tolerance, "{:?}", r.diagnostics);
        assert!(r.diagnostics.gauss_bonnet_residual <= 1e-4);
        assert!((boundary_mass(m, &h, &r.u_solution) - TWO_PI).abs() < 1e-9);
    }
}

#[test]
fn interior_limit_recovers_the_hemisphere() {
    let m = default_mesh();
    let k = ScalarField::constant(m, 1.0);
    let r = solve_limit_2pi(m, &k, &SolveConfig::default()).unwrap();
    assert!(r.converged);
    let exact = radial_bubble(m, 1.0);
    assert!(r.u_solution.max_abs_diff(&exact) <= 5e-3);
    assert!((area_mass(m, &k, &r.u_solution) - TWO_PI).abs() <= 1e-3);
    assert_eq!(r.rho_min, TWO_PI);
}

#[test]
fn interior_limit_with_radial_bump() {
    let m = small_mesh();
    let spec = CurvatureSpec::new(
        CurvatureProfile::RadialBump { base: 0.5, amplitude: 1.0, center: 0.3, width: 0.2 },
        CurvatureProfile::constant(0.0),
    );
    let (k, _) = sample_curvatures(&spec, m).unwrap();
    let c = SolveConfig::default();
    let r = solve_limit_2pi(m, &k, &c).unwrap();
    assert!(r.converged);
    assert!(r.diagnostics.weak_residual() <= 10.0 * c.gradient_tolerance);
    assert!(r.diagnostics.gauss_bonnet_residual <= 1e-4);
}

#[test]
fn joint_constant_curvature() {
    let m = default_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let r = minimize_joint(m, &k, &h, &SolveConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.gradient_norm <= 1e-8);
    assert!(r.rho_gradient.unwrap().abs() <= 1e-8);
    // the closed-form radial solution, not the u ≡ 0 root of the ρ equation
    assert!((r.rho_min - constant_curvature_rho()).abs() < 1e-3);
    assert!((r.rho_min - (2.0 - 2f64.sqrt()) * PI).abs() < 1e-3);
    assert!((r.rho_min - (4.0 - 2.0 * 3f64.sqrt()) * PI).abs() > 0.1);
    let exact = radial_bubble(m, curvdisk_core::diagnostics::constant_curvature_mu());
    assert!(r.u_solution.max_abs_diff(&exact) < 1e-3);
    assert!((area_mass(m, &k, &r.u_solution) - r.rho_min).abs() < 1e-8);
    assert!((boundary_mass(m, &h, &r.u_solution) - (TWO_PI - r.rho_min)).abs() < 1e-8);
    let (wi, wb) = weak_residual(m, &k, &h, &r.u_solution).unwrap();
    assert!(wi <= 1e-7 && wb <= 1e-7, "{wi:e} {wb:e}");
}

#[test]
fn small_boundary_curvature_pushes_rho_toward_two_pi() {
    let m = small_mesh();
    let (k, h) = constants(m, 1.0, 0.01);
    let r = minimize_joint(m, &k, &h, &SolveConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.rho_min > 6.0 && r.rho_min < TWO_PI);
    assert!(r.diagnostics.gauss_bonnet_residual <= 1e-4);
}

#[test]
fn nonnegative_symmetric_data_converge() {
    let m = small_mesh();
    let c = SolveConfig::default();
    let specs = [
        CurvatureSpec::constant(2.0, 0.5),
        CurvatureSpec::constant(0.0, 1.0),
        CurvatureSpec::constant(1.0, 0.0),
        CurvatureSpec::new(
            CurvatureProfile::AngularMode { base: 1.0, amplitude: 0.8, mode: 2 },
            CurvatureProfile::AngularMode { base: 1.0, amplitude: 1.0, mode: 4 },
        ),
    ];
    for spec in &specs {
        let (k, h) = sample_curvatures(spec, m).unwrap();
        let r = match (k.max_abs() > 0.0, h.max_abs() > 0.0) {
            (true, true) => minimize_joint(m, &k, &h, &c),
            (false, _) => solve_limit_0(m, &h, &c),
            (_, false) => solve_limit_2pi(m, &k, &c),
        }
        .unwrap();
        assert!(r.converged, "{spec:?}");
        assert!(r.diagnostics.is_consistent(), "{spec:?}: {:?}", r.diagnostics);
    }
}

#[test]
fn fixed_rho_descent_is_monotone_and_symmetric() {
    let m = small_mesh();
    let spec = CurvatureSpec::new(
        CurvatureProfile::AngularMode { base: 1.0, amplitude: 0.5, mode: 2 },
        CurvatureProfile::constant(1.0),
    );
    let (k, h) = sample_curvatures(&spec, m).unwrap();
    let g = z2(m);
    let init = g.symmetrize(&smooth_field(m, &[0.2, -0.5, 0.4, 0.3, 0.2, 0.0]));
    let c = SolveConfig::default();
    let r = minimize_fixed_rho(m, &k, &h, RhoValue::new(2.0).unwrap(), &init, &c).unwrap();
    assert!(r.converged);
    assert!(r.gradient_norm <= c.gradient_tolerance);
    for w in r.energy_history.windows(2) {
        assert!(w[1] <= w[0], "energy rose: {} -> {}", w[0], w[1]);
    }
    assert!(g.symmetry_residual(&r.u_min) <= 1e-10);
    let mean: f64 = r.u_min.iter().zip(m.quadrature().node_weights()).map(|(a, b)| a * b).sum();
    assert!(mean.abs() < 1e-10);
    assert_eq!(r.rho_min, 2.0);
}

#[test]
fn fixed_rho_at_the_constant_root_is_not_stationary_at_zero() {
    // u ≡ 0 balances the ρ equation but not the u equation
    let m = small_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let rho = RhoValue::new((4.0 - 2.0 * 3f64.sqrt()) * PI).unwrap();
    let zero = ScalarField::constant(m, 0.0);
    let g = curvdisk_core::energy::grad_u(m, &k, &h, &zero, rho).unwrap();
    assert!(m.h1_dual_norm(&g) > 1e-2);
    let r = minimize_fixed_rho(m, &k, &h, rho, &zero, &SolveConfig::default()).unwrap();
    assert!(r.converged);
    assert!(r.u_min.max_abs() > 1e-2);
}

#[test]
fn fixed_rho_dispatches_to_limits() {
    let m = small_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let zero = ScalarField::constant(m, 0.0);
    let c = SolveConfig::default();
    let r = minimize_fixed_rho(m, &k, &h, RhoValue::ZERO, &zero, &c).unwrap();
    assert!(r.converged && r.rho_gradient.is_none());
    let r = minimize_fixed_rho(m, &k, &h, RhoValue::TWO_PI, &zero, &c).unwrap();
    assert!(r.converged && r.u_solution.max_abs_diff(&radial_bubble(m, 1.0)) < 2e-2);
}

#[test]
fn infeasible_initial_point_is_rejected() {
    let m = small_mesh();
    let k = ScalarField::from_fn(m, |x, _| if x.abs() > 0.8 { 1.0 } else { -1.0 });
    let h = BoundaryTrace::constant(m, 1.0);
    let zero = ScalarField::constant(m, 0.0);
    let r = minimize_fixed_rho(m, &k, &h, RhoValue::new(1.0).unwrap(), &zero, &SolveConfig::default());
    assert!(matches!(r, Err(Error::OutsideAdmissible(_))));
}

#[test]
fn solves_are_deterministic() {
    let m = small_mesh();
    let spec = CurvatureSpec::new(
        CurvatureProfile::RadialBump { base: 1.0, amplitude: 0.5, center: 0.0, width: 0.4 },
        CurvatureProfile::AngularMode { base: 1.0, amplitude: 0.3, mode: 2 },
    );
    let (k, h) = sample_curvatures(&spec, m).unwrap();
    let a = minimize_joint(m, &k, &h, &SolveConfig::default()).unwrap();
    let b = minimize_joint(m, &k, &h, &SolveConfig::default()).unwrap();
    assert_eq!(a.u_solution, b.u_solution);
    assert_eq!(a.rho_min.to_bits(), b.rho_min.to_bits());
    assert_eq!(a.energy_history, b.energy_history);
}

#[test]
fn outer_scan_agrees_with_joint() {
    let m = small_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let joint = minimize_joint(m, &k, &h, &SolveConfig::default()).unwrap();
    let c = SolveConfig { rho_strategy: RhoStrategy::OuterScan, ..SolveConfig::default() };
    let outer = minimize_joint(m, &k, &h, &c).unwrap();
    assert!(outer.converged);
    assert!((outer.rho_min - joint.rho_min).abs() < 1e-3, "{} vs {}", outer.rho_min, joint.rho_min);
    assert!(outer.u_solution.max_abs_diff(&joint.u_solution) < 1e-2);
}

#[test]
fn normalization_constants() {
    let m = small_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let r = minimize_joint(m, &k, &h, &SolveConfig::default()).unwrap();
    let rho = RhoValue::new(r.rho_min).unwrap();
    let n = normalize_solution(m, &k, &h, &r.u_min, rho, 1e-6).unwrap();
    assert!((n.area_mass - r.rho_min).abs() < 1e-8);
    assert!((n.boundary_mass - (TWO_PI - r.rho_min)).abs() < 1e-8);
    let from_area = r.rho_min.ln() - log_area_integral(m, &k, &r.u_min).unwrap();
    let from_boundary = 2.0 * ((TWO_PI - r.rho_min).ln() - log_boundary_integral(m, &h, &r.u_min).unwrap());
    assert!((from_area - from_boundary).abs() < 1e-6);
    let shifted = normalize_solution(m, &k, &h, &r.u_min.shifted(3.5), rho, 1e-6).unwrap();
    assert!(shifted.u.max_abs_diff(&n.u) < 1e-12);
    // a ρ off the stationarity curve gives two different constants
    let off = normalize_solution(m, &k, &h, &r.u_min, RhoValue::new(1.0).unwrap(), 1e-6);
    assert!(matches!(off, Err(Error::InconsistentMinimizer { .. })));
}

#[test]
fn endpoint_zero_is_excluded_by_the_log_term() {
    let m = default_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let u0 = solve_limit_0(m, &h, &SolveConfig::default()).unwrap().u_min;
    let rep = endpoint_exclusion_check(m, &k, &h, &u0, Side::Zero).unwrap();
    assert!(rep.hypothesis_holds && rep.excluded);
    for s in rep.samples.iter().filter(|s| s.rho <= 1e-2) {
        assert!(s.difference < 0.0, "{s:?}");
    }
    let ratio = rep.ratio_at(1e-2).unwrap();
    assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    let dominant = 2.0 * 1e-2 * (1e-2f64).ln();
    let s = rep.samples.iter().find(|s| s.rho == 1e-2).unwrap();
    assert!((s.dominant - dominant).abs() < 1e-15);
}

#[test]
fn endpoint_two_pi_is_excluded_for_the_bubble() {
    let m = default_mesh();
    let (k, h) = constants(m, 1.0, 1.0);
    let rep = endpoint_exclusion_check(m, &k, &h, &radial_bubble(m, 1.0), Side::TwoPi).unwrap();
    assert!(rep.hypothesis_holds && rep.excluded);
    for s in rep.samples.iter().filter(|s| TWO_PI - s.rho <= 1e-2) {
        assert!(s.difference < 0.0, "{s:?}");
    }
}

#[test]
fn endpoint_hypothesis_failure_is_reported() {
    let m = small_mesh();
    let (k, h) = constants(m, -1.0, 1.0);
    let u0 = ScalarField::constant(m, 0.0);
    let rep = endpoint_exclusion_check(m, &k, &h, &u0, Side::Zero).unwrap();
    assert!(!rep.hypothesis_holds && !rep.excluded);
    assert!(rep.samples.is_empty());
    assert!(!rep.message.is_empty());
}

#[test]
fn vanishing_interior_curvature_collapses_to_zero() {
    let m = small_mesh();
    let (k, h) = constants(m, 1e-9, 1.0);
    match minimize_joint(m, &k, &h, &SolveConfig::default()) {
        Err(Error::EndpointCollapse(rep)) => {
            assert_eq!(rep.side, Side::Zero);
            assert!(rep.hypothesis_holds);
            assert_eq!(rep.samples.len(), ENDPOINT_DISTANCES.len());
        }
        other => panic!("expected collapse, got {:?}", other.map(|r| r.rho_min)),
    }
    let (k, h) = constants(m, 1.0, 1e-9);
    assert!(matches!(
        minimize_joint(m, &k, &h, &SolveConfig::default()),
        Err(Error::EndpointCollapse(rep)) if rep.side == Side::TwoPi
    ));
}
