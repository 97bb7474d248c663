//! Prescribing Gaussian curvature `K` on the unit disk and geodesic curvature
//! `h` on its boundary circle by a conformal change of metric `e^u |dx|^2`.
//!
//! The unknown conformal exponent `u` solves
//!
//! ```text
//! -Δu = 2 K e^u              in the disk,
//! ∂u/∂η + 2 = 2 h e^{u/2}    on the circle,
//! ```
//!
//! and is found here as a minimizer of the joint energy
//!
//! ```text
//! I(u, ρ) = ½∫|∇u|² − 2ρ log∫K e^u + 2∫_{S¹} u − 4(2π−ρ) log∫_{S¹} h e^{u/2} + f(ρ),
//! f(ρ)    = 4(2π−ρ) log(2π−ρ) + 2ρ + 2ρ log ρ,
//! ```
//!
//! over fields invariant under a fixed-point-free symmetry group, with the
//! mass parameter `ρ ∈ (0, 2π)` as a second unknown.
//!
//! The crate is `no_std` (it needs `alloc`) and sequential, so every result is
//! bit-reproducible. IO, the command line and parallel sweeps live in the
//! companion `curvdisk` crate.
//!
//! Modules:
//!
//! * [`mesh`] – polar P1 triangulation of the disk, lumped quadrature,
//!   stiffness operator and the auxiliary Neumann problem.
//! * [`field`], [`symmetry`], [`curvature`] – nodal fields, exact
//!   node-permutation symmetry groups and curvature families.
//! * [`energy`] – the discrete functional, its limits at `ρ = 0, 2π` and
//!   exact gradients.
//! * [`inequality`] – Moser–Trudinger, Lebedev–Milin and localized
//!   inequality deficits on test families.
//! * [`solver`] – preconditioned L-BFGS minimization, limiting problems,
//!   normalization and the endpoint exclusion check.
//! * [`diagnostics`] – residuals, refinement studies, perturbation sweeps
//!   and coercivity probes.

#![no_std]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod curvature;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod field;
pub mod inequality;
mod linalg;
mod math;
pub mod mesh;
pub mod solver;
pub mod symmetry;

pub use curvature::{sample_curvatures, CurvatureProfile, CurvatureSpec};
pub use diagnostics::{DiagnosticsReport, SweepResult};
pub use energy::{EnergyBreakdown, RhoValue};
pub use error::{Admissible, Error, Result};
pub use field::{BoundaryTrace, ScalarField};
pub use inequality::DeficitReport;
pub use mesh::{build_mesh, DiskMesh, QuadratureRule, StiffnessOperator};
pub use solver::{SolveConfig, SolveResult};
pub use symmetry::{GroupKind, SymmetryGroup};

/// `2π`, the total curvature of a disk.
pub const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
