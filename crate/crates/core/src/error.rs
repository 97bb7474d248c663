use alloc::boxed::Box;
use alloc::string::String;

use crate::solver::EndpointReport;

/// Which admissible set an iterate fell out of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissible {
    /// `∫K e^u > 0` and `∫h e^{u/2} > 0`.
    Both,
    /// `∫h e^{u/2} > 0` (the `ρ = 0` problem).
    Boundary,
    /// `∫K e^u > 0` (the `ρ = 2π` problem).
    Area,
}

impl core::fmt::Display for Admissible {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Admissible::Both => "∫K e^u > 0 and ∫h e^(u/2) > 0",
            Admissible::Boundary => "∫h e^(u/2) > 0",
            Admissible::Area => "∫K e^u > 0",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iterate left the admissible set ({0} fails)")]
    OutsideAdmissible(Admissible),

    #[error("∂I/∂ρ is unbounded at the endpoint ρ = {rho}")]
    EndpointDerivative { rho: f64 },

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("line search could not return to the admissible set after {backtracks} backtracks")]
    StalledOutsideAdmissible { backtracks: usize },

    #[error(
        "inconsistent minimizer: normalization constants disagree ({from_area} vs {from_boundary})"
    )]
    InconsistentMinimizer { from_area: f64, from_boundary: f64 },

    #[error("mass parameter collapsed toward ρ = {}", .0.side.value())]
    EndpointCollapse(Box<EndpointReport>),

    #[error("gradient of a symmetric iterate is not symmetric (relative asymmetry {0:e})")]
    SymmetryBroken(f64),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
