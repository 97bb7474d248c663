//! Runner for `curvdisk-core`: TOML run configurations, CSV/JSON output and
//! the `curvdisk` command set.
//!
//! Every command returns a [`Status`] that becomes the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | malformed config, internal error, or a run that did not converge |
//! | 2 | the mass parameter collapsed to an endpoint |
//! | 3 | infeasible data: the admissible set is empty |
//! | 4 | an asserted inequality deficit is out of tolerance |

pub mod commands;
pub mod config;
pub mod io;

use std::fmt;

pub use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Failure = 1,
    EndpointCollapse = 2,
    Infeasible = 3,
    DeficitViolation = 4,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunError {
    pub status: Status,
    pub message: String,
}

impl RunError {
    pub fn new(status: Status, message: impl Into<String>) -> Self {
        RunError { status, message: message.into() }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        RunError::new(Status::Failure, message)
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::failure(format!("{e:#}"))
    }
}
