//! Nodal scalar fields on the disk and their boundary traces.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::mesh::DiskMesh;

/// One real value per mesh node.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalarField {
    values: Vec<f64>,
}

/// One real value per boundary node, in the mesh's cyclic boundary order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryTrace {
    values: Vec<f64>,
}

macro_rules! nodal_vector {
    ($ty:ident, $what:literal, $len:expr) => {
        impl $ty {
            pub fn new(values: Vec<f64>) -> Self {
                $ty { values }
            }

            pub fn constant(mesh: &DiskMesh, value: f64) -> Self {
                $ty {
                    values: alloc::vec![value; $len(mesh)],
                }
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.values
            }

            /// Checks length against `mesh` and finiteness of every entry.
            pub fn validate(&self, mesh: &DiskMesh) -> Result<()> {
                let expected = $len(mesh);
                if self.values.len() != expected {
                    return Err(Error::InvalidField(format!(
                        "{} has {} values, mesh needs {}",
                        $what,
                        self.values.len(),
                        expected
                    )));
                }
                if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidField(format!(
                        "{} value {} at index {} is not finite",
                        $what, self.values[i], i
                    )));
                }
                Ok(())
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
            }

            /// `self + c` for a constant `c`.
            pub fn shifted(&self, c: f64) -> Self {
                $ty {
                    values: self.values.iter().map(|v| v + c).collect(),
                }
            }

            pub fn scaled(&self, s: f64) -> Self {
                $ty {
                    values: self.values.iter().map(|v| v * s).collect(),
                }
            }
        }

        impl Deref for $ty {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.values
            }
        }

        impl DerefMut for $ty {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }

        impl From<Vec<f64>> for $ty {
            fn from(values: Vec<f64>) -> Self {
                $ty { values }
            }
        }
    };
}

nodal_vector!(ScalarField, "field", |m: &DiskMesh| m.num_nodes());
nodal_vector!(BoundaryTrace, "boundary trace", |m: &DiskMesh| m
    .num_boundary_nodes());

impl ScalarField {
    /// Samples `f(x, y)` at every node.
    pub fn from_fn(mesh: &DiskMesh, f: impl Fn(f64, f64) -> f64) -> Self {
        mesh.nodes().iter().map(|p| f(p[0], p[1])).collect::<Vec<_>>().into()
    }

    /// Restriction to the boundary nodes.
    pub fn trace(&self, mesh: &DiskMesh) -> BoundaryTrace {
        mesh.boundary_nodes()
            .iter()
            .map(|&i| self.values[i])
            .collect::<Vec<_>>()
            .into()
    }

    /// Largest nodal difference `max |self − other|`.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }
}

impl BoundaryTrace {
    /// Samples `f(θ)` at the boundary nodes.
    pub fn from_angle_fn(mesh: &DiskMesh, f: impl Fn(f64) -> f64) -> Self {
        mesh.boundary_angles().map(f).collect::<Vec<_>>().into()
    }
}
