//! Curvature functions `K` on the disk and `h` on the circle.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, ScalarField};
use crate::math::{atan2, cos, exp, hypot, powi};
use crate::mesh::DiskMesh;
use crate::symmetry::{GroupKind, SymmetryGroup};

/// A family of curvature functions, sampled at nodes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum CurvatureProfile {
    Constant {
        value: f64,
    },
    /// `base + amplitude·exp(−((r − center) / width)²)`.
    RadialBump {
        base: f64,
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `base + amplitude·r^m·cos(mθ)` on the disk, `base + amplitude·cos(mθ)`
    /// on the circle.
    AngularMode {
        base: f64,
        amplitude: f64,
        mode: u32,
    },
    /// Explicit nodal values (all nodes for `K`, boundary order for `h`).
    Tabulated {
        values: Vec<f64>,
    },
}

impl CurvatureProfile {
    pub fn constant(value: f64) -> Self {
        CurvatureProfile::Constant { value }
    }

    /// Value at the point `(x, y)` of the closed disk. Panics on tabulated
    /// profiles, which have no pointwise definition.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let r = hypot(x, y);
        match *self {
            CurvatureProfile::Constant { value } => value,
            CurvatureProfile::RadialBump {
                base,
                amplitude,
                center,
                width,
            } => {
                let z = (r - center) / width;
                base + amplitude * exp(-z * z)
            }
            CurvatureProfile::AngularMode {
                base,
                amplitude,
                mode,
            } => {
                if mode == 0 {
                    base + amplitude
                } else if r == 0.0 {
                    base
                } else {
                    let theta = atan2(y, x);
                    base + amplitude * powi(r, mode as i32) * cos(mode as f64 * theta)
                }
            }
            CurvatureProfile::Tabulated { .. } => {
                panic!("tabulated curvature has no pointwise value")
            }
        }
    }

    /// Value at angle `θ` of the unit circle.
    pub fn eval_boundary(&self, theta: f64) -> f64 {
        match *self {
            CurvatureProfile::AngularMode {
                base,
                amplitude,
                mode,
            } => base + amplitude * cos(mode as f64 * theta),
            _ => self.eval(cos(theta), crate::math::sin(theta)),
        }
    }

    fn check_finite(&self) -> Result<()> {
        let finite = match self {
            CurvatureProfile::Constant { value } => value.is_finite(),
            CurvatureProfile::RadialBump {
                base,
                amplitude,
                center,
                width,
            } => {
                base.is_finite()
                    && amplitude.is_finite()
                    && center.is_finite()
                    && width.is_finite()
                    && *width > 0.0
            }
            CurvatureProfile::AngularMode {
                base, amplitude, ..
            } => base.is_finite() && amplitude.is_finite(),
            CurvatureProfile::Tabulated { values } => values.iter().all(|v| v.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Config(format!("curvature parameters must be finite: {self:?}")))
        }
    }

    /// Whether the profile is invariant under `group`, decided from the
    /// parameters (tabulated profiles return `None`: check the samples).
    pub fn symmetric_under(&self, group: GroupKind) -> Option<bool> {
        match *self {
            CurvatureProfile::Constant { .. } | CurvatureProfile::RadialBump { .. } => Some(true),
            CurvatureProfile::AngularMode { mode, .. } => {
                Some(mode == 0 || mode as usize % group.rotation_order() == 0)
            }
            CurvatureProfile::Tabulated { .. } => None,
        }
    }
}

/// Curvature data of one problem: `K` on the disk and `h` on the circle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvatureSpec {
    pub gaussian: CurvatureProfile,
    pub geodesic: CurvatureProfile,
}

impl CurvatureSpec {
    pub fn new(gaussian: CurvatureProfile, geodesic: CurvatureProfile) -> Self {
        CurvatureSpec { gaussian, geodesic }
    }

    pub fn constant(k: f64, h: f64) -> Self {
        CurvatureSpec::new(CurvatureProfile::constant(k), CurvatureProfile::constant(h))
    }

    /// Checks the spec is invariant under `group`: analytically for
    /// parametric profiles, on the samples (tol 1e-12) for tabulated ones.
    pub fn validate_symmetry(&self, mesh: &DiskMesh, group: &SymmetryGroup) -> Result<()> {
        let (k, h) = sample_curvatures(self, mesh)?;
        let ok_k = self
            .gaussian
            .symmetric_under(group.kind())
            .unwrap_or_else(|| group.is_symmetric(&k, 1e-12));
        let ok_h = self
            .geodesic
            .symmetric_under(group.kind())
            .unwrap_or_else(|| group.is_symmetric(&h, 1e-12));
        if !ok_k {
            return Err(Error::Config(format!(
                "Gaussian curvature {:?} is not invariant under {:?}",
                self.gaussian,
                group.kind()
            )));
        }
        if !ok_h {
            return Err(Error::Config(format!(
                "geodesic curvature {:?} is not invariant under {:?}",
                self.geodesic,
                group.kind()
            )));
        }
        Ok(())
    }
}

/// Nodal samples `(K, h)`.
pub fn sample_curvatures(
    spec: &CurvatureSpec,
    mesh: &DiskMesh,
) -> Result<(ScalarField, BoundaryTrace)> {
    Ok((sample_disk(&spec.gaussian, mesh)?, sample_boundary(&spec.geodesic, mesh)?))
}

pub fn sample_disk(profile: &CurvatureProfile, mesh: &DiskMesh) -> Result<ScalarField> {
    profile.check_finite()?;
    let field = match profile {
        CurvatureProfile::Tabulated { values } => ScalarField::new(values.clone()),
        p => ScalarField::from_fn(mesh, |x, y| p.eval(x, y)),
    };
    field.validate(mesh)?;
    Ok(field)
}

pub fn sample_boundary(profile: &CurvatureProfile, mesh: &DiskMesh) -> Result<BoundaryTrace> {
    profile.check_finite()?;
    let trace = match profile {
        CurvatureProfile::Tabulated { values } => BoundaryTrace::new(values.clone()),
        p => BoundaryTrace::from_angle_fn(mesh, |t| p.eval_boundary(t)),
    };
    trace.validate(mesh)?;
    Ok(trace)
}
