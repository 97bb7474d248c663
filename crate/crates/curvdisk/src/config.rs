//! Run configuration. One TOML file describes a run completely; every
//! section is optional and falls back to the defaults below.

use std::fs;
use std::path::{Path, PathBuf};

use curvdisk_core::diagnostics::{check_ladder, default_epsilon_grid, PerturbationSpec};
use curvdisk_core::solver::{LineSearch, RhoStrategy};
use curvdisk_core::{
    build_mesh, CurvatureProfile, CurvatureSpec, DiskMesh, GroupKind, SolveConfig, SymmetryGroup,
};
use serde::{Deserialize, Serialize};

use crate::io;

/// Seed used when neither the file nor `--seed` sets one.
pub const DEFAULT_SEED: u64 = 20_171_009;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub mesh: MeshConfig,
    pub group: GroupKind,
    pub curvature: CurvatureConfig,
    pub solver: SolverConfig,
    pub inequalities: InequalityConfig,
    pub refine: RefineConfig,
    pub perturb: PerturbConfig,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            output_dir: PathBuf::from("out"),
            mesh: MeshConfig::default(),
            group: GroupKind::Cyclic { k: 2 },
            curvature: CurvatureConfig::default(),
            solver: SolverConfig::default(),
            inequalities: InequalityConfig::default(),
            refine: RefineConfig::default(),
            perturb: PerturbConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { n_radial: 48, n_angular: 192 }
    }
}

/// A curvature profile, or a CSV of nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant { value: f64 },
    RadialBump { base: f64, amplitude: f64, center: f64, width: f64 },
    AngularMode { base: f64, amplitude: f64, mode: u32 },
    /// `node_id,value` for `K`, `boundary_index,value` for `h`.
    Tabulated { path: PathBuf },
}

impl ProfileConfig {
    fn parametric(&self) -> Option<CurvatureProfile> {
        Some(match *self {
            ProfileConfig::Constant { value } => CurvatureProfile::Constant { value },
            ProfileConfig::RadialBump { base, amplitude, center, width } => {
                CurvatureProfile::RadialBump { base, amplitude, center, width }
            }
            ProfileConfig::AngularMode { base, amplitude, mode } => {
                CurvatureProfile::AngularMode { base, amplitude, mode }
            }
            ProfileConfig::Tabulated { .. } => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub gaussian: ProfileConfig,
    pub geodesic: ProfileConfig,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        CurvatureConfig {
            gaussian: ProfileConfig::Constant { value: 1.0 },
            geodesic: ProfileConfig::Constant { value: 1.0 },
        }
    }
}

impl CurvatureConfig {
    /// The spec with tabulated files read and checked against `mesh`.
    pub fn resolve(&self, base_dir: &Path, mesh: &DiskMesh) -> anyhow::Result<CurvatureSpec> {
        let gaussian = match &self.gaussian {
            ProfileConfig::Tabulated { path } => CurvatureProfile::Tabulated {
                values: io::read_tabulated(&base_dir.join(path), io::Domain::Disk, mesh.num_nodes())?,
            },
            p => p.parametric().expect("parametric profile"),
        };
        let geodesic = match &self.geodesic {
            ProfileConfig::Tabulated { path } => CurvatureProfile::Tabulated {
                values: io::read_tabulated(&base_dir.join(path), io::Domain::Boundary, mesh.n_angular())?,
            },
            p => p.parametric().expect("parametric profile"),
        };
        Ok(CurvatureSpec::new(gaussian, geodesic))
    }

    /// The spec when it does not depend on a particular mesh.
    pub fn parametric(&self) -> Option<CurvatureSpec> {
        Some(CurvatureSpec::new(self.gaussian.parametric()?, self.geodesic.parametric()?))
    }
}

/// Solver settings; the symmetry group comes from the top-level `[group]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub rho_strategy: RhoStrategy,
    pub line_search: LineSearch,
    pub initial_rho: f64,
    pub memory: usize,
    pub normalization_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveConfig::default();
        SolverConfig {
            max_iterations: d.max_iterations,
            gradient_tolerance: d.gradient_tolerance,
            rho_strategy: d.rho_strategy,
            line_search: d.line_search,
            initial_rho: d.initial_rho,
            memory: d.memory,
            normalization_tolerance: d.normalization_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalityConfig {
    /// The harness mesh. The boundary inequality is sharp, so it needs far
    /// more angular resolution than a solve.
    pub n_radial: usize,
    pub n_angular: usize,
    /// Möbius centers `(a, 0)`.
    pub radii: Vec<f64>,
    /// Concentrations of the interior bubbles.
    pub lambdas: Vec<f64>,
    /// Möbius centers of the group-symmetrized fields used for the
    /// multi-arc inequality; mass must split evenly across the arcs.
    pub concentrations: Vec<f64>,
    /// Seeded random smooth fields checked against the sharp boundary
    /// inequality.
    pub random_fields: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// Additive constant used for the inequalities whose sharp constant is
    /// not known; those deficits are reported, not asserted.
    pub constant: f64,
    /// Allowed negative deficit. Defaults to `1e-6 · (768 / n_angular)²`.
    pub tolerance: Option<f64>,
    /// Largest deficit accepted on the equality family.
    pub sharpness: f64,
}

impl Default for InequalityConfig {
    fn default() -> Self {
        InequalityConfig {
            n_radial: 48,
            n_angular: 768,
            radii: vec![0.0, 0.15, 0.3, 0.45, 0.6],
            lambdas: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            concentrations: vec![0.8, 0.9, 0.95, 0.98],
            random_fields: 20,
            delta: 0.2,
            epsilon: 0.1,
            constant: 0.0,
            tolerance: None,
            sharpness: 1e-3,
        }
    }
}

impl InequalityConfig {
    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| {
            let s = 768.0 / self.n_angular as f64;
            1e-6 * s * s
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RefineProblemConfig {
    /// `K ≡ 1, h ≡ 0` at `ρ = 2π`, against the closed-form bubble.
    HemisphereBubble,
    /// `K ≡ 1, h ≡ 1`, against the closed-form radial solution.
    ConstantCurvature,
    /// The `[curvature]` data, against the finest level.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub problem: RefineProblemConfig,
    /// `[n_radial, n_angular]`, doubling at every step.
    pub levels: Vec<[usize; 2]>,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            problem: RefineProblemConfig::ConstantCurvature,
            levels: vec![[12, 48], [24, 96], [48, 192]],
        }
    }
}

impl RefineConfig {
    pub fn ladder(&self) -> Vec<(usize, usize)> {
        self.levels.iter().map(|l| (l[0], l[1])).collect()
    }
}

/// Perturbation study: `K = K0 − ε·bump_K`, `h = h0 − ε·bump_h` with the base
/// taken from `[curvature]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbConfig {
    pub bump: CurvatureConfig,
    pub epsilons: Vec<f64>,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        let mode2 = ProfileConfig::AngularMode { base: 0.0, amplitude: 1.0, mode: 2 };
        PerturbConfig {
            bump: CurvatureConfig { gaussian: mode2.clone(), geodesic: mode2 },
            epsilons: default_epsilon_grid(),
        }
    }
}

/// Everything a command needs, built and checked before any solve.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub mesh: DiskMesh,
    pub group: SymmetryGroup,
    pub curvature: CurvatureSpec,
    pub solve: SolveConfig,
}

impl RunConfig {
    /// Parses `text`; errors carry the line and column of the problem.
    pub fn parse(text: &str, base_dir: &Path) -> anyhow::Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, &base)
            .map_err(|e| anyhow::anyhow!("malformed config {}: {e}", path.display()))
    }

    pub fn solve_config(&self) -> SolveConfig {
        let s = &self.solver;
        SolveConfig {
            group: self.group,
            max_iterations: s.max_iterations,
            gradient_tolerance: s.gradient_tolerance,
            rho_strategy: s.rho_strategy,
            line_search: s.line_search,
            initial_rho: s.initial_rho,
            memory: s.memory,
            normalization_tolerance: s.normalization_tolerance,
        }
    }

    fn mesh_with_group(&self, n_radial: usize, n_angular: usize) -> anyhow::Result<(DiskMesh, SymmetryGroup)> {
        let mesh = build_mesh(n_radial, n_angular, self.group.rotation_order())?;
        let group = self.solve_config().group_on(&mesh)?;
        Ok((mesh, group))
    }

    /// Mesh, group, sampled curvature and solver settings of the main run.
    pub fn prepare(&self) -> anyhow::Result<Prepared> {
        let solve = self.solve_config();
        solve.validate()?;
        let (mesh, group) = self.mesh_with_group(self.mesh.n_radial, self.mesh.n_angular)?;
        let curvature = self.curvature.resolve(&self.base_dir, &mesh)?;
        curvature.validate_symmetry(&mesh, &group)?;
        Ok(Prepared { mesh, group, curvature, solve })
    }

    /// Checks every section, whichever command will run.
    pub fn validate(&self) -> anyhow::Result<()> {
        let prepared = self.prepare()?;

        let q = &self.inequalities;
        self.mesh_with_group(q.n_radial, q.n_angular)
            .map_err(|e| anyhow::anyhow!("[inequalities] mesh: {e}"))?;
        anyhow::ensure!(
            q.radii.iter().all(|a| (0.0..1.0).contains(a)),
            "[inequalities] radii must lie in [0, 1)"
        );
        anyhow::ensure!(
            q.concentrations.iter().all(|a| (0.0..1.0).contains(a)),
            "[inequalities] concentrations must lie in [0, 1)"
        );
        anyhow::ensure!(
            q.lambdas.iter().all(|l| l.is_finite() && *l >= 1.0),
            "[inequalities] lambdas must be finite and at least 1"
        );
        anyhow::ensure!(q.delta > 0.0 && q.delta.is_finite(), "[inequalities] delta must be positive");
        anyhow::ensure!(q.epsilon > 0.0 && q.epsilon.is_finite(), "[inequalities] epsilon must be positive");
        anyhow::ensure!(q.constant.is_finite(), "[inequalities] constant must be finite");
        anyhow::ensure!(
            q.tolerance() >= 0.0 && q.tolerance().is_finite(),
            "[inequalities] tolerance must be nonnegative"
        );
        anyhow::ensure!(q.sharpness > 0.0, "[inequalities] sharpness must be positive");

        let ladder = self.refine.ladder();
        check_ladder(&ladder).map_err(|e| anyhow::anyhow!("[refine] {e}"))?;
        for &(nr, na) in &ladder {
            self.mesh_with_group(nr, na).map_err(|e| anyhow::anyhow!("[refine] level {nr}x{na}: {e}"))?;
        }
        if self.refine.problem == RefineProblemConfig::Joint {
            anyhow::ensure!(
                self.curvature.parametric().is_some(),
                "[refine] a joint study needs parametric curvature (tabulated data is tied to one mesh)"
            );
        }

        let p = &self.perturb;
        anyhow::ensure!(!p.epsilons.is_empty(), "[perturb] epsilons must not be empty");
        anyhow::ensure!(
            p.epsilons.iter().all(|e| e.is_finite() && *e >= 0.0),
            "[perturb] epsilons must be finite and nonnegative"
        );
        anyhow::ensure!(
            p.epsilons.windows(2).all(|w| w[1] > w[0]),
            "[perturb] epsilons must be strictly increasing"
        );
        // the sign conditions on the base data only matter to `perturb`,
        // which checks them itself
        self.perturb
            .bump
            .resolve(&self.base_dir, &prepared.mesh)?
            .validate_symmetry(&prepared.mesh, &prepared.group)
            .map_err(|e| anyhow::anyhow!("[perturb] bump: {e}"))?;
        Ok(())
    }

    pub fn perturbation_spec(&self, mesh: &DiskMesh) -> anyhow::Result<PerturbationSpec> {
        Ok(PerturbationSpec {
            base: self.curvature.resolve(&self.base_dir, mesh)?,
            bump: self.perturb.bump.resolve(&self.base_dir, mesh)?,
        })
    }
}
