//! Finite orthogonal groups acting on the mesh by exact node permutation.
//!
//! Only rotations by whole angular steps and the reflection `θ ↦ −θ` are
//! used, so the action is a permutation of node indices and invariance is an
//! exact, not approximate, property of a nodal vector.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, ScalarField};
use crate::math::{cos, sin};
use crate::mesh::DiskMesh;
use crate::TWO_PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum GroupKind {
    /// Only the identity.
    Trivial,
    /// Rotations by multiples of `2π/k`.
    Cyclic { k: usize },
    /// Rotations by multiples of `2π/k` and `k` reflections.
    Dihedral { k: usize },
}

impl GroupKind {
    pub fn order(&self) -> usize {
        match *self {
            GroupKind::Trivial => 1,
            GroupKind::Cyclic { k } => k,
            GroupKind::Dihedral { k } => 2 * k,
        }
    }

    /// Order of the rotation subgroup, i.e. the angular divisibility the mesh
    /// needs.
    pub fn rotation_order(&self) -> usize {
        match *self {
            GroupKind::Trivial => 1,
            GroupKind::Cyclic { k } | GroupKind::Dihedral { k } => k,
        }
    }
}

/// A group realized on one mesh. Holds the node permutation of every element
/// and the orbit decomposition of nodes and boundary positions.
#[derive(Debug, Clone)]
pub struct SymmetryGroup {
    kind: GroupKind,
    node_perms: Vec<Vec<usize>>,
    boundary_perms: Vec<Vec<usize>>,
    node_orbits: Vec<Vec<usize>>,
    boundary_orbits: Vec<Vec<usize>>,
}

/// Nodal vectors the group acts on: fields (all nodes) and traces (boundary
/// positions).
pub trait GroupAction: core::ops::Deref<Target = [f64]> + From<alloc::vec::Vec<f64>> {
    #[doc(hidden)]
    fn perms(group: &SymmetryGroup) -> &[Vec<usize>];
    #[doc(hidden)]
    fn orbits(group: &SymmetryGroup) -> &[Vec<usize>];
}

impl GroupAction for ScalarField {
    fn perms(group: &SymmetryGroup) -> &[Vec<usize>] {
        &group.node_perms
    }
    fn orbits(group: &SymmetryGroup) -> &[Vec<usize>] {
        &group.node_orbits
    }
}

impl GroupAction for BoundaryTrace {
    fn perms(group: &SymmetryGroup) -> &[Vec<usize>] {
        &group.boundary_perms
    }
    fn orbits(group: &SymmetryGroup) -> &[Vec<usize>] {
        &group.boundary_orbits
    }
}

impl SymmetryGroup {
    /// Realizes `kind` on `mesh`, checking that every element maps nodes to
    /// their rotated/reflected positions (to 1e-12) and triangles to
    /// triangles.
    pub fn new(kind: GroupKind, mesh: &DiskMesh) -> Result<Self> {
        let n_ang = mesh.n_angular();
        let k = kind.rotation_order();
        if k == 0 {
            return Err(Error::Config("group order parameter must be positive".into()));
        }
        if n_ang % k != 0 {
            return Err(Error::Config(format!(
                "group of rotation order {k} is incompatible with n_angular = {n_ang}"
            )));
        }
        let step = n_ang / k;
        // (rotation steps, reflect first)
        let mut elements: Vec<(usize, bool)> = (0..k).map(|m| (m * step, false)).collect();
        if let GroupKind::Dihedral { .. } = kind {
            elements.extend((0..k).map(|m| (m * step, true)));
        }

        let n = mesh.num_nodes();
        let node_perms: Vec<Vec<usize>> = elements
            .iter()
            .map(|&(shift, reflect)| {
                (0..n)
                    .map(|node| {
                        let (ring, j) = mesh.ring_position(node);
                        if ring == 0 {
                            return 0;
                        }
                        let j = if reflect { (n_ang - j) % n_ang } else { j };
                        mesh.node_at(ring, j + shift)
                    })
                    .collect()
            })
            .collect();

        let triangle_set: BTreeSet<[usize; 3]> =
            mesh.triangles().iter().map(|t| sorted(*t)).collect();
        for (&(shift, reflect), perm) in elements.iter().zip(&node_perms) {
            let angle = TWO_PI * shift as f64 / n_ang as f64;
            let (c, s) = (cos(angle), sin(angle));
            for (node, p) in mesh.nodes().iter().enumerate() {
                let y = if reflect { -p[1] } else { p[1] };
                let image = [c * p[0] - s * y, s * p[0] + c * y];
                let q = mesh.nodes()[perm[node]];
                if (image[0] - q[0]).abs() > 1e-12 || (image[1] - q[1]).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "{kind:?} does not act by node permutation on n_angular = {n_ang}"
                    )));
                }
            }
            for t in mesh.triangles() {
                if !triangle_set.contains(&sorted([perm[t[0]], perm[t[1]], perm[t[2]]])) {
                    return Err(Error::Config(format!(
                        "{kind:?} does not preserve the triangulation (n_angular = {n_ang}, \
                         rotation order {k}); reflections need n_angular divisible by 2·{k} \
                         with the mesh built for group order {k}"
                    )));
                }
            }
        }

        let mut boundary_pos = vec![usize::MAX; n];
        for (pos, &node) in mesh.boundary_nodes().iter().enumerate() {
            boundary_pos[node] = pos;
        }
        let boundary_perms: Vec<Vec<usize>> = node_perms
            .iter()
            .map(|perm| {
                mesh.boundary_nodes()
                    .iter()
                    .map(|&node| boundary_pos[perm[node]])
                    .collect()
            })
            .collect();

        Ok(SymmetryGroup {
            kind,
            node_orbits: orbits(&node_perms, n),
            boundary_orbits: orbits(&boundary_perms, mesh.num_boundary_nodes()),
            node_perms,
            boundary_perms,
        })
    }

    pub fn trivial(mesh: &DiskMesh) -> Self {
        SymmetryGroup::new(GroupKind::Trivial, mesh).expect("identity acts on every mesh")
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.node_perms.len()
    }

    /// Node permutation of each group element (`perm[i]` is the image of `i`).
    pub fn node_permutations(&self) -> &[Vec<usize>] {
        &self.node_perms
    }

    pub fn node_orbits(&self) -> &[Vec<usize>] {
        &self.node_orbits
    }

    /// Orbit average. The result is exactly invariant: each orbit's mean is
    /// computed once, in increasing index order, and written to all members.
    /// Orbits that are already constant are left untouched, so the map is
    /// exactly idempotent.
    pub fn symmetrize<T: GroupAction>(&self, values: &T) -> T {
        let mut out = values.to_vec();
        for orbit in T::orbits(self) {
            let first = values[orbit[0]];
            if orbit.iter().all(|&i| values[i] == first) {
                continue;
            }
            let mean = orbit.iter().map(|&i| values[i]).sum::<f64>() / orbit.len() as f64;
            for &i in orbit {
                out[i] = mean;
            }
        }
        out.into()
    }

    /// `max_{g, i} |f(i) − f(g(i))|`.
    pub fn symmetry_residual<T: GroupAction>(&self, values: &T) -> f64 {
        T::perms(self)
            .iter()
            .flat_map(|perm| perm.iter().enumerate().map(|(i, &gi)| (values[i] - values[gi]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric<T: GroupAction>(&self, values: &T, tol: f64) -> bool {
        self.symmetry_residual(values) <= tol
    }

    /// True iff no boundary node is fixed by every group element.
    pub fn validate_fixed_point_free(&self) -> bool {
        (0..self.boundary_perms[0].len())
            .all(|pos| self.boundary_perms.iter().any(|perm| perm[pos] != pos))
    }
}

fn sorted(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}

fn orbits(perms: &[Vec<usize>], n: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut orbit: Vec<usize> = perms.iter().map(|p| p[i]).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &j in &orbit {
            seen[j] = true;
        }
        out.push(orbit);
    }
    out
}

/// Standalone form of [`SymmetryGroup::validate_fixed_point_free`].
pub fn validate_fixed_point_free(group: &SymmetryGroup) -> bool {
    group.validate_fixed_point_free()
}
