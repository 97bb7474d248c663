//! Polar-structured P1 triangulation of the closed unit disk.
//!
//! Nodes are the origin plus `n_radial` concentric rings of `n_angular`
//! equally spaced nodes at radii `i / n_radial` and angles `2πj / n_angular`.
//! Node `0` is the center; ring `i ≥ 1`, angle index `j` is node
//! `1 + (i − 1)·n_angular + j`. The outer ring is the boundary.
//!
//! Integrals use lumped (vertex) quadrature: node weights are one third of
//! the adjacent triangle areas, boundary weights half of the adjacent arc
//! lengths. Both rules are exact for affine integrands on each element, and
//! the boundary weights sum to exactly `2π`, which keeps the discrete energy
//! invariant under adding constants.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{BoundaryTrace, ScalarField};
use crate::linalg::{BandedCholesky, CsrMatrix};
use crate::math::{cos, dot, hypot, sin, sqrt};
use crate::TWO_PI;

use once_cell::race::OnceBox;

/// How each annular cell is split into two triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DiagonalPattern {
    /// Every cell uses the same diagonal; invariant under all rotations by
    /// whole angular steps, not under reflections.
    Uniform,
    /// Diagonals alternate with the angular index; invariant under rotations
    /// by an even number of steps and under reflection `θ ↦ −θ`.
    Alternating,
}

/// Vertex/endpoint quadrature on the mesh.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    triangle_areas: Vec<f64>,
    node_weights: Vec<f64>,
    edge_lengths: Vec<f64>,
    boundary_weights: Vec<f64>,
}

impl QuadratureRule {
    /// Area of each triangle; its three vertices each carry a third of it.
    pub fn triangle_areas(&self) -> &[f64] {
        &self.triangle_areas
    }

    /// Lumped area weight per node.
    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    /// Arc length of each boundary edge; its endpoints each carry half.
    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    /// Lumped arc-length weight per boundary node (boundary order).
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn area(&self) -> f64 {
        self.node_weights.iter().sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_weights.iter().sum()
    }
}

/// The symmetric positive-semidefinite matrix of `(u, v) ↦ ∫⟨∇u, ∇v⟩` on
/// the P1 space. Its kernel is the constants.
#[derive(Debug, Clone)]
pub struct StiffnessOperator {
    matrix: CsrMatrix,
}

impl StiffnessOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.matrix.apply_into(u, &mut out);
        out
    }

    /// `∫⟨∇u, ∇v⟩`.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.dim())
            .map(|i| u[i] * self.matrix.row(i).map(|(c, a)| a * v[c]).sum::<f64>())
            .sum()
    }

    pub(crate) fn csr(&self) -> &CsrMatrix {
        &self.matrix
    }
}

#[derive(Debug, Clone)]
pub struct DiskMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    boundary_edges: Vec<[usize; 2]>,
    n_radial: usize,
    n_angular: usize,
    group_order: usize,
    pattern: DiagonalPattern,
    quadrature: QuadratureRule,
    stiffness: StiffnessOperator,
    /// Cholesky factor of `A + M`, built on first use.
    h1_factor: OnceBox<BandedCholesky>,
}

/// Builds the polar mesh. `group_order` is the largest rotation order the
/// mesh must carry exactly; it must divide `n_angular`.
///
/// Reflections additionally need `n_angular / group_order` to be even, which
/// selects the alternating diagonal pattern.
pub fn build_mesh(n_radial: usize, n_angular: usize, group_order: usize) -> Result<DiskMesh> {
    if n_radial < 2 {
        return Err(Error::Config(format!("n_radial = {n_radial} must be at least 2")));
    }
    if n_angular < 8 {
        return Err(Error::Config(format!("n_angular = {n_angular} must be at least 8")));
    }
    if group_order == 0 {
        return Err(Error::Config("group_order must be at least 1".into()));
    }
    if n_angular % group_order != 0 {
        return Err(Error::Config(format!(
            "n_angular = {n_angular} is not divisible by group_order = {group_order}"
        )));
    }
    let pattern = if (n_angular / group_order) % 2 == 0 {
        DiagonalPattern::Alternating
    } else {
        DiagonalPattern::Uniform
    };

    let n_nodes = 1 + n_radial * n_angular;
    let mut nodes = Vec::with_capacity(n_nodes);
    nodes.push([0.0, 0.0]);
    for i in 1..=n_radial {
        let r = i as f64 / n_radial as f64;
        for j in 0..n_angular {
            let theta = TWO_PI * j as f64 / n_angular as f64;
            let (c, s) = (cos(theta), sin(theta));
            if i == n_radial {
                // project onto the circle
                let norm = hypot(c, s);
                nodes.push([c / norm, s / norm]);
            } else {
                nodes.push([r * c, r * s]);
            }
        }
    }
    let idx = |ring: usize, j: usize| 1 + (ring - 1) * n_angular + (j % n_angular);

    let mut triangles = Vec::with_capacity(n_angular * (2 * n_radial - 1));
    for j in 0..n_angular {
        triangles.push([0, idx(1, j), idx(1, j + 1)]);
    }
    for ring in 1..n_radial {
        for j in 0..n_angular {
            let (a, b) = (idx(ring, j), idx(ring, j + 1));
            let (c, d) = (idx(ring + 1, j), idx(ring + 1, j + 1));
            let flip = pattern == DiagonalPattern::Alternating && j % 2 == 1;
            if flip {
                triangles.push([a, c, b]);
                triangles.push([b, c, d]);
            } else {
                triangles.push([a, c, d]);
                triangles.push([a, d, b]);
            }
        }
    }

    let boundary_nodes: Vec<usize> = (0..n_angular).map(|j| idx(n_radial, j)).collect();
    let boundary_edges: Vec<[usize; 2]> = (0..n_angular)
        .map(|j| [idx(n_radial, j), idx(n_radial, j + 1)])
        .collect();

    // quadrature
    let mut triangle_areas = Vec::with_capacity(triangles.len());
    let mut node_weights = vec![0.0; n_nodes];
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for t in &triangles {
        let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
        let area = signed_area(p[0], p[1], p[2]);
        if area <= 0.0 {
            return Err(Error::Config(format!(
                "degenerate or inverted triangle {t:?} (area {area:e})"
            )));
        }
        triangle_areas.push(area);
        for &v in t {
            node_weights[v] += area / 3.0;
        }
        // edge opposite vertex k
        let e: [[f64; 2]; 3] = core::array::from_fn(|k| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [b[0] - a[0], b[1] - a[1]]
        });
        for k in 0..3 {
            for l in 0..3 {
                let value = (e[k][0] * e[l][0] + e[k][1] * e[l][1]) / (4.0 * area);
                *entries.entry((t[k], t[l])).or_insert(0.0) += value;
            }
        }
    }
    let arc = TWO_PI / n_angular as f64;
    let edge_lengths = vec![arc; n_angular];
    let boundary_weights = vec![arc; n_angular];
    let quadrature = QuadratureRule {
        triangle_areas,
        node_weights,
        edge_lengths,
        boundary_weights,
    };
    let stiffness = StiffnessOperator {
        matrix: CsrMatrix::from_map(n_nodes, &entries),
    };

    Ok(DiskMesh {
        nodes,
        triangles,
        boundary_nodes,
        boundary_edges,
        n_radial,
        n_angular,
        group_order,
        pattern,
        quadrature,
        stiffness,
        h1_factor: OnceBox::new(),
    })
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

impl DiskMesh {
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary node indices in counter-clockwise order starting at `θ = 0`.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn group_order(&self) -> usize {
        self.group_order
    }

    pub fn pattern(&self) -> DiagonalPattern {
        self.pattern
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quadrature
    }

    pub fn stiffness(&self) -> &StiffnessOperator {
        &self.stiffness
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_boundary_nodes(&self) -> usize {
        self.boundary_nodes.len()
    }

    /// Ring spacing `1 / n_radial`.
    pub fn radial_spacing(&self) -> f64 {
        1.0 / self.n_radial as f64
    }

    /// `(ring, angle index)` of a node; the center is ring 0, index 0.
    pub fn ring_position(&self, node: usize) -> (usize, usize) {
        if node == 0 {
            (0, 0)
        } else {
            (1 + (node - 1) / self.n_angular, (node - 1) % self.n_angular)
        }
    }

    pub fn node_at(&self, ring: usize, j: usize) -> usize {
        if ring == 0 {
            0
        } else {
            1 + (ring - 1) * self.n_angular + (j % self.n_angular)
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.ring_position(node).0 == self.n_radial
    }

    /// Angles of the boundary nodes, in boundary order.
    pub fn boundary_angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_angular).map(move |j| TWO_PI * j as f64 / self.n_angular as f64)
    }

    /// Solves `(A + M) x = rhs` with `A` the stiffness and `M` the lumped mass.
    pub fn h1_riesz(&self, rhs: &[f64]) -> Vec<f64> {
        self.h1_factor
            .get_or_init(|| {
                let factor = BandedCholesky::factor(self.stiffness.csr(), Some(self.quadrature.node_weights()), &[])
                    .expect("stiffness plus lumped mass is positive definite");
                Box::new(factor)
            })
            .solve(rhs)
    }

    /// Dual norm `sqrt(gᵀ (A + M)⁻¹ g)` of a nodal load vector.
    pub fn h1_dual_norm(&self, load: &[f64]) -> f64 {
        sqrt(dot(load, &self.h1_riesz(load)).max(0.0))
    }

    /// `sqrt(∫|∇u|² + ∫u²)` with lumped mass.
    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        let mass: f64 = u
            .iter()
            .zip(self.quadrature.node_weights())
            .map(|(v, w)| w * v * v)
            .sum();
        sqrt(self.stiffness.bilinear(u, u) + mass)
    }

    /// `∫_T |∇u|²` on triangle `t`.
    pub fn element_dirichlet(&self, t: usize, u: &[f64]) -> f64 {
        let tri = self.triangles[t];
        let p = [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]];
        let area = self.quadrature.triangle_areas[t];
        let e: [[f64; 2]; 3] = core::array::from_fn(|k| {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            [b[0] - a[0], b[1] - a[1]]
        });
        // ∇u is the rotated sum of opposite edges weighted by nodal values;
        // written with differences so constants give exactly zero
        let (d1, d2) = (u[tri[1]] - u[tri[0]], u[tri[2]] - u[tri[0]]);
        let gx = d1 * e[1][0] + d2 * e[2][0];
        let gy = d1 * e[1][1] + d2 * e[2][1];
        (gx * gx + gy * gy) / (4.0 * area)
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let tri = self.triangles[t];
        let mut c = [0.0; 2];
        for &v in &tri {
            c[0] += self.nodes[v][0] / 3.0;
            c[1] += self.nodes[v][1] / 3.0;
        }
        c
    }

    /// `u − ⨍u`.
    pub fn zero_mean(&self, u: &ScalarField) -> ScalarField {
        let mean = dot(u, self.quadrature.node_weights()) / self.quadrature.area();
        u.shifted(-mean)
    }
}

/// Quadrature value of `∫_D field`.
pub fn area_integral(mesh: &DiskMesh, field: &ScalarField) -> Result<f64> {
    field.validate(mesh)?;
    Ok(dot(field, mesh.quadrature.node_weights()))
}

/// Quadrature value of `∫_{S¹} trace` (arc-length measure).
pub fn boundary_integral(mesh: &DiskMesh, trace: &BoundaryTrace) -> Result<f64> {
    trace.validate(mesh)?;
    Ok(dot(trace, mesh.quadrature.boundary_weights()))
}

/// `∫|∇u|²` of the piecewise-linear interpolant, summed element by element
/// (nonnegative, and exactly zero on constants).
pub fn dirichlet_energy(mesh: &DiskMesh, field: &ScalarField) -> Result<f64> {
    field.validate(mesh)?;
    Ok((0..mesh.triangles.len()).map(|t| mesh.element_dirichlet(t, field)).sum())
}

/// Solves `−Δw = −4π/|D|` in the disk, `∂w/∂η = 4π/|S¹|` on the circle,
/// normalized to zero mean. On the unit disk the exact solution is
/// `r² − 1/2`.
pub fn solve_auxiliary_neumann(mesh: &DiskMesh) -> Result<ScalarField> {
    let q = &mesh.quadrature;
    let interior_source = -2.0 * TWO_PI / q.area();
    let boundary_flux = 2.0 * TWO_PI / q.boundary_length();
    let mut rhs: Vec<f64> = q.node_weights().iter().map(|w| interior_source * w).collect();
    for (k, &node) in mesh.boundary_nodes.iter().enumerate() {
        rhs[node] += boundary_flux * q.boundary_weights()[k];
    }
    // compatible load: pin the center and fix the constant afterwards
    rhs[0] = 0.0;
    let factor = BandedCholesky::factor(mesh.stiffness.csr(), None, &[0])?;
    let w = factor.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("auxiliary Neumann solve produced non-finite values".into()));
    }
    Ok(mesh.zero_mean(&w.into()))
}

/// Discrete normal flux `∫_{S¹} ∂w/∂η` recovered from the weak residual at
/// the boundary nodes of a solution of the auxiliary problem.
pub fn auxiliary_boundary_flux(mesh: &DiskMesh, w: &ScalarField) -> f64 {
    let q = &mesh.quadrature;
    let interior_source = -2.0 * TWO_PI / q.area();
    let aw = mesh.stiffness.apply(w);
    mesh.boundary_nodes
        .iter()
        .map(|&i| aw[i] - interior_source * q.node_weights()[i])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn smallest_mesh_has_expected_structure() {
        let m = build_mesh(2, 8, 1).unwrap();
        assert_eq!(m.num_nodes(), 17);
        assert_eq!(m.num_boundary_nodes(), 8);
        assert_eq!(m.triangles().len(), 8 + 16);
        for &b in m.boundary_nodes() {
            let p = m.nodes()[b];
            assert!((hypot(p[0], p[1]) - 1.0).abs() <= 1e-12);
        }
        assert!(m.boundary_nodes().iter().all(|&b| m.is_boundary(b)));
        assert!(!m.is_boundary(0));
    }

    #[test]
    fn divisibility_violation_names_the_pair() {
        let err = build_mesh(4, 12, 5).unwrap_err();
        let msg = alloc::string::ToString::to_string(&err);
        assert!(msg.contains("12") && msg.contains('5'), "{msg}");
        assert!(build_mesh(1, 12, 1).is_err());
        assert!(build_mesh(4, 6, 1).is_err());
    }

    #[test]
    fn pattern_follows_rotation_step_parity() {
        assert_eq!(build_mesh(3, 12, 3).unwrap().pattern(), DiagonalPattern::Alternating);
        assert_eq!(build_mesh(3, 12, 4).unwrap().pattern(), DiagonalPattern::Uniform);
    }

    #[test]
    fn stiffness_is_symmetric_with_constant_kernel() {
        let m = build_mesh(5, 16, 2).unwrap();
        let a = m.stiffness();
        for i in 0..m.num_nodes() {
            let mut row_sum = 0.0;
            for j in 0..m.num_nodes() {
                let v = a.entry(i, j);
                row_sum += v;
                assert!((v - a.entry(j, i)).abs() < 1e-14);
            }
            assert!(row_sum.abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_weights_sum_to_circumference() {
        let m = build_mesh(3, 24, 1).unwrap();
        assert!((m.quadrature().boundary_length() - TWO_PI).abs() < 1e-13);
        let tri_total: f64 = m.quadrature().triangle_areas().iter().sum();
        assert!((tri_total - m.quadrature().area()).abs() < 1e-13);
    }

    #[test]
    fn auxiliary_problem_has_zero_mean_and_full_flux() {
        let m = build_mesh(8, 32, 1).unwrap();
        let w = solve_auxiliary_neumann(&m).unwrap();
        let mean = area_integral(&m, &w).unwrap();
        assert!(mean.abs() < 1e-12);
        assert!((auxiliary_boundary_flux(&m, &w) - 2.0 * TWO_PI).abs() < 1e-9);
        let exact = ScalarField::from_fn(&m, |x, y| x * x + y * y - 0.5);
        assert!(w.max_abs_diff(&exact) < 2e-2);
        let _ = PI;
    }
}
