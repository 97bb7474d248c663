//! Sparse storage for the stiffness operator and a banded Cholesky factor.
//!
//! The polar node numbering (center, then ring by ring) keeps every
//! stiffness coupling within `n_angular + 1` of the diagonal, so a dense band
//! factorization is exact and cheap at the mesh sizes used here.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub(crate) struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col) → value` triplets; duplicates are summed in
    /// key order so the result does not depend on insertion order.
    pub(crate) fn from_map(n: usize, entries: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for (&(r, c), &v) in entries {
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    pub(crate) fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub(crate) fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(c, _)| i.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }
}

/// `Σ aᵢbᵢ` with four independent accumulators.
fn dot_unrolled(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Lower-triangular banded Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct BandedCholesky {
    n: usize,
    bw: usize,
    // row-major: entry (i, j), i - bw <= j <= i, at i * (bw + 1) + (j + bw - i)
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factors `A + diag(shift)`, with rows/columns listed in `pinned`
    /// replaced by the identity.
    pub(crate) fn factor(a: &CsrMatrix, shift: Option<&[f64]>, pinned: &[usize]) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let stride = bw + 1;
        let mut data = vec![0.0; n * stride];
        let is_pinned = |i: usize| pinned.contains(&i);
        for i in 0..n {
            if is_pinned(i) {
                data[i * stride + bw] = 1.0;
                continue;
            }
            for (j, v) in a.row(i) {
                if j <= i && !is_pinned(j) {
                    data[i * stride + (j + bw - i)] += v;
                }
            }
            if let Some(s) = shift {
                data[i * stride + bw] += s[i];
            }
        }
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let (head, row_i) = data.split_at_mut(i * stride);
                let row_i = &mut row_i[..stride];
                let s = if i == j {
                    let seg = &row_i[lo + bw - i..j + bw - i];
                    row_i[bw] - dot_unrolled(seg, seg)
                } else {
                    let row_j = &head[j * stride..(j + 1) * stride];
                    let a = &row_i[lo + bw - i..j + bw - i];
                    let b = &row_j[lo + bw - j..bw];
                    row_i[j + bw - i] - dot_unrolled(a, b)
                };
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::LinearSolve(format!(
                            "matrix not positive definite at row {i} (pivot {s:e})"
                        )));
                    }
                    row_i[bw] = sqrt(s);
                } else {
                    row_i[j + bw - i] = s / head[j * stride + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, data })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[i * stride + (k + bw - i)] * y[k];
            }
            y[i] = s / self.data[i * stride + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= self.data[k * stride + (i + bw - k)] * y[k];
            }
            y[i] = s / self.data[i * stride + bw];
        }
        y
    }
}
