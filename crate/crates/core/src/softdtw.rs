//! Soft-DTW: the DTW recursion with `min` replaced by the smoothed minimum
//! `min_γ(a) = -γ log Σ exp(-a_k / γ)`, plus the adjoint recursion giving the
//! exact gradient of the cost with respect to every distance entry.
//!
//! The gradient entry `(i, j)` equals the probability that cell `(i, j)` lies on
//! a path drawn from the Gibbs distribution `p(A) ∝ exp(-<A, D> / γ)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::alignment::DistanceMatrix;
use crate::error::{invalid, Error, Result};
use crate::linalg::{euclidean, Matrix};
use crate::num;

/// Forward table of a soft-DTW evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftDtwTables {
    gamma: f64,
    forward: Matrix,
}

impl SoftDtwTables {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Accumulated soft costs `r^γ(i, j)`.
    pub fn forward(&self) -> &Matrix {
        &self.forward
    }

    pub fn cost(&self) -> f64 {
        self.forward[(self.forward.rows() - 1, self.forward.cols() - 1)]
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid("gamma must be positive and finite"));
    }
    Ok(())
}

/// Max-shifted `-γ log Σ exp(-a_k / γ)`. `+inf` entries contribute nothing.
pub fn soft_min(values: &[f64], gamma: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("soft_min of an empty list"));
    }
    check_gamma(gamma)?;
    Ok(soft_min_unchecked(values, gamma))
}

#[inline]
fn soft_min_unchecked(values: &[f64], gamma: f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if lo == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|&a| num::exp(-(a - lo) / gamma)).sum();
    lo - gamma * num::ln(s)
}

/// Soft-DTW cost and forward table.
pub fn softdtw_cost(d: &DistanceMatrix, gamma: f64) -> Result<(f64, SoftDtwTables)> {
    check_gamma(gamma)?;
    let (n, m) = (d.rows(), d.cols());
    let mut r = Matrix::filled(n, m, f64::INFINITY);
    for i in 0..n {
        for j in 0..m {
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { r[(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { r[(i, j - 1)] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { r[(i - 1, j - 1)] } else { f64::INFINITY };
                soft_min_unchecked(&[up, left, diag], gamma)
            };
            r[(i, j)] = d[(i, j)] + prev;
        }
    }
    let tables = SoftDtwTables { gamma, forward: r };
    Ok((tables.cost(), tables))
}

/// Exact `∂ cost / ∂ D(i, j)` by the adjoint recursion over the forward table.
pub fn softdtw_grad_wrt_distance(tables: &SoftDtwTables, d: &DistanceMatrix) -> Result<Matrix> {
    let r = &tables.forward;
    if r.shape() != (d.rows(), d.cols()) {
        return Err(invalid("soft-DTW tables do not match the distance matrix"));
    }
    let gamma = tables.gamma;
    let (n, m) = r.shape();
    let mut e = Matrix::zeros(n, m);
    e[(n - 1, m - 1)] = 1.0;
    // weight of predecessor (i, j) inside successor s: exp((r(s) - D(s) - r(i,j)) / γ)
    let w = |si: usize, sj: usize, i: usize, j: usize| -> f64 {
        num::exp((r[(si, sj)] - d[(si, sj)] - r[(i, j)]) / gamma)
    };
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            if i == n - 1 && j == m - 1 {
                continue;
            }
            let mut acc = 0.0;
            if i + 1 < n {
                acc += e[(i + 1, j)] * w(i + 1, j, i, j);
            }
            if j + 1 < m {
                acc += e[(i, j + 1)] * w(i, j + 1, i, j);
            }
            if i + 1 < n && j + 1 < m {
                acc += e[(i + 1, j + 1)] * w(i + 1, j + 1, i, j);
            }
            e[(i, j)] = acc;
        }
    }
    Ok(e)
}

/// Embedding gradients from the distance gradient, chaining through
/// `d(z1_i, z2_j) = ||z1_i - z2_j||`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingGrads {
    pub grad_z1: Matrix,
    pub grad_z2: Matrix,
    /// Cells with zero distance but nonzero weight, where the zero subgradient was used.
    pub zero_distance_cells: usize,
}

pub fn softdtw_grad_wrt_embeddings(z1: &Matrix, z2: &Matrix, grad_d: &Matrix) -> Result<EmbeddingGrads> {
    if z1.cols() != z2.cols() {
        return Err(Error::DimensionMismatch {
            expected: z1.cols(),
            got: z2.cols(),
        });
    }
    if grad_d.shape() != (z1.rows(), z2.rows()) {
        return Err(invalid("distance gradient shape does not match the sequences"));
    }
    let dim = z1.cols();
    let mut g1 = Matrix::zeros(z1.rows(), dim);
    let mut g2 = Matrix::zeros(z2.rows(), dim);
    let mut zero_cells = 0;
    let mut diff = vec![0.0; dim];
    for i in 0..z1.rows() {
        for j in 0..z2.rows() {
            let w = grad_d[(i, j)];
            if w == 0.0 {
                continue;
            }
            let (a, b) = (z1.row(i), z2.row(j));
            let dist = euclidean(a, b);
            if dist == 0.0 {
                zero_cells += 1;
                continue;
            }
            for k in 0..dim {
                diff[k] = (a[k] - b[k]) / dist * w;
            }
            for (g, &v) in g1.row_mut(i).iter_mut().zip(&diff) {
                *g += v;
            }
            for (g, &v) in g2.row_mut(j).iter_mut().zip(&diff) {
                *g -= v;
            }
        }
    }
    Ok(EmbeddingGrads {
        grad_z1: g1,
        grad_z2: g2,
        zero_distance_cells: zero_cells,
    })
}

/// Brute-force soft-DTW over explicitly enumerated paths; used as an oracle.
pub fn softdtw_by_enumeration(d: &DistanceMatrix, gamma: f64) -> Result<f64> {
    let costs: Vec<f64> = crate::alignment::enumerate_alignments(d.rows(), d.cols())?
        .iter()
        .map(|a| a.inner(d))
        .collect();
    soft_min(&costs, gamma)
}

/// Expected alignment matrix under the Gibbs distribution over enumerated paths.
pub fn gibbs_expected_alignment(d: &DistanceMatrix, gamma: f64) -> Result<Matrix> {
    check_gamma(gamma)?;
    let alignments = crate::alignment::enumerate_alignments(d.rows(), d.cols())?;
    let costs: Vec<f64> = alignments.iter().map(|a| a.inner(d)).collect();
    let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = costs.iter().map(|&c| num::exp(-(c - lo) / gamma)).collect();
    let total: f64 = weights.iter().sum();
    let mut out = Matrix::zeros(d.rows(), d.cols());
    for (a, w) in alignments.iter().zip(&weights) {
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                if a.get(i, j) {
                    out[(i, j)] += w / total;
                }
            }
        }
    }
    Ok(out)
}
