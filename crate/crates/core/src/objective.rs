//! The training objective for one pair of sampled clips.
//!
//! Clip `A` indexes columns (`i`) and clip `B` indexes rows (`j`) of every
//! matrix here:
//!
//! - `Q(i | j)`: softmax over `i` of `cos(zB_j, zA_i) / τ`,
//! - same-video prior `P(i | j) ∝ exp(-(sB_j - sA_i)² / 2σ²)`,
//! - propagated prior `P(i | j) ∝ exp(-(sB_j - sB_{k*(i)})² / 2σ²)` where
//!   `k*(i)` is the first row aligned to column `i` by the DTW path of the
//!   current embeddings,
//! - losses are the row-mean of `KL(P(·|j) ‖ Q(·|j))`.
//!
//! A same-video pair is scored with the Gaussian prior alone. A cross-video
//! pair is scored with `λ1 · L_prop + λ2 · L_sdtw`. The alignment matrix is a
//! constant for differentiation: gradients flow through `Q` and soft-DTW only.

use alloc::vec::Vec;

use crate::alignment::{alignment_matrix, distance_matrix, dtw_path, AlignmentMatrix};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::num;
use crate::softdtw::{softdtw_cost, softdtw_grad_wrt_distance, softdtw_grad_wrt_embeddings};

/// Floor applied to `q` entries inside [`kl_row`].
pub const Q_FLOOR: f64 = 1e-12;

/// Loss hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    /// Softmax temperature of the similarity distribution.
    pub tau: f64,
    /// Prior variance σ².
    pub sigma_sq: f64,
    /// Weight of the propagation loss on cross-video pairs.
    pub lambda1: f64,
    /// Weight of the soft-DTW loss on cross-video pairs.
    pub lambda2: f64,
    /// Soft-DTW smoothing.
    pub gamma: f64,
    /// Frames per sampled clip.
    pub clip_len: usize,
    /// Divide the soft-DTW cost by the number of rows of the pair.
    pub normalize_sdtw: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            tau: 0.1,
            sigma_sq: 10.0,
            lambda1: 0.1,
            lambda2: 0.8,
            gamma: 0.1,
            clip_len: 32,
            normalize_sdtw: true,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.tau) {
            return Err(invalid("tau must be positive"));
        }
        if !positive(self.sigma_sq) {
            return Err(invalid("sigma_sq must be positive"));
        }
        if !positive(self.gamma) {
            return Err(invalid("gamma must be positive"));
        }
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) || !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(invalid("lambda weights must be nonnegative"));
        }
        if self.clip_len == 0 {
            return Err(invalid("clip length must be positive"));
        }
        Ok(())
    }
}

/// Matrix whose rows are probability distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct RowStochasticMatrix(Matrix);

impl RowStochasticMatrix {
    /// Checks nonnegativity and unit row sums (within `1e-12`).
    pub fn new(values: Matrix) -> Result<Self> {
        if values.as_slice().iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("row-stochastic entries must be finite and nonnegative"));
        }
        for row in values.row_iter() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(invalid("row does not sum to one"));
            }
        }
        Ok(Self(values))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.0.row(j)
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }
}

/// Row-wise normalization that keeps every row summing to one within `1e-12`.
fn normalize_rows(mut m: Matrix) -> RowStochasticMatrix {
    for j in 0..m.rows() {
        let row = m.row_mut(j);
        let s: f64 = row.iter().sum();
        for x in row.iter_mut() {
            *x /= s;
        }
    }
    RowStochasticMatrix(m)
}

fn softmax_rows(logits: &Matrix) -> RowStochasticMatrix {
    let mut out = logits.clone();
    for j in 0..out.rows() {
        let row = out.row_mut(j);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in row.iter_mut() {
            *x = num::exp(*x - hi);
        }
    }
    normalize_rows(out)
}

fn cosine_logits(z_a: &Matrix, z_b: &Matrix, tau: f64) -> Result<Matrix> {
    if z_a.cols() != z_b.cols() {
        return Err(Error::DimensionMismatch {
            expected: z_a.cols(),
            got: z_b.cols(),
        });
    }
    if z_a.rows() == 0 || z_b.rows() == 0 {
        return Err(invalid("embedding sequences must be nonempty"));
    }
    if !(tau > 0.0) {
        return Err(invalid("tau must be positive"));
    }
    let na: Vec<f64> = z_a.row_iter().map(norm).collect();
    let nb: Vec<f64> = z_b.row_iter().map(norm).collect();
    if na.iter().chain(&nb).any(|&n| n == 0.0) {
        return Err(invalid("cosine similarity undefined for a zero-norm embedding"));
    }
    Ok(Matrix::from_fn(z_b.rows(), z_a.rows(), |j, i| {
        dot(z_b.row(j), z_a.row(i)) / (nb[j] * na[i]) / tau
    }))
}

/// `Q(i | j) = softmax_i(cos(zB_j, zA_i) / τ)`; rows follow `z_b`.
pub fn similarity_distribution(z_a: &Matrix, z_b: &Matrix, tau: f64) -> Result<RowStochasticMatrix> {
    Ok(softmax_rows(&cosine_logits(z_a, z_b, tau)?))
}

/// Rows `∝ exp(-(row_centers[j] - col_centers[i])² / 2σ²)`.
fn gaussian_rows(row_centers: &[i64], col_centers: &[i64], sigma_sq: f64) -> RowStochasticMatrix {
    let m = Matrix::from_fn(row_centers.len(), col_centers.len(), |j, i| {
        let d = (row_centers[j] - col_centers[i]) as f64;
        num::exp(-(d * d) / (2.0 * sigma_sq))
    });
    normalize_rows(m)
}

/// Gaussian prior between two samplings of the same video.
pub fn same_video_prior(s_a: &[i64], s_b: &[i64], sigma_sq: f64) -> Result<RowStochasticMatrix> {
    if s_a.is_empty() || s_b.is_empty() {
        return Err(invalid("index lists must be nonempty"));
    }
    if !(sigma_sq > 0.0) {
        return Err(invalid("sigma_sq must be positive"));
    }
    Ok(gaussian_rows(s_b, s_a, sigma_sq))
}

/// For each column `i`, the smallest row `k` with `A(k, i) = 1`.
pub fn propagated_rows(a: &AlignmentMatrix) -> Result<Vec<usize>> {
    (0..a.cols())
        .map(|i| {
            (0..a.rows())
                .find(|&k| a.get(k, i))
                .ok_or_else(|| invalid("alignment column without an aligned row"))
        })
        .collect()
}

/// Prior for a cross-video pair, propagated through the alignment matrix `a`
/// (rows follow clip `B`, columns clip `A`).
pub fn propagation_prior(s_b: &[i64], a: &AlignmentMatrix, sigma_sq: f64) -> Result<RowStochasticMatrix> {
    if a.rows() != s_b.len() {
        return Err(Error::DimensionMismatch {
            expected: s_b.len(),
            got: a.rows(),
        });
    }
    if !(sigma_sq > 0.0) {
        return Err(invalid("sigma_sq must be positive"));
    }
    let centers: Vec<i64> = propagated_rows(a)?.into_iter().map(|k| s_b[k]).collect();
    Ok(gaussian_rows(s_b, &centers, sigma_sq))
}

/// `Σ p_i log(p_i / q_i)` with `0 log 0 = 0`. Positive `q` entries are floored
/// at [`Q_FLOOR`]; an exactly zero `q` where `p > 0` is an error.
pub fn kl_row(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut s = 0.0;
    for (index, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(Error::InfiniteDivergence { index });
        }
        s += pi * num::ln(pi / qi.max(Q_FLOOR));
    }
    Ok(s)
}

fn mean_row_kl(prior: &RowStochasticMatrix, q: &RowStochasticMatrix) -> Result<f64> {
    if prior.as_matrix().shape() != q.as_matrix().shape() {
        return Err(invalid("prior and similarity distribution shapes differ"));
    }
    let mut s = 0.0;
    for j in 0..prior.rows() {
        s += kl_row(prior.row(j), q.row(j))?;
    }
    Ok(s / prior.rows() as f64)
}

/// Same-video loss: mean over rows of `KL(prior ‖ q)`.
pub fn loss_same(prior: &RowStochasticMatrix, q: &RowStochasticMatrix) -> Result<f64> {
    mean_row_kl(prior, q)
}

/// Propagation loss; same form as [`loss_same`] with the propagated prior.
pub fn loss_prop(prior: &RowStochasticMatrix, q: &RowStochasticMatrix) -> Result<f64> {
    mean_row_kl(prior, q)
}

/// Gradient of `scale · mean_j KL(P_j ‖ Q_j)` with respect to both embedding
/// sequences, through the softmax and the cosine similarity.
fn kl_cosine_backward(
    z_a: &Matrix,
    z_b: &Matrix,
    prior: &RowStochasticMatrix,
    q: &RowStochasticMatrix,
    tau: f64,
    scale: f64,
) -> (Matrix, Matrix) {
    let (rows, cols) = (z_b.rows(), z_a.rows());
    let dim = z_a.cols();
    let na: Vec<f64> = z_a.row_iter().map(norm).collect();
    let nb: Vec<f64> = z_b.row_iter().map(norm).collect();
    let mut ga = Matrix::zeros(cols, dim);
    let mut gb = Matrix::zeros(rows, dim);
    let c = scale / (rows as f64 * tau);
    for j in 0..rows {
        let u = z_b.row(j);
        for i in 0..cols {
            let g = c * (q.row(j)[i] - prior.row(j)[i]);
            if g == 0.0 {
                continue;
            }
            let v = z_a.row(i);
            let inv = 1.0 / (nb[j] * na[i]);
            let s = dot(u, v) * inv;
            let (su, sv) = (s / (nb[j] * nb[j]), s / (na[i] * na[i]));
            for k in 0..dim {
                gb[(j, k)] += g * (v[k] * inv - su * u[k]);
                ga[(i, k)] += g * (u[k] * inv - sv * v[k]);
            }
        }
    }
    (ga, gb)
}

/// Which branch of the objective a pair takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    SameVideo,
    CrossVideo,
}

/// Loss breakdown for one clip pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub loss_same: f64,
    pub loss_prop: f64,
    pub loss_sdtw: f64,
    pub combined: f64,
    /// L2 norm of the concatenated embedding gradients.
    pub grad_norm: f64,
    pub pair_kind: PairKind,
    /// Soft-DTW cells where coincident frames forced the zero subgradient.
    pub zero_distance_cells: usize,
}

impl LossReport {
    /// Recombines the parts with the given weights.
    pub fn recombine(&self, hp: &HyperParams) -> f64 {
        match self.pair_kind {
            PairKind::SameVideo => self.loss_same,
            PairKind::CrossVideo => hp.lambda1 * self.loss_prop + hp.lambda2 * self.loss_sdtw,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.loss_same.is_finite()
            && self.loss_prop.is_finite()
            && self.loss_sdtw.is_finite()
            && self.combined.is_finite()
            && self.grad_norm.is_finite()
    }
}

/// Loss and embedding gradients for one clip pair.
#[derive(Clone, Debug)]
pub struct PairLoss {
    pub report: LossReport,
    pub grad_a: Matrix,
    pub grad_b: Matrix,
}

/// One clip of a pair: sampled source indices and its embeddings.
#[derive(Clone, Copy, Debug)]
pub struct ClipView<'a> {
    pub indices: &'a [i64],
    pub embeddings: &'a Matrix,
}

/// Alignment matrix of the current embeddings, rows following `z_b`.
pub fn current_alignment(z_a: &Matrix, z_b: &Matrix) -> Result<AlignmentMatrix> {
    let d = distance_matrix(z_b, z_a)?;
    alignment_matrix(&dtw_path(&d), z_b.rows(), z_a.rows())
}

/// Pair objective with gradients. For cross-video pairs the alignment matrix
/// is taken from `frozen_alignment` when given, else recomputed by exact DTW
/// on the current embeddings; either way it is held constant.
pub fn lrprop_pair_loss_with(
    a: ClipView<'_>,
    b: ClipView<'_>,
    hp: &HyperParams,
    same_video: bool,
    frozen_alignment: Option<&AlignmentMatrix>,
) -> Result<PairLoss> {
    let (z_a, z_b) = (a.embeddings, b.embeddings);
    if a.indices.len() != z_a.rows() || b.indices.len() != z_b.rows() {
        return Err(invalid("index list length differs from embedding rows"));
    }
    let q = similarity_distribution(z_a, z_b, hp.tau)?;
    if same_video {
        let prior = same_video_prior(a.indices, b.indices, hp.sigma_sq)?;
        let l = loss_same(&prior, &q)?;
        let (ga, gb) = kl_cosine_backward(z_a, z_b, &prior, &q, hp.tau, 1.0);
        let grad_norm = num::sqrt(dot(ga.as_slice(), ga.as_slice()) + dot(gb.as_slice(), gb.as_slice()));
        return Ok(PairLoss {
            report: LossReport {
                loss_same: l,
                loss_prop: 0.0,
                loss_sdtw: 0.0,
                combined: l,
                grad_norm,
                pair_kind: PairKind::SameVideo,
                zero_distance_cells: 0,
            },
            grad_a: ga,
            grad_b: gb,
        });
    }

    let d = distance_matrix(z_b, z_a)?;
    let owned;
    let alignment = match frozen_alignment {
        Some(al) => al,
        None => {
            owned = alignment_matrix(&dtw_path(&d), z_b.rows(), z_a.rows())?;
            &owned
        }
    };
    let prior = propagation_prior(b.indices, alignment, hp.sigma_sq)?;
    let lp = loss_prop(&prior, &q)?;
    let (mut ga, mut gb) = kl_cosine_backward(z_a, z_b, &prior, &q, hp.tau, hp.lambda1);

    let (raw_sdtw, tables) = softdtw_cost(&d, hp.gamma)?;
    let norm_factor = if hp.normalize_sdtw { 1.0 / z_b.rows() as f64 } else { 1.0 };
    let ls = raw_sdtw * norm_factor;
    let mut zero_cells = 0;
    if hp.lambda2 != 0.0 {
        let mut gd = softdtw_grad_wrt_distance(&tables, &d)?;
        let w = hp.lambda2 * norm_factor;
        for x in gd.as_mut_slice() {
            *x *= w;
        }
        // distance rows follow clip B
        let eg = softdtw_grad_wrt_embeddings(z_b, z_a, &gd)?;
        zero_cells = eg.zero_distance_cells;
        add_into(&mut gb, &eg.grad_z1);
        add_into(&mut ga, &eg.grad_z2);
    }
    let grad_norm = num::sqrt(dot(ga.as_slice(), ga.as_slice()) + dot(gb.as_slice(), gb.as_slice()));
    Ok(PairLoss {
        report: LossReport {
            loss_same: 0.0,
            loss_prop: lp,
            loss_sdtw: ls,
            combined: hp.lambda1 * lp + hp.lambda2 * ls,
            grad_norm,
            pair_kind: PairKind::CrossVideo,
            zero_distance_cells: zero_cells,
        },
        grad_a: ga,
        grad_b: gb,
    })
}

/// Pair objective with the alignment recomputed from the current embeddings.
pub fn lrprop_pair_loss(a: ClipView<'_>, b: ClipView<'_>, hp: &HyperParams, same_video: bool) -> Result<PairLoss> {
    lrprop_pair_loss_with(a, b, hp, same_video, None)
}

fn add_into(dst: &mut Matrix, src: &Matrix) {
    for (d, s) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
        *d += s;
    }
}

/// Shannon entropy of each row, in nats.
pub fn row_entropies(m: &RowStochasticMatrix) -> Vec<f64> {
    (0..m.rows())
        .map(|j| {
            m.row(j)
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * num::ln(p))
                .sum()
        })
        .collect()
}

/// Indices `0..n` as signed frame indices.
pub fn iota(n: usize) -> Vec<i64> {
    (0..n as i64).collect()
}
