//! Oracle battery: brute-force DTW, path-enumerated soft-DTW, Gibbs
//! expectations, finite differences and distribution soundness.
//!
//! The gradient routines under test are injectable through [`CheckHooks`] so
//! that a deliberately broken implementation can be shown to fail.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::alignment::{alignment_matrix, dtw_cost, enumerate_paths, AlignmentMatrix, AlignmentPath, DistanceMatrix};
use crate::encoder::{encode, encode_backward, encode_with_cache, init_params, EncoderConfig, EncoderDims, EncoderParams};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::objective::{
    current_alignment, kl_row, lrprop_pair_loss_with, propagation_prior, same_video_prior, similarity_distribution,
    ClipView, HyperParams, RowStochasticMatrix,
};
use crate::softdtw::{gibbs_expected_alignment, softdtw_by_enumeration, softdtw_cost, softdtw_grad_wrt_distance, SoftDtwTables};
use crate::num;

/// Outcome of one check: the worst observed deviation against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64, observed: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            observed,
            passed: observed <= tolerance,
        }
    }
}

pub type SoftDtwGradFn = fn(&SoftDtwTables, &DistanceMatrix) -> Result<Matrix>;
pub type EncoderBackwardFn = fn(&Matrix, &EncoderParams, &Matrix) -> Result<Vec<f64>>;

/// Implementations exercised by the gradient checks.
#[derive(Clone, Copy)]
pub struct CheckHooks {
    pub softdtw_grad: SoftDtwGradFn,
    pub encoder_backward: EncoderBackwardFn,
}

impl Default for CheckHooks {
    fn default() -> Self {
        Self {
            softdtw_grad: softdtw_grad_wrt_distance,
            encoder_backward: encode_backward,
        }
    }
}

pub const GAMMAS: [f64; 3] = [0.05, 0.5, 2.0];

fn random_distance<R: Rng>(rng: &mut R, n: usize, m: usize) -> DistanceMatrix {
    let mat = Matrix::from_fn(n, m, |_, _| rng.random::<f64>() * 3.0);
    DistanceMatrix::new(mat).expect("nonnegative finite entries")
}

fn random_matrix<R: Rng>(rng: &mut R, n: usize, m: usize) -> Matrix {
    Matrix::from_fn(n, m, |_, _| StandardNormal.sample(rng))
}

fn brute_force_dtw(d: &DistanceMatrix, paths: &[AlignmentPath]) -> f64 {
    paths.iter().map(|p| p.cost(d)).fold(f64::INFINITY, f64::min)
}

/// `|dtw_cost - min over enumerated paths|` on `cases` random matrices with
/// sides up to 5. Exact equality is required.
pub fn check_dtw_bruteforce(cases: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut cache: Vec<Option<Vec<AlignmentPath>>> = vec![None; 36];
    for _ in 0..cases {
        let (n, m) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let d = random_distance(&mut rng, n, m);
        let slot = &mut cache[n * 6 + m];
        if slot.is_none() {
            *slot = Some(enumerate_paths(n, m)?);
        }
        let brute = brute_force_dtw(&d, slot.as_ref().unwrap());
        worst = worst.max((dtw_cost(&d) - brute).abs());
    }
    Ok(CheckResult::new("dtw_vs_enumeration", 0.0, worst))
}

/// Soft-DTW cost against the log-sum-exp over all enumerated paths.
pub fn check_softdtw_enumeration(cases: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (n, m) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let d = random_distance(&mut rng, n, m);
        for g in GAMMAS {
            let fast = softdtw_cost(&d, g)?.0;
            worst = worst.max((fast - softdtw_by_enumeration(&d, g)?).abs());
        }
    }
    Ok(CheckResult::new("softdtw_vs_enumeration", 1e-8, worst))
}

/// Soft-DTW gradient against the Gibbs expected alignment matrix.
pub fn check_softdtw_gibbs(cases: usize, seed: u64, hooks: &CheckHooks) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (n, m) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let d = random_distance(&mut rng, n, m);
        for g in GAMMAS {
            let (_, tables) = softdtw_cost(&d, g)?;
            let grad = (hooks.softdtw_grad)(&tables, &d)?;
            worst = worst.max(grad.max_abs_diff(&gibbs_expected_alignment(&d, g)?));
        }
    }
    Ok(CheckResult::new("softdtw_grad_vs_gibbs", 1e-8, worst))
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = num::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum());
    let scale = num::sqrt(a.iter().map(|x| x * x).sum::<f64>()).max(num::sqrt(b.iter().map(|x| x * x).sum::<f64>()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Soft-DTW gradient against central differences in every entry of `D`.
pub fn check_softdtw_finite_difference(seeds: u64, hooks: &CheckHooks) -> Result<CheckResult> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (n, m) = (rng.random_range(2..=6), rng.random_range(2..=6));
        let d = random_distance(&mut rng, n, m);
        let gamma = GAMMAS[seed as usize % GAMMAS.len()];
        let (_, tables) = softdtw_cost(&d, gamma)?;
        let grad = (hooks.softdtw_grad)(&tables, &d)?;
        let mut fd = vec![0.0; n * m];
        for k in 0..n * m {
            let shifted = |delta: f64| -> Result<f64> {
                let mut raw = d.as_matrix().clone();
                raw.as_mut_slice()[k] += delta;
                Ok(softdtw_cost(&DistanceMatrix::new(raw)?, gamma)?.0)
            };
            fd[k] = (shifted(h)? - shifted(-h)?) / (2.0 * h);
        }
        worst = worst.max(relative_error(&fd, grad.as_slice()));
    }
    Ok(CheckResult::new("softdtw_grad_vs_finite_difference", 1e-5, worst))
}

/// Gap bound on enumerable instances and the small-γ limit on random 4x4
/// matrices. Returns both results.
pub fn check_gamma_limit(cases: usize, seed: u64) -> Result<[CheckResult; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    for _ in 0..cases {
        let (n, m) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let d = random_distance(&mut rng, n, m);
        let count = enumerate_paths(n, m)?.len() as f64;
        for g in GAMMAS {
            let gap = dtw_cost(&d) - softdtw_cost(&d, g)?.0;
            // both bounds: 0 <= gap <= γ log(#paths)
            let excess = (gap - g * num::ln(count)).max(-gap);
            worst_excess = worst_excess.max(excess);
        }
    }
    let mut worst_small: f64 = 0.0;
    for _ in 0..cases {
        let d = random_distance(&mut rng, 4, 4);
        worst_small = worst_small.max((softdtw_cost(&d, 1e-6)?.0 - dtw_cost(&d)).abs());
    }
    Ok([
        CheckResult::new("softdtw_gap_bound_excess", 1e-12, worst_excess.max(0.0)),
        CheckResult::new("softdtw_small_gamma_limit", 1e-4, worst_small),
    ])
}

/// Encoder used by the end-to-end check.
pub fn small_encoder(d_in: usize, d_z: usize) -> EncoderConfig {
    EncoderConfig {
        dims: EncoderDims { d_in, d_h: 2 * d_in, d_z },
        mix_weight: 0.3,
        pos_scale: 0.2,
    }
}

fn pair_objective(
    params: &EncoderParams,
    clips: [&Matrix; 3],
    idx: [&[i64]; 3],
    hp: &HyperParams,
    frozen: &AlignmentMatrix,
) -> Result<f64> {
    let z: Vec<Matrix> = clips.iter().map(|c| encode(c, params)).collect::<Result<_>>()?;
    let same = lrprop_pair_loss_with(
        ClipView { indices: idx[0], embeddings: &z[0] },
        ClipView { indices: idx[1], embeddings: &z[1] },
        hp,
        true,
        None,
    )?;
    let cross = lrprop_pair_loss_with(
        ClipView { indices: idx[0], embeddings: &z[0] },
        ClipView { indices: idx[2], embeddings: &z[2] },
        hp,
        false,
        Some(frozen),
    )?;
    Ok(same.report.combined + cross.report.combined)
}

/// Same-video plus cross-video objective composed with the encoder, against
/// central differences over every parameter. The alignment matrix is held at
/// its value for the unperturbed parameters.
pub fn check_end_to_end(seeds: u64, clip_len: usize, d_z: usize, hooks: &CheckHooks) -> Result<CheckResult> {
    let h = 1e-5;
    let d_in = 5;
    let hp = HyperParams {
        clip_len,
        gamma: 0.5,
        lambda1: 0.5,
        ..HyperParams::default()
    };
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let params = init_params(seed, small_encoder(d_in, d_z))?;
        let clips = [
            random_matrix(&mut rng, clip_len, d_in),
            random_matrix(&mut rng, clip_len, d_in),
            random_matrix(&mut rng, clip_len, d_in),
        ];
        let idx: Vec<Vec<i64>> = (0..3)
            .map(|c| (0..clip_len as i64).map(|t| t * (c + 1) + c).collect())
            .collect();
        let enc: Vec<_> = clips.iter().map(|c| encode_with_cache(c, &params)).collect::<Result<_>>()?;
        let frozen = current_alignment(&enc[0].embeddings, &enc[2].embeddings)?;
        let view = |k: usize| ClipView { indices: &idx[k], embeddings: &enc[k].embeddings };
        let same = lrprop_pair_loss_with(view(0), view(1), &hp, true, None)?;
        let cross = lrprop_pair_loss_with(view(0), view(2), &hp, false, Some(&frozen))?;
        let mut up0 = same.grad_a.clone();
        for (a, b) in up0.as_mut_slice().iter_mut().zip(cross.grad_a.as_slice()) {
            *a += b;
        }
        let ups = [up0, same.grad_b, cross.grad_b];
        let mut grad = vec![0.0; params.values().len()];
        for (c, up) in clips.iter().zip(&ups) {
            for (g, v) in grad.iter_mut().zip((hooks.encoder_backward)(c, &params, up)?) {
                *g += v;
            }
        }
        let refs = [&clips[0], &clips[1], &clips[2]];
        let irefs = [&idx[0][..], &idx[1][..], &idx[2][..]];
        let mut fd = vec![0.0; grad.len()];
        for k in 0..grad.len() {
            let at = |delta: f64| -> Result<f64> {
                let mut vals = params.values().to_vec();
                vals[k] += delta;
                pair_objective(&EncoderParams::from_values(*params.config(), vals)?, refs, irefs, &hp, &frozen)
            };
            fd[k] = (at(h)? - at(-h)?) / (2.0 * h);
        }
        worst = worst.max(relative_error(&fd, &grad));
    }
    Ok(CheckResult::new("end_to_end_grad_vs_finite_difference", 1e-3, worst))
}

fn row_sum_error(m: &RowStochasticMatrix) -> f64 {
    (0..m.rows())
        .map(|j| (m.row(j).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Row normalization of priors and similarity distributions, nonnegativity of
/// KL, identity-alignment bit equality and the propagation tie rule. Returns
/// one result per property.
pub fn check_distributions(cases: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_norm: f64 = 0.0;
    let mut worst_kl: f64 = 0.0;
    let mut identity_mismatch = 0.0;
    for _ in 0..cases {
        let (n, m) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let za = random_matrix(&mut rng, n, 3);
        let zb = random_matrix(&mut rng, m, 3);
        let mut sa: Vec<i64> = (0..n as i64).map(|t| 2 * t + rng.random_range(0..2)).collect();
        sa.sort_unstable();
        let sb: Vec<i64> = (0..m as i64).map(|t| 3 * t).collect();
        let q = similarity_distribution(&za, &zb, 0.1)?;
        let prior_same = same_video_prior(&sa, &sb, 10.0)?;
        let a = current_alignment(&za, &zb)?;
        let prior_prop = propagation_prior(&sb, &a, 10.0)?;
        for mat in [&q, &prior_same, &prior_prop] {
            worst_norm = worst_norm.max(row_sum_error(mat));
        }
        for j in 0..m {
            for p in [&prior_same, &prior_prop] {
                worst_kl = worst_kl.max(-kl_row(p.row(j), q.row(j))?);
            }
        }
        let ident = AlignmentMatrix::identity(n);
        let via_prop = propagation_prior(&sa, &ident, 10.0)?;
        let direct = same_video_prior(&sa, &sa, 10.0)?;
        if via_prop.as_matrix().as_slice() != direct.as_matrix().as_slice() {
            identity_mismatch = 1.0;
        }
    }
    // column 1 is covered by rows 1 and 2; the smaller row must propagate
    let path = AlignmentPath::new(alloc::vec![(0, 0), (1, 1), (2, 1), (3, 2)], 4, 3)?;
    let a = alignment_matrix(&path, 4, 3)?;
    let sb = [0i64, 10, 20, 30];
    let prior = propagation_prior(&sb, &a, 10.0)?;
    let expected = same_video_prior(&[0, 10, 30], &sb, 10.0)?;
    let tie = if prior.as_matrix().as_slice() == expected.as_matrix().as_slice() { 0.0 } else { 1.0 };
    Ok(vec![
        CheckResult::new("row_normalization", 1e-12, worst_norm),
        CheckResult::new("kl_nonnegative", 1e-12, worst_kl + 0.0),
        CheckResult::new("identity_propagation_bit_equal", 0.0, identity_mismatch),
        CheckResult::new("propagation_tie_smallest_row", 0.0, tie),
    ])
}

/// Sizes and tolerances of the full battery.
#[derive(Clone, Copy, Debug)]
pub struct BatteryConfig {
    pub seed: u64,
    pub dtw_cases: usize,
    pub softdtw_cases: usize,
    pub fd_seeds: u64,
    pub end_to_end_seeds: u64,
    pub clip_len: usize,
    pub d_z: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dtw_cases: 200,
            softdtw_cases: 100,
            fd_seeds: 20,
            end_to_end_seeds: 10,
            clip_len: 8,
            d_z: 4,
        }
    }
}

pub fn run_battery(cfg: &BatteryConfig, hooks: &CheckHooks) -> Result<Vec<CheckResult>> {
    let mut out = vec![
        check_dtw_bruteforce(cfg.dtw_cases, cfg.seed)?,
        check_softdtw_enumeration(cfg.softdtw_cases, cfg.seed + 1)?,
        check_softdtw_gibbs(cfg.softdtw_cases, cfg.seed + 2, hooks)?,
        check_softdtw_finite_difference(cfg.fd_seeds, hooks)?,
    ];
    out.extend(check_gamma_limit(cfg.softdtw_cases, cfg.seed + 3)?);
    out.push(check_end_to_end(cfg.end_to_end_seeds, cfg.clip_len, cfg.d_z, hooks)?);
    out.extend(check_distributions(cfg.softdtw_cases, cfg.seed + 4)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BatteryConfig {
        BatteryConfig {
            dtw_cases: 40,
            softdtw_cases: 20,
            fd_seeds: 4,
            end_to_end_seeds: 2,
            ..BatteryConfig::default()
        }
    }

    #[test]
    fn battery_passes() {
        for r in run_battery(&quick(), &CheckHooks::default()).unwrap() {
            assert!(r.passed, "{r:?}");
        }
    }

    fn flipped_softdtw(t: &SoftDtwTables, d: &DistanceMatrix) -> Result<Matrix> {
        Ok(softdtw_grad_wrt_distance(t, d)?.scale(-1.0))
    }

    fn flipped_encoder(f: &Matrix, p: &EncoderParams, u: &Matrix) -> Result<Vec<f64>> {
        Ok(encode_backward(f, p, u)?.into_iter().map(|x| -x).collect())
    }

    #[test]
    fn sign_errors_detected() {
        let hooks = CheckHooks {
            softdtw_grad: flipped_softdtw,
            ..CheckHooks::default()
        };
        assert!(!check_softdtw_gibbs(5, 0, &hooks).unwrap().passed);
        assert!(!check_softdtw_finite_difference(2, &hooks).unwrap().passed);
        let hooks = CheckHooks {
            encoder_backward: flipped_encoder,
            ..CheckHooks::default()
        };
        assert!(!check_end_to_end(1, 6, 3, &hooks).unwrap().passed);
    }

    #[test]
    fn relative_error_basics() {
        assert_eq!(relative_error(&[0.0], &[0.0]), 0.0);
        assert_eq!(relative_error(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((relative_error(&[1.0], &[-1.0]) - 2.0).abs() < 1e-15);
    }
}
