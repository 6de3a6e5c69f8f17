//! Training loop: six clip pairs per video pair, averaged pair objective,
//! AdamW with cosine decay.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{encode, encode_with_cache, init_params, EncoderConfig, EncoderDims, EncoderParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{evaluate, EvalReport, LabeledVideo};
use crate::objective::{lrprop_pair_loss, ClipView, HyperParams, LossReport, PairKind, PairLoss};
use crate::optim::{adamw_step, cosine_lr, OptimizerState};
use crate::sampling::build_batch;
use crate::synth::SyntheticVideo;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hyper: HyperParams,
    pub encoder: EncoderConfig,
    pub cosine_decay: bool,
    /// Feature augmentation strength applied to every sampled clip.
    pub augment_strength: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 1e-5,
            epochs: 30,
            seed: 7,
            hyper: HyperParams::default(),
            encoder: EncoderConfig {
                dims: EncoderDims { d_in: 12, d_h: 32, d_z: 16 },
                mix_weight: 0.25,
                pos_scale: 0.1,
            },
            cosine_decay: true,
            augment_strength: 0.05,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning rate must be positive"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(invalid("weight decay must be nonnegative"));
        }
        if !(self.augment_strength >= 0.0 && self.augment_strength.is_finite()) {
            return Err(invalid("augmentation strength must be nonnegative"));
        }
        self.hyper.validate()?;
        self.encoder.validate()
    }

    pub fn lr_at(&self, step: u64, total: u64) -> f64 {
        if self.cosine_decay {
            cosine_lr(self.learning_rate, step, total)
        } else {
            self.learning_rate
        }
    }
}

/// Runs the six pair computations of a step. Results must come back in index
/// order; accumulation happens afterwards on the caller's thread.
pub trait PairExecutor {
    fn map_pairs(&self, n: usize, f: &(dyn Fn(usize) -> Result<PairLoss> + Sync)) -> Vec<Result<PairLoss>>;
}

pub struct Sequential;

impl PairExecutor for Sequential {
    fn map_pairs(&self, n: usize, f: &(dyn Fn(usize) -> Result<PairLoss> + Sync)) -> Vec<Result<PairLoss>> {
        (0..n).map(f).collect()
    }
}

/// Losses of one optimizer step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub pairs: Vec<LossReport>,
    /// Mean over same-video pairs.
    pub loss_same: f64,
    /// Means over cross-video pairs.
    pub loss_prop: f64,
    pub loss_sdtw: f64,
    /// Mean combined objective over all pairs; the quantity differentiated.
    pub combined: f64,
    pub lr: f64,
}

fn mean_of(reports: &[LossReport], kind: PairKind, f: impl Fn(&LossReport) -> f64) -> f64 {
    let xs: Vec<f64> = reports.iter().filter(|r| r.pair_kind == kind).map(f).collect();
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// One update on a pair of videos with learning rate `lr`.
#[allow(clippy::too_many_arguments)]
pub fn train_step<R: rand::Rng + ?Sized>(
    params: &EncoderParams,
    opt_state: &OptimizerState,
    video_a: &Matrix,
    video_b: &Matrix,
    config: &TrainConfig,
    lr: f64,
    rng: &mut R,
    exec: &dyn PairExecutor,
) -> Result<(EncoderParams, OptimizerState, StepReport)> {
    let hp = &config.hyper;
    let batch = build_batch(video_a, video_b, hp.clip_len, config.augment_strength, rng)?;
    let encoded = batch
        .clips
        .iter()
        .map(|c| encode_with_cache(&c.features, params))
        .collect::<Result<Vec<_>>>()?;
    let indices: Vec<Vec<i64>> = batch.clips.iter().map(|c| c.indices_i64()).collect();

    let pairs = &batch.pairs;
    let job = |k: usize| {
        let p = pairs[k];
        lrprop_pair_loss(
            ClipView { indices: &indices[p.a], embeddings: &encoded[p.a].embeddings },
            ClipView { indices: &indices[p.b], embeddings: &encoded[p.b].embeddings },
            hp,
            p.same_video,
        )
    };
    let results = exec.map_pairs(pairs.len(), &job);

    let n_pairs = pairs.len() as f64;
    let mut upstream: Vec<Matrix> = encoded
        .iter()
        .map(|e| Matrix::zeros(e.embeddings.rows(), e.embeddings.cols()))
        .collect();
    let mut reports = Vec::with_capacity(pairs.len());
    for (p, res) in pairs.iter().zip(results) {
        let pl = res?;
        for (dst, src) in [(p.a, &pl.grad_a), (p.b, &pl.grad_b)] {
            for (d, s) in upstream[dst].as_mut_slice().iter_mut().zip(src.as_slice()) {
                *d += s / n_pairs;
            }
        }
        reports.push(pl.report);
    }
    let report = StepReport {
        loss_same: mean_of(&reports, PairKind::SameVideo, |r| r.loss_same),
        loss_prop: mean_of(&reports, PairKind::CrossVideo, |r| r.loss_prop),
        loss_sdtw: mean_of(&reports, PairKind::CrossVideo, |r| r.loss_sdtw),
        combined: reports.iter().map(|r| r.combined).sum::<f64>() / n_pairs,
        lr,
        pairs: reports,
    };
    if !report.combined.is_finite() || report.pairs.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite(format!("step aborted: {report:?}")));
    }

    let mut grad = alloc::vec![0.0; params.values().len()];
    for ((clip, enc), up) in batch.clips.iter().zip(&encoded).zip(&upstream) {
        let g = enc.backward(&clip.features, params, up)?;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let mut next = params.clone();
    let mut state = opt_state.clone();
    adamw_step(next.values_mut(), &grad, &mut state, lr, config.weight_decay)?;
    if !next.values().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(format!("parameters after step {}", state.step)));
    }
    Ok((next, state, report))
}

/// Unordered pairs `(i, j)`, `i < j`, of videos sharing a class.
pub fn same_class_pairs(classes: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            if classes[i] == classes[j] {
                out.push((i, j));
            }
        }
    }
    out
}

const SHUFFLE_STREAM: u64 = 1 << 63;

fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Visiting order of the pairs in `epoch`.
pub fn epoch_order(seed: u64, epoch: u64, n_pairs: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SHUFFLE_STREAM | epoch);
    let mut order: Vec<usize> = (0..n_pairs).collect();
    order.shuffle(&mut rng);
    order
}

/// One row of the training curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub step: u64,
    pub loss_same: f64,
    pub loss_prop: f64,
    pub loss_sdtw: f64,
    pub combined: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Continue from a saved state instead of a fresh initialization.
    pub resume: Option<(EncoderParams, OptimizerState)>,
    /// Stop once this many total steps have been taken.
    pub stop_after: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub opt_state: OptimizerState,
    pub curve: Vec<CurvePoint>,
    pub total_steps: u64,
}

impl TrainOutcome {
    pub fn finished(&self) -> bool {
        self.opt_state.step >= self.total_steps
    }
}

/// Trains on `videos`, pairing only videos of the same class. The step index
/// fixes both the pair visited and the sampling randomness, so a resumed run
/// reproduces the uninterrupted one.
pub fn train(
    videos: &[&Matrix],
    classes: &[usize],
    config: &TrainConfig,
    options: TrainOptions,
    exec: &dyn PairExecutor,
) -> Result<TrainOutcome> {
    config.validate()?;
    if videos.len() != classes.len() {
        return Err(invalid("one class label per video required"));
    }
    let pairs = same_class_pairs(classes);
    if pairs.is_empty() {
        return Err(invalid("no two training videos share a class"));
    }
    let per_epoch = pairs.len() as u64;
    let total = per_epoch * config.epochs as u64;
    let (mut params, mut state) = match options.resume {
        Some((p, s)) => {
            if p.config() != &config.encoder {
                return Err(invalid("checkpoint encoder differs from the configuration"));
            }
            s.validate(p.values().len())?;
            (p, s)
        }
        None => {
            let p = init_params(config.seed, config.encoder)?;
            let s = OptimizerState::new(p.values().len());
            (p, s)
        }
    };
    let end = options.stop_after.map_or(total, |s| s.min(total));
    let mut curve = Vec::new();
    let mut order = Vec::new();
    let mut order_epoch = u64::MAX;
    while state.step < end {
        let step = state.step;
        let epoch = step / per_epoch;
        if epoch != order_epoch {
            order = epoch_order(config.seed, epoch, pairs.len());
            order_epoch = epoch;
        }
        let (i, j) = pairs[order[(step % per_epoch) as usize]];
        let lr = config.lr_at(step, total);
        let mut rng = step_rng(config.seed, step);
        let (p, s, report) = train_step(&params, &state, videos[i], videos[j], config, lr, &mut rng, exec)?;
        params = p;
        state = s;
        curve.push(CurvePoint {
            step,
            loss_same: report.loss_same,
            loss_prop: report.loss_prop,
            loss_sdtw: report.loss_sdtw,
            combined: report.combined,
            lr,
        });
    }
    Ok(TrainOutcome {
        params,
        opt_state: state,
        curve,
        total_steps: total,
    })
}

/// Embeds each video and attaches its phase labels and progress.
pub fn label_videos(params: &EncoderParams, videos: &[SyntheticVideo]) -> Result<Vec<LabeledVideo>> {
    videos
        .iter()
        .map(|v| {
            Ok(LabeledVideo {
                embeddings: encode(&v.features, params)?,
                labels: v.phase_labels.clone(),
                progress: v.progress.clone(),
            })
        })
        .collect()
}

/// Full metric suite of an encoder on a train/test split.
pub fn evaluate_encoder(
    params: &EncoderParams,
    train: &[SyntheticVideo],
    test: &[SyntheticVideo],
    fractions: &[f64],
    ks: &[usize],
) -> Result<EvalReport> {
    evaluate(&label_videos(params, train)?, &label_videos(params, test)?, fractions, ks)
}
