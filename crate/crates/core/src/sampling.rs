//! Temporal random cropping and feature-space augmentation.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::num;

/// `T` frames gathered from a video, with their strictly increasing source indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledClip {
    pub features: Matrix,
    pub source_indices: Vec<usize>,
}

impl SampledClip {
    pub fn len(&self) -> usize {
        self.source_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_indices.is_empty()
    }

    /// Source indices as signed integers, the form the priors consume.
    pub fn indices_i64(&self) -> Vec<i64> {
        self.source_indices.iter().map(|&i| i as i64).collect()
    }

    /// Checks length, ordering and bounds against a source video of `frames` frames.
    pub fn validate(&self, frames: usize) -> Result<()> {
        if self.features.rows() != self.source_indices.len() {
            return Err(invalid("clip features and indices disagree in length"));
        }
        if self.source_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("clip indices must be strictly increasing"));
        }
        if self.source_indices.last().is_some_and(|&i| i >= frames) {
            return Err(invalid("clip index beyond the source video"));
        }
        Ok(())
    }
}

/// Crops a window of random length `L ∈ [T, F]` at a random start and draws
/// `T` sorted distinct frames from it.
pub fn sample_clip<R: Rng + ?Sized>(video: &Matrix, clip_len: usize, rng: &mut R) -> Result<SampledClip> {
    let frames = video.rows();
    if clip_len == 0 {
        return Err(invalid("clip length must be positive"));
    }
    if frames < clip_len {
        return Err(invalid("video shorter than the clip length"));
    }
    let window = rng.random_range(clip_len..=frames);
    let start = rng.random_range(0..=frames - window);
    let mut picked: Vec<usize> = index::sample(rng, window, clip_len).into_iter().map(|i| i + start).collect();
    picked.sort_unstable();
    Ok(SampledClip {
        features: video.select_rows(&picked),
        source_indices: picked,
    })
}

/// Temporally consistent augmentation: one per-dimension scale `exp(s·ε)` and
/// offset `s·ε'` for the whole clip, plus i.i.d. Gaussian noise with standard
/// deviation `s`. Strength zero is the identity.
pub fn augment<R: Rng + ?Sized>(clip: &SampledClip, strength: f64, rng: &mut R) -> Result<SampledClip> {
    if !(strength >= 0.0) || !strength.is_finite() {
        return Err(invalid("augmentation strength must be finite and nonnegative"));
    }
    if strength == 0.0 {
        return Ok(clip.clone());
    }
    let dim = clip.features.cols();
    let normal = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };
    let scales: Vec<f64> = (0..dim).map(|_| num::exp(strength * normal(rng))).collect();
    let offsets: Vec<f64> = (0..dim).map(|_| strength * normal(rng)).collect();
    let mut features = clip.features.clone();
    for t in 0..features.rows() {
        for (k, v) in features.row_mut(t).iter_mut().enumerate() {
            *v = *v * scales[k] + offsets[k] + strength * normal(rng);
        }
    }
    Ok(SampledClip {
        features,
        source_indices: clip.source_indices.clone(),
    })
}

/// Indices into [`Batch::clips`]; clip `a` indexes columns and clip `b` rows
/// of the pair objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClipPair {
    pub a: usize,
    pub b: usize,
    pub same_video: bool,
}

/// Two samplings of each of two videos, in the order `[A1, A2, B1, B2]`, and
/// the six pairs scored on them.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub clips: Vec<SampledClip>,
    pub pairs: Vec<ClipPair>,
}

/// The six clip pairs: two same-video pairs then the four cross pairs.
pub const BATCH_PAIRS: [ClipPair; 6] = [
    ClipPair { a: 0, b: 1, same_video: true },
    ClipPair { a: 2, b: 3, same_video: true },
    ClipPair { a: 0, b: 2, same_video: false },
    ClipPair { a: 0, b: 3, same_video: false },
    ClipPair { a: 1, b: 2, same_video: false },
    ClipPair { a: 1, b: 3, same_video: false },
];

pub fn build_batch<R: Rng + ?Sized>(
    video_a: &Matrix,
    video_b: &Matrix,
    clip_len: usize,
    strength: f64,
    rng: &mut R,
) -> Result<Batch> {
    let mut clips = Vec::with_capacity(4);
    for video in [video_a, video_a, video_b, video_b] {
        let clip = sample_clip(video, clip_len, rng)?;
        clips.push(augment(&clip, strength, rng)?);
    }
    Ok(Batch {
        clips,
        pairs: BATCH_PAIRS.to_vec(),
    })
}
