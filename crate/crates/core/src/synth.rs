//! Synthetic alignment benchmark with known correspondence.
//!
//! All videos of a dataset observe one canonical trajectory `c(t)`, a
//! Catmull-Rom curve through `P` random waypoints, at their own monotone time
//! warp. Features are `M c(t) + U a_v + noise`, where `M` and `U` are fixed
//! random maps and `a_v` is a per-video appearance vector that is constant in
//! time. Phase labels split canonical progress into `P` equal parts.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::alignment::{distance_matrix_with, dtw_path, AlignmentPath};
use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::num;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_test: usize,
    /// Number of phases `P`; also the number of trajectory waypoints.
    pub phases: usize,
    pub d_in: usize,
    pub latent_dim: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Standard deviation of i.i.d. observation noise.
    pub noise: f64,
    /// Standard deviation of the per-video appearance vector.
    pub appearance: f64,
    pub appearance_dim: usize,
    /// Amplitude of the log-speed profile of each time warp.
    pub warp_strength: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_train: 24,
            n_test: 8,
            phases: 4,
            d_in: 12,
            latent_dim: 4,
            min_frames: 40,
            max_frames: 120,
            noise: 0.05,
            appearance: 3.0,
            appearance_dim: 3,
            warp_strength: 0.6,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phases < 2 {
            return Err(invalid("at least two phases are required"));
        }
        if self.n_train + self.n_test < 2 {
            return Err(invalid("at least two videos are required"));
        }
        if self.d_in == 0 || self.latent_dim == 0 {
            return Err(invalid("dimensions must be positive"));
        }
        if self.min_frames < 2 || self.max_frames < self.min_frames {
            return Err(invalid("frame range must satisfy 2 <= min <= max"));
        }
        if !(self.noise >= 0.0) || !(self.appearance >= 0.0) || !(self.warp_strength >= 0.0) {
            return Err(invalid("noise, appearance and warp strength must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticVideo {
    pub features: Matrix,
    pub phase_labels: Vec<usize>,
    pub progress: Vec<f64>,
    pub canonical_time: Vec<f64>,
    pub class: usize,
}

impl SyntheticVideo {
    pub fn frames(&self) -> usize {
        self.features.rows()
    }

    pub fn validate(&self, phases: usize) -> Result<()> {
        let f = self.frames();
        if self.phase_labels.len() != f || self.progress.len() != f || self.canonical_time.len() != f {
            return Err(invalid("per-frame annotations disagree with the frame count"));
        }
        if self.progress.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("progress must be nondecreasing"));
        }
        for (&p, &l) in self.progress.iter().zip(&self.phase_labels) {
            if !(0.0..=1.0).contains(&p) || l != phase_of(p, phases) {
                return Err(invalid("phase label inconsistent with progress"));
            }
        }
        Ok(())
    }
}

/// Label of a progress value: `floor(p · P)` clamped to `P - 1`.
pub fn phase_of(progress: f64, phases: usize) -> usize {
    let l = num::floor(progress * phases as f64);
    if l <= 0.0 {
        0
    } else {
        (l as usize).min(phases - 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub config: SynthConfig,
    pub train: Vec<SyntheticVideo>,
    pub test: Vec<SyntheticVideo>,
}

/// Shared generative model: waypoints and observation maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    waypoints: Matrix,
    observe: Matrix,
    appearance_map: Matrix,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

impl Scene {
    pub fn new<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let waypoints = Matrix::from_fn(cfg.phases, cfg.latent_dim, |_, _| 1.5 * normal(rng));
        let s = 1.0 / num::sqrt(cfg.latent_dim as f64);
        let observe = Matrix::from_fn(cfg.d_in, cfg.latent_dim, |_, _| s * normal(rng));
        let sa = 1.0 / num::sqrt(cfg.appearance_dim.max(1) as f64);
        let appearance_map = Matrix::from_fn(cfg.d_in, cfg.appearance_dim, |_, _| sa * normal(rng));
        Ok(Self {
            waypoints,
            observe,
            appearance_map,
        })
    }

    /// Canonical latent trajectory at `t ∈ [0, 1]`.
    pub fn trajectory(&self, t: f64) -> Vec<f64> {
        let n = self.waypoints.rows();
        let seg = t.clamp(0.0, 1.0) * (n - 1) as f64;
        let k = (num::floor(seg) as usize).min(n - 2);
        let u = seg - k as f64;
        let at = |i: isize| self.waypoints.row(i.clamp(0, n as isize - 1) as usize);
        let (p0, p1, p2, p3) = (at(k as isize - 1), at(k as isize), at(k as isize + 1), at(k as isize + 2));
        let (u2, u3) = (u * u, u * u * u);
        (0..self.waypoints.cols())
            .map(|d| {
                0.5 * (2.0 * p1[d]
                    + (-p0[d] + p2[d]) * u
                    + (2.0 * p0[d] - 5.0 * p1[d] + 4.0 * p2[d] - p3[d]) * u2
                    + (-p0[d] + 3.0 * p1[d] - 3.0 * p2[d] + p3[d]) * u3)
            })
            .collect()
    }

    /// Noiseless observation of the trajectory at `t` under appearance `a`.
    pub fn observe(&self, t: f64, appearance: &[f64]) -> Vec<f64> {
        let c = self.trajectory(t);
        (0..self.observe.rows())
            .map(|r| {
                let base: f64 = self.observe.row(r).iter().zip(&c).map(|(m, v)| m * v).sum();
                let app: f64 = self.appearance_map.row(r).iter().zip(appearance).map(|(m, v)| m * v).sum();
                base + app
            })
            .collect()
    }
}

/// Monotone warp of `frames` samples: normalized cumulative sum of positive
/// increments drawn from a smooth random log-speed profile. Starts at 0 and
/// ends at 1.
pub fn random_warp<R: Rng + ?Sized>(frames: usize, strength: f64, rng: &mut R) -> Vec<f64> {
    let amps = [strength * (2.0 * rng.random::<f64>() - 1.0), strength * (2.0 * rng.random::<f64>() - 1.0)];
    let phases = [rng.random::<f64>() * core::f64::consts::TAU, rng.random::<f64>() * core::f64::consts::TAU];
    let mut t = vec![0.0; frames];
    for k in 1..frames {
        let u = k as f64 / frames as f64;
        let log_speed = amps[0] * num::sin(core::f64::consts::TAU * u + phases[0])
            + amps[1] * num::sin(2.0 * core::f64::consts::TAU * u + phases[1]);
        t[k] = t[k - 1] + num::exp(log_speed);
    }
    let total = t[frames - 1];
    if total > 0.0 {
        for v in &mut t {
            *v /= total;
        }
    }
    t
}

/// Renders one video from a canonical time sequence.
pub fn render_video<R: Rng + ?Sized>(
    scene: &Scene,
    cfg: &SynthConfig,
    canonical_time: Vec<f64>,
    appearance: &[f64],
    rng: &mut R,
) -> SyntheticVideo {
    let frames = canonical_time.len();
    let mut features = Matrix::zeros(frames, cfg.d_in);
    for (f, &t) in canonical_time.iter().enumerate() {
        let x = scene.observe(t, appearance);
        for (dst, v) in features.row_mut(f).iter_mut().zip(x) {
            *dst = if cfg.noise > 0.0 { v + cfg.noise * normal(rng) } else { v };
        }
    }
    SyntheticVideo {
        features,
        phase_labels: canonical_time.iter().map(|&p| phase_of(p, cfg.phases)).collect(),
        progress: canonical_time.clone(),
        canonical_time,
        class: 0,
    }
}

fn generate_one<R: Rng + ?Sized>(scene: &Scene, cfg: &SynthConfig, rng: &mut R) -> SyntheticVideo {
    let frames = rng.random_range(cfg.min_frames..=cfg.max_frames);
    let warp = random_warp(frames, cfg.warp_strength, rng);
    let appearance: Vec<f64> = (0..cfg.appearance_dim).map(|_| cfg.appearance * normal(rng)).collect();
    render_video(scene, cfg, warp, &appearance, rng)
}

/// Generates `n_videos` videos sharing one scene.
pub fn generate_videos<R: Rng + ?Sized>(cfg: &SynthConfig, n_videos: usize, rng: &mut R) -> Result<Vec<SyntheticVideo>> {
    cfg.validate()?;
    if n_videos < 2 {
        return Err(invalid("at least two videos are required"));
    }
    let scene = Scene::new(cfg, rng)?;
    Ok((0..n_videos).map(|_| generate_one(&scene, cfg, rng)).collect())
}

/// Generates the train and test splits from one scene. The splits are
/// disjoint: every video is drawn independently and assigned to one split.
pub fn generate_dataset<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<SyntheticDataset> {
    let mut videos = generate_videos(cfg, cfg.n_train + cfg.n_test, rng)?;
    let test = videos.split_off(cfg.n_train);
    Ok(SyntheticDataset {
        config: cfg.clone(),
        train: videos,
        test,
    })
}

/// Reference correspondence: exact DTW on `|t1_i - t2_j|` over canonical times.
pub fn ground_truth_alignment(v1: &SyntheticVideo, v2: &SyntheticVideo) -> Result<AlignmentPath> {
    let a = Matrix::from_vec(v1.canonical_time.len(), 1, v1.canonical_time.clone())?;
    let b = Matrix::from_vec(v2.canonical_time.len(), 1, v2.canonical_time.clone())?;
    let d = distance_matrix_with(&a, &b, |x, y| (x[0] - y[0]).abs())?;
    Ok(dtw_path(&d))
}
