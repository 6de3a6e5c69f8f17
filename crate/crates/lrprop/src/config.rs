//! Line-oriented `key = value` experiment configuration.
//!
//! Blank lines and text after `#` are ignored. Later assignments win, and
//! command-line flags are applied after the file. Recognized keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `dataset`, `checkpoint`, `out_dir` | paths |
//! | `seed` | dataset generation and training seed |
//! | `threads` | worker threads, 0 = all cores |
//! | `class` | train only on videos of this class |
//! | `learning_rate`, `weight_decay`, `epochs`, `cosine_decay`, `augment_strength` | optimizer |
//! | `tau`, `sigma_sq`, `lambda1`, `lambda2`, `gamma`, `clip_len`, `normalize_sdtw` | loss |
//! | `d_h`, `d_z`, `mix_weight`, `pos_scale` | encoder (input width comes from the data) |
//! | `n_train`, `n_test`, `phases`, `d_in`, `latent_dim`, `min_frames`, `max_frames`, `noise`, `appearance`, `appearance_dim`, `warp_strength` | synthetic data |
//! | `fractions`, `ks` | comma-separated label fractions and retrieval depths |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use lrprop_core::synth::SynthConfig;
use lrprop_core::trainer::TrainConfig;

use crate::error::{AppError, AppResult};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub class: Option<usize>,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub fractions: Vec<f64>,
    pub ks: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            checkpoint: None,
            out_dir: PathBuf::from("out"),
            seed: 7,
            threads: 0,
            class: None,
            train: TrainConfig::default(),
            synth: SynthConfig::default(),
            fractions: vec![0.1, 0.5, 1.0],
            ks: vec![5, 10, 15],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> AppResult<T> {
    value
        .parse()
        .map_err(|_| AppError::Config(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> AppResult<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(AppError::Config(format!("`{key}` expects true or false, got `{value}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> AppResult<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> AppResult<()> {
        let t = &mut self.train;
        let h = &mut t.hyper;
        let e = &mut t.encoder;
        let s = &mut self.synth;
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "class" => self.class = Some(parse(key, value)?),
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "weight_decay" => t.weight_decay = parse(key, value)?,
            "epochs" => t.epochs = parse(key, value)?,
            "cosine_decay" => t.cosine_decay = parse_bool(key, value)?,
            "augment_strength" => t.augment_strength = parse(key, value)?,
            "tau" => h.tau = parse(key, value)?,
            "sigma_sq" => h.sigma_sq = parse(key, value)?,
            "lambda1" => h.lambda1 = parse(key, value)?,
            "lambda2" => h.lambda2 = parse(key, value)?,
            "gamma" => h.gamma = parse(key, value)?,
            "clip_len" => h.clip_len = parse(key, value)?,
            "normalize_sdtw" => h.normalize_sdtw = parse_bool(key, value)?,
            "d_h" => e.dims.d_h = parse(key, value)?,
            "d_z" => e.dims.d_z = parse(key, value)?,
            "mix_weight" => e.mix_weight = parse(key, value)?,
            "pos_scale" => e.pos_scale = parse(key, value)?,
            "n_train" => s.n_train = parse(key, value)?,
            "n_test" => s.n_test = parse(key, value)?,
            "phases" => s.phases = parse(key, value)?,
            "d_in" => s.d_in = parse(key, value)?,
            "latent_dim" => s.latent_dim = parse(key, value)?,
            "min_frames" => s.min_frames = parse(key, value)?,
            "max_frames" => s.max_frames = parse(key, value)?,
            "noise" => s.noise = parse(key, value)?,
            "appearance" => s.appearance = parse(key, value)?,
            "appearance_dim" => s.appearance_dim = parse(key, value)?,
            "warp_strength" => s.warp_strength = parse(key, value)?,
            "fractions" => self.fractions = parse_list(key, value)?,
            "ks" => self.ks = parse_list(key, value)?,
            _ => return Err(AppError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` assignments, one per line.
    pub fn apply_text(&mut self, text: &str) -> AppResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AppError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| AppError::Config(format!("line {}: {}", n + 1, strip(e))))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Checks every value against its type's invariants and propagates the
    /// shared seed into the training configuration.
    pub fn finalize(&mut self) -> AppResult<()> {
        self.train.seed = self.seed;
        self.train.encoder.dims.d_in = self.synth.d_in;
        let wrap = |e: lrprop_core::Error| AppError::Config(e.to_string());
        self.synth.validate().map_err(wrap)?;
        self.train.validate().map_err(wrap)?;
        if self.fractions.is_empty() || self.fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(AppError::Config("fractions must be a nonempty list in (0, 1]".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(AppError::Config("ks must be a nonempty list of positive integers".into()));
        }
        if self.train.epochs == 0 {
            return Err(AppError::Config("epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.dataset.clone().unwrap_or_else(|| self.out_dir.join("dataset.jsonl"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out_dir.join("checkpoint.bin"))
    }
}

fn strip(e: AppError) -> String {
    match e {
        AppError::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# comment\nseed = 3\nlambda2=0.5 # inline\n\nfractions = 0.25, 1.0\nnormalize_sdtw = false\n")
            .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.train.hyper.lambda2, 0.5);
        assert_eq!(c.fractions, vec![0.25, 1.0]);
        assert!(!c.train.hyper.normalize_sdtw);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut c = ExperimentConfig::default();
        assert!(matches!(c.apply_text("bogus = 1"), Err(AppError::Config(_))));
        assert!(matches!(c.apply_text("seed"), Err(AppError::Config(_))));
        assert!(matches!(c.apply_text("seed = x"), Err(AppError::Config(_))));
    }

    #[test]
    fn finalize_validates() {
        let mut c = ExperimentConfig::default();
        c.synth.phases = 1;
        assert!(c.finalize().is_err());
        let mut c = ExperimentConfig::default();
        c.train.hyper.tau = 0.0;
        assert!(c.finalize().is_err());
        let mut c = ExperimentConfig { seed: 42, ..ExperimentConfig::default() };
        c.finalize().unwrap();
        assert_eq!(c.train.seed, 42);
    }
}
