//! Dataset files: JSON lines, a header line followed by one record per video.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use lrprop_core::synth::{SynthConfig, SyntheticDataset, SyntheticVideo};
use lrprop_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

pub const DATASET_FORMAT: &str = "lrprop-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SynthRecord {
    n_train: usize,
    n_test: usize,
    phases: usize,
    d_in: usize,
    latent_dim: usize,
    min_frames: usize,
    max_frames: usize,
    noise: f64,
    appearance: f64,
    appearance_dim: usize,
    warp_strength: f64,
}

impl From<&SynthConfig> for SynthRecord {
    fn from(c: &SynthConfig) -> Self {
        Self {
            n_train: c.n_train,
            n_test: c.n_test,
            phases: c.phases,
            d_in: c.d_in,
            latent_dim: c.latent_dim,
            min_frames: c.min_frames,
            max_frames: c.max_frames,
            noise: c.noise,
            appearance: c.appearance,
            appearance_dim: c.appearance_dim,
            warp_strength: c.warp_strength,
        }
    }
}

impl From<SynthRecord> for SynthConfig {
    fn from(r: SynthRecord) -> Self {
        Self {
            n_train: r.n_train,
            n_test: r.n_test,
            phases: r.phases,
            d_in: r.d_in,
            latent_dim: r.latent_dim,
            min_frames: r.min_frames,
            max_frames: r.max_frames,
            noise: r.noise,
            appearance: r.appearance,
            appearance_dim: r.appearance_dim,
            warp_strength: r.warp_strength,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    seed: u64,
    config: SynthRecord,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Serialize, Deserialize)]
struct VideoRecord {
    split: Split,
    class: usize,
    frames: usize,
    dim: usize,
    features: Vec<f64>,
    phase_labels: Vec<usize>,
    progress: Vec<f64>,
    canonical_time: Vec<f64>,
}

impl VideoRecord {
    fn new(split: Split, v: &SyntheticVideo) -> Self {
        Self {
            split,
            class: v.class,
            frames: v.features.rows(),
            dim: v.features.cols(),
            features: v.features.as_slice().to_vec(),
            phase_labels: v.phase_labels.clone(),
            progress: v.progress.clone(),
            canonical_time: v.canonical_time.clone(),
        }
    }
}

/// A dataset together with the seed that generated it.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFile {
    pub seed: u64,
    pub data: SyntheticDataset,
}

pub fn write_dataset(path: &Path, file: &DatasetFile) -> AppResult<()> {
    let io = |e| AppError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        seed: file.seed,
        config: (&file.data.config).into(),
    };
    write_line(&mut w, &header).map_err(io)?;
    for v in &file.data.train {
        write_line(&mut w, &VideoRecord::new(Split::Train, v)).map_err(io)?;
    }
    for v in &file.data.test {
        write_line(&mut w, &VideoRecord::new(Split::Test, v)).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn write_line<T: Serialize>(w: &mut impl Write, value: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")
}

pub fn read_dataset(path: &Path) -> AppResult<DatasetFile> {
    let f = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let first = lines
        .next()
        .ok_or_else(|| AppError::format(path, "empty file"))?
        .map_err(|e| AppError::io(path, e))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| AppError::format(path, format!("header: {e}")))?;
    if header.format != DATASET_FORMAT {
        return Err(AppError::format(path, format!("not a dataset file ({})", header.format)));
    }
    if header.version != DATASET_VERSION {
        return Err(AppError::Version {
            path: path.into(),
            found: header.version,
            expected: DATASET_VERSION,
        });
    }
    let config: SynthConfig = header.config.into();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |reason: String| AppError::format(path, format!("record {}: {reason}", n + 1));
        let r: VideoRecord = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        let features = Matrix::from_vec(r.frames, r.dim, r.features).map_err(|e| at(e.to_string()))?;
        let video = SyntheticVideo {
            features,
            phase_labels: r.phase_labels,
            progress: r.progress,
            canonical_time: r.canonical_time,
            class: r.class,
        };
        video.validate(config.phases).map_err(|e| at(e.to_string()))?;
        match r.split {
            Split::Train => train.push(video),
            Split::Test => test.push(video),
        }
    }
    Ok(DatasetFile {
        seed: header.seed,
        data: SyntheticDataset { config, train, test },
    })
}
