//! Binary checkpoints: encoder architecture, parameters and optimizer state,
//! all little-endian.
//!
//! ```text
//! magic "LRPCKPT\0" | version u32 | d_in d_h d_z u64 | mix_weight pos_scale f64
//! | n u64 | params f64 x n | step u64 | m f64 x n | v f64 x n
//! ```

use std::path::Path;

use lrprop_core::encoder::{EncoderConfig, EncoderDims, EncoderParams};
use lrprop_core::optim::OptimizerState;

use crate::error::{AppError, AppResult};

pub const MAGIC: &[u8; 8] = b"LRPCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: EncoderParams,
    pub opt_state: OptimizerState,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.params.config();
        let n = self.params.values().len();
        let mut out = Vec::with_capacity(64 + 24 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for d in [cfg.dims.d_in, cfg.dims.d_h, cfg.dims.d_z, n] {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&cfg.mix_weight.to_le_bytes());
        out.extend_from_slice(&cfg.pos_scale.to_le_bytes());
        let put = |out: &mut Vec<u8>, xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        put(&mut out, self.params.values());
        out.extend_from_slice(&self.opt_state.step.to_le_bytes());
        put(&mut out, &self.opt_state.m);
        put(&mut out, &self.opt_state.v);
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> AppResult<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(8)? != MAGIC {
            return Err(AppError::format(path, "bad magic"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(AppError::Version {
                path: path.into(),
                found: version,
                expected: VERSION,
            });
        }
        let d_in = r.usize()?;
        let d_h = r.usize()?;
        let d_z = r.usize()?;
        let n = r.usize()?;
        let config = EncoderConfig {
            dims: EncoderDims { d_in, d_h, d_z },
            mix_weight: r.f64()?,
            pos_scale: r.f64()?,
        };
        if n != config.dims.param_count() {
            return Err(AppError::format(path, "parameter count disagrees with dimensions"));
        }
        let values = r.f64s(n)?;
        let step = r.u64()?;
        let m = r.f64s(n)?;
        let v = r.f64s(n)?;
        if r.pos != bytes.len() {
            return Err(AppError::format(path, "trailing bytes"));
        }
        let params = EncoderParams::from_values(config, values).map_err(|e| AppError::format(path, e.to_string()))?;
        let opt_state = OptimizerState { m, v, step };
        opt_state.validate(n).map_err(|e| AppError::format(path, e.to_string()))?;
        Ok(Self { params, opt_state })
    }

    pub fn save(&self, path: &Path) -> AppResult<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| AppError::io(path, e))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> AppResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| AppError::format(self.path, "truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> AppResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> AppResult<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| AppError::format(self.path, "size overflow"))
    }

    fn f64(&mut self) -> AppResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> AppResult<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| AppError::format(self.path, "size overflow"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
