use lrprop_core::objective::PairLoss;
use lrprop_core::trainer::PairExecutor;
use lrprop_core::Result;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{AppError, AppResult};

/// Pair computations on a rayon pool. Results are collected in index order,
/// so the reduction that follows does not depend on the thread count.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads == 0` uses every available core.
    pub fn new(threads: usize) -> AppResult<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

impl PairExecutor for RayonExecutor {
    fn map_pairs(&self, n: usize, f: &(dyn Fn(usize) -> Result<PairLoss> + Sync)) -> Vec<Result<PairLoss>> {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
