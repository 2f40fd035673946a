use fbm_stm_core::lab::PathExecutor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "FBM_STM_THREADS";

/// Work-stealing pool for path blocks. Results come back in block order, so
/// reductions do not depend on the thread count.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads == 0` lets rayon pick.
    pub fn new(threads: usize) -> CliResult<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::config("threads", e.to_string()))?;
        Ok(Self { pool })
    }

    /// Explicit request first, then `FBM_STM_THREADS`, then automatic.
    pub fn from_env(explicit: Option<usize>) -> CliResult<Self> {
        let threads = match explicit {
            Some(n) => n,
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => v.trim().parse().map_err(|_| {
                    CliError::config(THREADS_ENV, format!("expected a non-negative integer, got {v:?}"))
                })?,
                Err(_) => 0,
            },
        };
        Self::new(threads)
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl PathExecutor for RayonExecutor {
    fn map_blocks<T, F>(&self, n_blocks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n_blocks).into_par_iter().map(f).collect())
    }
}
