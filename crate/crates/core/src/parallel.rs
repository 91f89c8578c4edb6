//! Chunked, seed-derived parallel execution.
//!
//! Work is cut into fixed-size chunks; chunk `i` draws from an RNG seeded
//! with [`chunk_seed`](crate::rng::chunk_seed)`(seed, i)` and results are
//! returned in chunk order. Neither depends on the worker count, so reductions
//! over the returned vector are bit-identical for any number of workers.

use rayon::prelude::*;

use crate::rng::{chunk_seed, rng_from_seed, SimRng};

/// Environment variable consulted for the default worker count.
pub const WORKERS_ENV: &str = "RECMAX_WORKERS";

/// Samples per chunk for plain Monte Carlo loops.
pub const DEFAULT_CHUNK: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parallelism {
    workers: usize,
}

impl Parallelism {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }

    pub fn serial() -> Self {
        Self::new(1)
    }

    /// Reads `RECMAX_WORKERS`, falling back to the number of available cores.
    pub fn from_env() -> Self {
        let workers = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
        Self::new(workers)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `f(rng, chunk_index, start, len)` over `total` items split into
    /// chunks of `chunk` items. Results come back in chunk order.
    pub fn map_chunks<T, F>(&self, total: u64, chunk: u64, seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut SimRng, u64, u64, u64) -> T + Sync,
    {
        let chunk = chunk.max(1);
        let n_chunks = total.div_ceil(chunk);
        let run = |i: u64| {
            let start = i * chunk;
            let len = chunk.min(total - start);
            let mut rng = rng_from_seed(chunk_seed(seed, i));
            f(&mut rng, i, start, len)
        };
        if self.workers == 1 || n_chunks <= 1 {
            return (0..n_chunks).map(run).collect();
        }
        match rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
        {
            Ok(pool) => pool.install(|| (0..n_chunks).into_par_iter().map(run).collect()),
            Err(_) => (0..n_chunks).map(run).collect(),
        }
    }
}

impl Default for Parallelism {
    fn default() -> Self {
        Self::from_env()
    }
}
