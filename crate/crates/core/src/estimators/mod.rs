//! Monte Carlo estimators with standard errors for the record and champion
//! limit quantities, each with at least two independent routes.
//!
//! All estimators split work into fixed chunks whose RNG seeds derive from
//! the master seed and the chunk index, and reduce in chunk order, so results
//! are bit-identical for any worker count.

mod concurrence;
mod limits;
mod record_times;
mod sim;

pub use concurrence::{
    concurrence_empirical, concurrence_via_eta, concurrence_via_generator,
    expected_complete_records_exact, record_prob_maxstable_exact, ConcurrenceEmpirical,
    NESTED_INNER_SAMPLES,
};
pub use limits::{
    champion_survival, champion_survival_empirical, champion_survival_empirical_grid,
    champion_survival_grid, expected_records_growth,
    simple_record_df_empirical, simple_record_df_empirical_grid, simple_record_limit, simple_record_limit_df,
    simple_record_limit_df_grid, ChampionSurvival, ConditionalEmpirical, GrowthRow, GrowthTable,
    SimpleLimitRoute,
};
pub use record_times::{
    chi_bar, chi_bar_exact, expected_n2, second_record_df, ChiBarRow, ChiBarSource, N2Report, TailPoint,
    SecondRecordReport, MOM_BLOCKS, SLOPE_THRESHOLD,
};

use crate::error::Result;
use crate::parallel::Parallelism;
use crate::rng::SimRng;

/// Sample count, master seed and worker pool of a Monte Carlo run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mc {
    pub samples: u64,
    pub seed: u64,
    pub par: Parallelism,
}

impl Mc {
    /// Worker count from `RECMAX_WORKERS` or the available cores.
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            par: Parallelism::from_env(),
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.par = Parallelism::new(workers);
        self
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Runs `body` once per sample with a per-chunk accumulator and merges
    /// the chunk accumulators in chunk order.
    pub(crate) fn accumulate<A, I, B, M>(&self, chunk: u64, init: I, body: B, merge: M) -> Result<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        B: Fn(&mut SimRng, &mut A) -> Result<()> + Sync,
        M: Fn(&mut A, A),
    {
        let parts: Vec<Result<A>> = self.par.map_chunks(self.samples, chunk, self.seed, |rng, _, _, len| {
            let mut acc = init();
            for _ in 0..len {
                body(rng, &mut acc)?;
            }
            Ok(acc)
        });
        let mut total = init();
        for p in parts {
            merge(&mut total, p?);
        }
        Ok(total)
    }
}
