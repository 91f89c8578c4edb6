//! Simulation and estimation toolkit for records and champions among i.i.d.
//! multivariate observations in the max-domain of attraction of a
//! max-stable law.

pub mod dnorm;
pub mod estimators;
pub mod error;
pub mod numeric;
pub mod parallel;
pub mod records;
pub mod rng;
pub mod samplers;
pub mod stats;

pub use dnorm::{CustomGenerator, DependenceModel, Family, GeneratorSample};
pub use error::{Error, Result};
pub use parallel::Parallelism;
pub use records::{RecordScanState, RecordSummary};
pub use samplers::{CopulaModel, EtaSampler, MaxStableSample};
pub use stats::Estimate;
