//! Samplers for standard max-stable vectors `eta` and for copulas.

mod copula;
mod eta;
mod stable;

use std::io::Write;

pub use copula::{copula_cdf, sample_copula, CopulaFamily, CopulaModel, CopulaSampler};
pub use eta::{
    sample_eta, sample_eta_logistic, sample_eta_thinning, EtaSampler, MaxStableSample, THINNING_CAP,
    WEIBULL_TRUNCATION_TAIL,
};
pub use stable::sample_positive_stable;

use crate::error::Result;

/// Writes rows as CSV with header `x1,...,xd`.
pub fn write_samples_csv<W: Write>(writer: W, dim: usize, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((1..=dim).map(|i| format!("x{i}")))?;
    for row in rows {
        crate::error::check_dim(dim, row.len())?;
        w.write_record(row.iter().map(|v| format!("{v:.11e}")))?;
    }
    w.flush()?;
    Ok(())
}
