//! Simple records, complete records and champions in streams of vectors.
//!
//! Observation `n` is a simple record if it strictly exceeds the running
//! componentwise maximum in some coordinate, a complete record if it does so
//! in every coordinate, and the champion among `n` observations if it
//! strictly dominates all others.

mod checks;
mod io;
mod pit;
mod scan;

pub use checks::{
    conditional_gap_law_check, stochastic_monotonicity_check, GapBinReport, GapCell, GapLawReport,
    GapPairReport, MonotonicityReport, GAP_BINS, MIN_EXPECTED,
};
pub use io::{csv_rows, ndjson_rows, read_rows, scan_reader, write_record_times_csv, InputFormat};
pub use pit::{empirical_ranks, pit_transform, Margin};
pub use scan::{
    champion_index, is_complete_record, is_simple_record, scan, scan_results, RecordFlags,
    RecordScanState, RecordSummary,
};
