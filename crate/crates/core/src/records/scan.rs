use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Running state of a record scan over a stream of `d`-vectors.
///
/// Times are 1-based. Comparisons are strict, so a coordinate that ties the
/// running maximum does not count as an exceedance.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordScanState {
    n: u64,
    running_max: Vec<f64>,
    simple_record_times: Vec<u64>,
    complete_record_times: Vec<u64>,
    // last complete record and the componentwise max of everything else
    candidate: Option<u64>,
    candidate_value: Vec<f64>,
    max_others: Vec<f64>,
}

/// Record status of one observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecordFlags {
    pub simple: bool,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub n: u64,
    /// `m(n)`: number of simple records.
    pub simple_records: u64,
    /// `M(n)`: number of complete records.
    pub complete_records: u64,
    pub champion_index: Option<u64>,
    pub simple_record_times: Vec<u64>,
    pub complete_record_times: Vec<u64>,
    /// `N(k+1) - N(k)`.
    pub gaps: Vec<u64>,
}

impl RecordScanState {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            running_max: vec![f64::NEG_INFINITY; dim],
            simple_record_times: Vec::new(),
            complete_record_times: Vec::new(),
            candidate: None,
            candidate_value: vec![f64::NEG_INFINITY; dim],
            max_others: vec![f64::NEG_INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.running_max.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn running_max(&self) -> &[f64] {
        &self.running_max
    }

    pub fn simple_record_times(&self) -> &[u64] {
        &self.simple_record_times
    }

    pub fn complete_record_times(&self) -> &[u64] {
        &self.complete_record_times
    }

    /// Processes the next observation.
    pub fn push(&mut self, x: &[f64]) -> Result<RecordFlags> {
        if x.len() != self.dim() {
            return Err(Error::DimensionDrift {
                index: self.n + 1,
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber { index: self.n + 1 });
        }
        let first = self.n == 0;
        let mut any = first;
        let mut all = true;
        for (&xi, &mi) in x.iter().zip(&self.running_max) {
            if xi > mi {
                any = true;
            } else {
                all = false;
            }
        }
        let complete = first || all;
        self.n += 1;
        if complete {
            // the old candidate is now one of the "others"
            self.max_others.copy_from_slice(&self.running_max);
            self.candidate = Some(self.n);
            self.candidate_value.copy_from_slice(x);
        } else {
            for (m, &xi) in self.max_others.iter_mut().zip(x) {
                if xi > *m {
                    *m = xi;
                }
            }
        }
        for (m, &xi) in self.running_max.iter_mut().zip(x) {
            if xi > *m {
                *m = xi;
            }
        }
        if any {
            self.simple_record_times.push(self.n);
        }
        if complete {
            self.complete_record_times.push(self.n);
        }
        Ok(RecordFlags {
            simple: any,
            complete,
        })
    }

    /// Index of the observation that strictly dominates all others so far.
    pub fn champion(&self) -> Option<u64> {
        let k = self.candidate?;
        self.candidate_value
            .iter()
            .zip(&self.max_others)
            .all(|(c, m)| c > m)
            .then_some(k)
    }

    pub fn summary(&self) -> RecordSummary {
        RecordSummary {
            n: self.n,
            simple_records: self.simple_record_times.len() as u64,
            complete_records: self.complete_record_times.len() as u64,
            champion_index: self.champion(),
            simple_record_times: self.simple_record_times.clone(),
            complete_record_times: self.complete_record_times.clone(),
            gaps: self.simple_record_times.windows(2).map(|w| w[1] - w[0]).collect(),
        }
    }
}

/// Whether `x` would be a simple record after the observations in `state`.
pub fn is_simple_record(x: &[f64], state: &RecordScanState) -> Result<bool> {
    check_dim(state.dim(), x.len())?;
    Ok(state.n == 0 || x.iter().zip(&state.running_max).any(|(a, m)| a > m))
}

/// Whether `x` would be a complete record after the observations in `state`.
pub fn is_complete_record(x: &[f64], state: &RecordScanState) -> Result<bool> {
    check_dim(state.dim(), x.len())?;
    Ok(state.n == 0 || x.iter().zip(&state.running_max).all(|(a, m)| a > m))
}

/// Single pass over a stream of observations.
pub fn scan<I, V>(stream: I) -> Result<RecordSummary>
where
    I: IntoIterator<Item = V>,
    V: AsRef<[f64]>,
{
    let mut iter = stream.into_iter();
    let first = iter.next().ok_or(Error::EmptyStream)?;
    let mut state = RecordScanState::new(first.as_ref().len());
    state.push(first.as_ref())?;
    for x in iter {
        state.push(x.as_ref())?;
    }
    Ok(state.summary())
}

/// Like [`scan`] over fallible rows, as produced by file readers.
pub fn scan_results<I>(stream: I) -> Result<RecordSummary>
where
    I: IntoIterator<Item = Result<Vec<f64>>>,
{
    let mut state: Option<RecordScanState> = None;
    for row in stream {
        let row = row?;
        state
            .get_or_insert_with(|| RecordScanState::new(row.len()))
            .push(&row)?;
    }
    state.map(|s| s.summary()).ok_or(Error::EmptyStream)
}

/// Brute-force champion: the unique 1-based `k` with `X_k > max_{j != k} X_j`.
///
/// An observation that weakly dominates all others with an exact tie in some
/// coordinate makes the question undecidable for continuous models and is
/// reported as [`Error::ChampionTie`].
pub fn champion_index<V: AsRef<[f64]>>(batch: &[V]) -> Result<Option<u64>> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::EmptyStream);
    }
    let d = batch[0].as_ref().len();
    for (i, row) in batch.iter().enumerate() {
        if row.as_ref().len() != d {
            return Err(Error::DimensionDrift {
                index: i as u64 + 1,
                expected: d,
                got: row.as_ref().len(),
            });
        }
    }
    let fold = |acc: &mut Vec<f64>, x: &[f64]| {
        for (a, &v) in acc.iter_mut().zip(x) {
            *a = a.max(v);
        }
    };
    // suffix[k] = max of rows k.., prefix carried along
    let mut suffix = vec![vec![f64::NEG_INFINITY; d]; n + 1];
    for k in (0..n).rev() {
        let mut s = suffix[k + 1].clone();
        fold(&mut s, batch[k].as_ref());
        suffix[k] = s;
    }
    let mut prefix = vec![f64::NEG_INFINITY; d];
    let mut strict: Option<u64> = None;
    let mut weak: Option<u64> = None;
    for k in 0..n {
        let x = batch[k].as_ref();
        let others: Vec<f64> = prefix.iter().zip(&suffix[k + 1]).map(|(a, b)| a.max(*b)).collect();
        if x.iter().zip(&others).all(|(a, b)| a > b) {
            if let Some(first) = strict {
                return Err(Error::ChampionTie {
                    first,
                    second: k as u64 + 1,
                });
            }
            strict = Some(k as u64 + 1);
        } else if n > 1 && x.iter().zip(&others).all(|(a, b)| a >= b) {
            weak.get_or_insert(k as u64 + 1);
        }
        fold(&mut prefix, x);
    }
    if let (None, Some(first)) = (strict, weak) {
        // find the observation it ties with
        let x = batch[first as usize - 1].as_ref();
        let second = (0..n)
            .find(|&j| {
                j + 1 != first as usize
                    && batch[j].as_ref().iter().zip(x).any(|(a, b)| a == b)
            })
            .map(|j| j as u64 + 1)
            .unwrap_or(first);
        return Err(Error::ChampionTie { first, second });
    }
    Ok(strict)
}
