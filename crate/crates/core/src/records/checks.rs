//! Simulation checks of the record-time laws: conditionally geometric gaps
//! and stochastic monotonicity of successive gaps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::Parallelism;
use crate::samplers::{CopulaModel, CopulaSampler};
use crate::stats::RunningStats;

/// Lower edges of the gap categories; the last category is `[cap, inf)`.
const GAP_EDGES: [u64; 24] = [
    1, 2, 3, 4, 5, 6, 8, 11, 16, 23, 34, 51, 76, 114, 171, 257, 385, 578, 867, 1301, 1951, 2927,
    4391, 6587,
];

/// Minimum expected count per merged category.
pub const MIN_EXPECTED: f64 = 20.0;

/// Number of equal-count bins of `C(u)`.
pub const GAP_BINS: usize = 20;

const REPS_PER_CHUNK: u64 = 1 << 10;

/// Walks one record sequence, reporting for each of the first `n_gaps`
/// simple records the running maximum (log scale) and the following gap.
/// A gap of `cap` or more is reported as censored and ends the walk.
fn walk_gaps<R: Rng + ?Sized>(
    sampler: &CopulaSampler,
    n_gaps: usize,
    cap: u64,
    rng: &mut R,
    mut on_gap: impl FnMut(usize, &[f64], u64, bool) -> Result<()>,
) -> Result<()> {
    let d = sampler.dim();
    let mut running = vec![0.0; d];
    let mut x = vec![0.0; d];
    sampler.sample_log_into(rng, &mut running)?;
    for k in 0..n_gaps {
        let mut gap = 0u64;
        let found = loop {
            if gap == cap {
                break false;
            }
            gap += 1;
            sampler.sample_log_into(rng, &mut x)?;
            if x.iter().zip(&running).any(|(a, m)| a > m) {
                break true;
            }
        };
        on_gap(k, &running, gap, !found)?;
        if !found {
            return Ok(());
        }
        for (m, &v) in running.iter_mut().zip(&x) {
            if v > *m {
                *m = v;
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
struct GapObs {
    c: f64,
    ln_q: f64,
    gap: u64,
}

/// One merged gap category `[lo, hi)` (`hi = None` is unbounded).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCell {
    pub lo: u64,
    pub hi: Option<u64>,
    pub observed: u64,
    pub expected: f64,
    /// `(observed - expected) / sd`, with the exact Poisson-binomial variance.
    pub z: f64,
}

/// Chi-square comparison of observed gaps with their geometric laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBinReport {
    pub c_lo: f64,
    pub c_hi: f64,
    pub n: u64,
    pub cells: Vec<GapCell>,
    pub chi_square: f64,
    pub df: usize,
    /// `(chi_square - df) / sqrt(2 df)`.
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapLawReport {
    pub copula: String,
    pub reps: u64,
    pub n_gaps: u64,
    pub censored: u64,
    pub cap: u64,
    pub seed: u64,
    pub pooled: GapBinReport,
    pub bins: Vec<GapBinReport>,
    pub passed: bool,
}

fn category_edges(cap: u64) -> Vec<u64> {
    let mut e: Vec<u64> = GAP_EDGES.iter().copied().filter(|&a| a < cap).collect();
    e.push(cap);
    e
}

fn category_of(edges: &[u64], gap: u64) -> usize {
    edges.partition_point(|&a| a <= gap) - 1
}

fn bin_report(obs: &[GapObs], edges: &[u64]) -> GapBinReport {
    let k = edges.len();
    let mut observed = vec![0u64; k];
    let mut expected = vec![0.0; k];
    let mut variance = vec![0.0; k];
    for o in obs {
        observed[category_of(edges, o.gap)] += 1;
        // P(G >= a) = q^(a-1)
        let tail = |a: u64| ((a - 1) as f64 * o.ln_q).exp();
        for j in 0..k {
            let p = if j + 1 < k { tail(edges[j]) - tail(edges[j + 1]) } else { tail(edges[j]) };
            expected[j] += p;
            variance[j] += p * (1.0 - p);
        }
    }
    // merge adjacent categories until each expects at least MIN_EXPECTED
    let mut cells: Vec<GapCell> = Vec::new();
    let mut var_acc: Vec<f64> = Vec::new();
    let mut open: Option<(usize, u64, f64, f64)> = None;
    for j in 0..k {
        let (lo, o, e, v) = match open.take() {
            Some((lo, o, e, v)) => (lo, o + observed[j], e + expected[j], v + variance[j]),
            None => (j, observed[j], expected[j], variance[j]),
        };
        if e >= MIN_EXPECTED {
            cells.push(GapCell {
                lo: edges[lo],
                hi: edges.get(j + 1).copied(),
                observed: o,
                expected: e,
                z: 0.0,
            });
            var_acc.push(v);
        } else {
            open = Some((lo, o, e, v));
        }
    }
    if let Some((_, o, e, v)) = open {
        if let Some(last) = cells.last_mut() {
            last.hi = None;
            last.observed += o;
            last.expected += e;
            *var_acc.last_mut().expect("parallel vectors") += v;
        } else {
            cells.push(GapCell {
                lo: 1,
                hi: None,
                observed: o,
                expected: e,
                z: 0.0,
            });
            var_acc.push(v);
        }
    }
    let mut chi = 0.0;
    for (cell, v) in cells.iter_mut().zip(&var_acc) {
        let diff = cell.observed as f64 - cell.expected;
        cell.z = if *v > 0.0 { diff / v.sqrt() } else { 0.0 };
        if cell.expected > 0.0 {
            chi += diff * diff / cell.expected;
        }
    }
    let df = cells.len().saturating_sub(1);
    let z = if df > 0 { (chi - df as f64) / (2.0 * df as f64).sqrt() } else { 0.0 };
    let (c_lo, c_hi) = obs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), o| (a.min(o.c), b.max(o.c)));
    GapBinReport {
        c_lo,
        c_hi,
        n: obs.len() as u64,
        cells,
        chi_square: chi,
        df,
        z,
    }
}

fn require_cdf(copula: &CopulaModel) -> Result<()> {
    if copula.has_closed_form_cdf() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{copula} has no closed-form df")))
    }
}

/// Simulates `reps` record sequences of `n_records` gaps each and tests every
/// gap `N(k+1) - N(k)` against `Geom(1 - C(u))`, `u` the running maximum at
/// `N(k)`. Gaps are censored at `cap`, which ends that sequence.
///
/// Observations are split into [`GAP_BINS`] equal-count bins of `C(u)`; a
/// bin passes when its chi-square statistic stays within 4 standard
/// deviations of its degrees of freedom.
pub fn conditional_gap_law_check(
    copula: &CopulaModel,
    n_records: usize,
    reps: u64,
    cap: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<GapLawReport> {
    require_cdf(copula)?;
    if cap < 2 {
        return Err(Error::InvalidParameter {
            name: "cap",
            value: cap as f64,
            reason: "gap cap must be at least 2",
        });
    }
    let sampler = copula.sampler()?;
    let chunks = par.map_chunks(reps, REPS_PER_CHUNK, seed, |rng, _, _, len| -> Result<Vec<GapObs>> {
        let mut out = Vec::with_capacity(len as usize * n_records);
        for _ in 0..len {
            walk_gaps(&sampler, n_records, cap, rng, |_, running, gap, _| {
                let (c, s) = copula.cdf_log(running)?;
                let ln_q = if c > 0.5 { (-s).ln_1p() } else { c.ln() };
                out.push(GapObs { c, ln_q, gap });
                Ok(())
            })?;
        }
        Ok(out)
    });
    let mut obs = Vec::new();
    for c in chunks {
        obs.extend(c?);
    }
    let edges = category_edges(cap);
    let censored = obs.iter().filter(|o| o.gap >= cap).count() as u64;
    let pooled = bin_report(&obs, &edges);
    let mut sorted = obs.clone();
    sorted.sort_by(|a, b| a.c.total_cmp(&b.c));
    let bins: Vec<GapBinReport> = if sorted.is_empty() {
        Vec::new()
    } else {
        let per = sorted.len().div_ceil(GAP_BINS);
        sorted.chunks(per).map(|b| bin_report(b, &edges)).collect()
    };
    let passed = !obs.is_empty() && pooled.z <= 4.0 && bins.iter().all(|b| b.z <= 4.0);
    Ok(GapLawReport {
        copula: copula.to_string(),
        reps,
        n_gaps: obs.len() as u64,
        censored,
        cap,
        seed,
        pooled,
        bins,
        passed,
    })
}

/// Comparison of the gap dfs `P(G_k <= t)` and `P(G_{k+1} <= t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapPairReport {
    /// 1-based index `k` of the earlier gap.
    pub k: usize,
    pub pairs: u64,
    /// `(t, P(G_k <= t) - P(G_{k+1} <= t), standard error)` for t = 1..=max_t.
    pub differences: Vec<(u64, f64, f64)>,
    /// Smallest `difference / se` over t.
    pub min_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub copula: String,
    pub reps: u64,
    pub max_t: u64,
    pub cap: u64,
    /// Sequences that hit the gap cap before producing all gaps.
    pub truncated: u64,
    pub seed: u64,
    pub pairs: Vec<GapPairReport>,
    pub passed: bool,
}

/// Checks `P(G_k <= t) >= P(G_{k+1} <= t)` for gaps `G_k = N(k+1) - N(k)`,
/// `k < max_n`, `t <= max_t`, with paired differences over replications and
/// a 4-standard-error tolerance. Sequences whose gap hits `cap` lose their
/// later gaps; the count is reported.
pub fn stochastic_monotonicity_check(
    copula: &CopulaModel,
    max_n: usize,
    reps: u64,
    max_t: u64,
    cap: u64,
    seed: u64,
    par: &Parallelism,
) -> Result<MonotonicityReport> {
    if max_n < 2 {
        return Err(Error::InvalidParameter {
            name: "max_n",
            value: max_n as f64,
            reason: "need at least two gaps to compare",
        });
    }
    if cap <= max_t {
        return Err(Error::InvalidParameter {
            name: "cap",
            value: cap as f64,
            reason: "gap cap must exceed the largest compared t",
        });
    }
    let sampler = copula.sampler()?;
    let t_len = max_t as usize;
    type Acc = (Vec<Vec<RunningStats>>, u64);
    let chunks = par.map_chunks(reps, REPS_PER_CHUNK, seed, |rng, _, _, len| -> Result<Acc> {
        let mut acc = vec![vec![RunningStats::new(); t_len]; max_n - 1];
        let mut truncated = 0u64;
        let mut gaps = Vec::with_capacity(max_n);
        for _ in 0..len {
            gaps.clear();
            walk_gaps(&sampler, max_n, cap, rng, |_, _, gap, _| {
                gaps.push(gap);
                Ok(())
            })?;
            if gaps.len() < max_n || gaps.last() == Some(&cap) {
                truncated += 1;
            }
            for k in 0..max_n - 1 {
                // the later gap is unobserved once an earlier one is censored
                if k + 1 >= gaps.len() || gaps[k] >= cap {
                    break;
                }
                for t in 1..=max_t {
                    let a = (gaps[k] <= t) as i32;
                    let b = (gaps[k + 1] <= t) as i32;
                    acc[k][t as usize - 1].push((a - b) as f64);
                }
            }
        }
        Ok((acc, truncated))
    });
    let mut total = vec![vec![RunningStats::new(); t_len]; max_n - 1];
    let mut truncated = 0;
    for c in chunks {
        let (acc, tr) = c?;
        truncated += tr;
        for (tot, part) in total.iter_mut().zip(&acc) {
            for (a, b) in tot.iter_mut().zip(part) {
                a.merge(b);
            }
        }
    }
    let mut passed = true;
    let pairs = total
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let mut min_z = f64::INFINITY;
            let differences = row
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    let (m, se) = (s.mean(), s.std_error());
                    let z = if se > 0.0 { m / se } else if m < 0.0 { f64::NEG_INFINITY } else { 0.0 };
                    min_z = min_z.min(z);
                    (t as u64 + 1, m, se)
                })
                .collect();
            if min_z < -4.0 {
                passed = false;
            }
            GapPairReport {
                k: k + 1,
                pairs: row.first().map_or(0, |s| s.count()),
                differences,
                min_z,
            }
        })
        .collect();
    Ok(MonotonicityReport {
        copula: copula.to_string(),
        reps,
        max_t,
        cap,
        truncated,
        seed,
        pairs,
        passed,
    })
}
