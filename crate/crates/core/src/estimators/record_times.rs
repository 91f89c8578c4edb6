use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::concurrence::{merge_stats, with_note, Buf};
use super::Mc;
use crate::error::{Error, Result};
use crate::numeric::{bivariate_norm_cdf, norm_quantile};
use crate::parallel::DEFAULT_CHUNK;
use crate::records::empirical_ranks;
use crate::samplers::{CopulaFamily, CopulaModel};
use crate::stats::{median_of_means, Estimate, RunningStats};

/// Blocks for the median-of-means aggregation of `1/(1 - C(U))`.
pub const MOM_BLOCKS: usize = 32;

/// Tail slopes of `P(N(2) > k)` at or above this value flag a divergent mean.
pub const SLOPE_THRESHOLD: f64 = -1.3;

/// Smallest count of runs still alive at `k` for `k` to enter the slope fit.
const SLOPE_MIN_COUNT: u64 = 100;
/// Smallest `k` used in the slope fit.
const SLOPE_MIN_K: u64 = 10;

/// Runs per chunk for the direct simulation of `N(2)`.
const DIRECT_CHUNK: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub k: u64,
    pub p: f64,
    pub std_error: f64,
}

/// Both routes for `E N(2)`, the first simple-record time after `N(1) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct N2Report {
    pub copula: String,
    /// Median-of-means of `1/(1 - C(U)) + 1`; absent without a closed-form df.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<Estimate>,
    /// `E min(N(2), cap + 1)` from direct simulation.
    pub direct: Estimate,
    pub cap: u64,
    /// Runs with `N(2) > cap`.
    pub censored: u64,
    /// `P(N(2) > k)` for `k <= 100` and on a log grid up to `cap`.
    pub tail: Vec<TailPoint>,
    /// Least-squares slope of `ln P(N(2) > k)` on `ln k`.
    pub tail_slope: f64,
    /// Range of `k` used in the slope fit.
    pub slope_range: (u64, u64),
    pub divergence_flag: bool,
}

fn tail_grid(cap: u64) -> Vec<u64> {
    let mut ks: Vec<u64> = (1..=cap.min(100)).collect();
    let mut k = 100.0f64;
    loop {
        k *= 10f64.powf(0.1);
        let ki = k.round() as u64;
        if ki > cap {
            break;
        }
        if ks.last() != Some(&ki) {
            ks.push(ki);
        }
    }
    ks
}

/// Survival counts `#{N(2) > k}` for `k = 0..=cap` from a histogram of
/// `min(N(2), cap + 1)`.
fn survival_counts(hist: &[u64]) -> Vec<u64> {
    let mut s = vec![0u64; hist.len()];
    let mut acc = 0u64;
    for k in (0..hist.len()).rev() {
        s[k] = acc;
        acc += hist[k];
    }
    s
}

fn fit_slope(surv: &[u64], runs: u64) -> (f64, (u64, u64)) {
    let top = (SLOPE_MIN_K as usize..surv.len())
        .take_while(|&k| surv[k] >= SLOPE_MIN_COUNT)
        .last();
    let Some(top) = top else {
        return (f64::NAN, (SLOPE_MIN_K, SLOPE_MIN_K));
    };
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut k = SLOPE_MIN_K as f64;
    let mut last = 0usize;
    while (k.round() as usize) <= top {
        let ki = k.round() as usize;
        if ki != last {
            pts.push(((ki as f64).ln(), (surv[ki] as f64 / runs as f64).ln()));
            last = ki;
        }
        k *= 10f64.powf(0.1);
    }
    if pts.len() < 3 {
        return (f64::NAN, (SLOPE_MIN_K, top as u64));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx, (SLOPE_MIN_K, top as u64))
}

/// `E N(2) = E(1/(1 - C(U))) + 1` by median-of-means, and a direct
/// simulation of `N(2)` censored at `cap` giving the tail `P(N(2) > k)`.
///
/// The divergence flag is raised when the fitted tail slope is at least
/// [`SLOPE_THRESHOLD`], or when no slope can be fitted because the tail is
/// too thin to matter.
pub fn expected_n2(copula: &CopulaModel, mc: &Mc, cap: u64) -> Result<N2Report> {
    if cap < 1 {
        return Err(Error::InvalidParameter {
            name: "cap",
            value: cap as f64,
            reason: "censoring cap must be positive",
        });
    }
    let sampler = copula.sampler()?;
    let d = copula.dim();
    let note = sampler.bias_note();

    let integral = if copula.has_closed_form_cdf() {
        let values = mc.accumulate(
            DEFAULT_CHUNK,
            Vec::new,
            |rng, acc: &mut Vec<f64>| {
                let mut u: Buf = SmallVec::from_elem(0.0, d);
                sampler.sample_log_into(rng, &mut u)?;
                let (_, s) = copula.cdf_log(&u)?;
                acc.push(1.0 / s + 1.0);
                Ok(())
            },
            |a, b| a.extend(b),
        )?;
        let (m, spread) = median_of_means(&values, MOM_BLOCKS);
        Some(with_note(
            Estimate::new(m, spread, values.len() as u64, format!("integral-median-of-means({MOM_BLOCKS})"), mc.seed),
            note,
        ))
    } else {
        None
    };

    let slots = (cap + 2) as usize;
    let (hist, stats) = mc.with_seed(mc.seed ^ 0xD1EC7).accumulate(
        DIRECT_CHUNK,
        || (vec![0u64; slots], RunningStats::new()),
        |rng, (hist, stats)| {
            let mut first: Buf = SmallVec::from_elem(0.0, d);
            let mut x: Buf = SmallVec::from_elem(0.0, d);
            sampler.sample_log_into(rng, &mut first)?;
            let mut n2 = cap + 1;
            for k in 2..=cap {
                sampler.sample_log_into(rng, &mut x)?;
                if x.iter().zip(&first).any(|(a, b)| a > b) {
                    n2 = k;
                    break;
                }
            }
            hist[n2 as usize] += 1;
            stats.push(n2 as f64);
            Ok(())
        },
        |a, b| {
            for (x, y) in a.0.iter_mut().zip(&b.0) {
                *x += y;
            }
            a.1.merge(&b.1);
        },
    )?;
    let runs = stats.count();
    let surv = survival_counts(&hist);
    let tail = tail_grid(cap)
        .into_iter()
        .map(|k| {
            let p = surv[k as usize] as f64 / runs as f64;
            TailPoint {
                k,
                p,
                std_error: (p * (1.0 - p) / runs as f64).sqrt(),
            }
        })
        .collect();
    let (tail_slope, slope_range) = fit_slope(&surv, runs);
    let divergence_flag = tail_slope >= SLOPE_THRESHOLD;
    let censored = hist[slots - 1];
    let mut direct = stats
        .estimate(format!("direct-truncated-mean(cap={cap})"), mc.seed)
        .with_divergence(divergence_flag);
    if censored > 0 {
        direct = direct.with_bias_note(format!("{censored} of {runs} runs censored at N(2) = {}", cap + 1));
    }
    let direct = match note {
        Some(n) if direct.bias_note.is_none() => direct.with_bias_note(n),
        _ => direct,
    };
    Ok(N2Report {
        copula: copula.to_string(),
        integral: integral.map(|e| e.with_divergence(divergence_flag)),
        direct,
        cap,
        censored,
        tail,
        tail_slope,
        slope_range,
        divergence_flag,
    })
}

/// Where the pair for [`chi_bar`] comes from.
#[derive(Clone, Debug)]
pub enum ChiBarSource {
    /// Coordinates 1 and 2 of a copula, simulated `mc.samples` times.
    Copula(CopulaModel),
    /// Observed pairs on any scale, turned into ranks.
    Data(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiBarRow {
    pub u: f64,
    pub exceedances: u64,
    pub n: u64,
    pub p_joint: f64,
    pub chi_bar: f64,
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Exceedance counts below this trigger a warning.
const CHI_BAR_MIN_COUNT: u64 = 50;

fn chi_bar_value(u: f64, p: f64) -> f64 {
    2.0 * (-u).ln_1p() / p.ln() - 1.0
}

/// Exact `chi_bar(u) = 2 ln(1 - u) / ln P(U_1 > u, U_2 > u) - 1` for the
/// first two coordinates, where the pair df is available.
pub fn chi_bar_exact(copula: &CopulaModel, u: f64) -> Option<f64> {
    if copula.dim() < 2 || !(u > 0.0 && u < 1.0) {
        return None;
    }
    let joint = match copula.family() {
        CopulaFamily::Product => (1.0 - u).powi(2),
        CopulaFamily::Comonotone => 1.0 - u,
        CopulaFamily::Gaussian { rho } => {
            let h = norm_quantile(u);
            bivariate_norm_cdf(-h, -h, *rho)
        }
        _ => {
            let mut lu = vec![0.0; copula.dim()];
            lu[0] = u.ln();
            lu[1] = u.ln();
            let (_, s) = copula.cdf_log(&lu).ok()?;
            2.0 * (1.0 - u) - s
        }
    };
    Some(chi_bar_value(u, joint))
}

/// Empirical `chi_bar(u)` on `u_grid` with delta-method standard errors
/// `|2 ln(1-u)| / (p ln(p)^2) sqrt(p(1-p)/n)`.
pub fn chi_bar(source: &ChiBarSource, u_grid: &[f64], mc: &Mc) -> Result<Vec<ChiBarRow>> {
    for &u in u_grid {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::InvalidParameter {
                name: "u",
                value: u,
                reason: "chi-bar levels must lie in (0, 1)",
            });
        }
    }
    let log_grid: Vec<f64> = u_grid.iter().map(|u| u.ln()).collect();
    let (counts, n, exact): (Vec<u64>, u64, Vec<Option<f64>>) = match source {
        ChiBarSource::Copula(copula) => {
            if copula.dim() < 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: copula.dim(),
                });
            }
            let sampler = copula.sampler()?;
            let d = copula.dim();
            let counts = mc.accumulate(
                DEFAULT_CHUNK,
                || vec![0u64; log_grid.len()],
                |rng, acc| {
                    let mut x: Buf = SmallVec::from_elem(0.0, d);
                    sampler.sample_log_into(rng, &mut x)?;
                    let low = x[0].min(x[1]);
                    for (c, lu) in acc.iter_mut().zip(&log_grid) {
                        *c += (low > *lu) as u64;
                    }
                    Ok(())
                },
                |a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                },
            )?;
            let exact = u_grid.iter().map(|&u| chi_bar_exact(copula, u)).collect();
            (counts, mc.samples, exact)
        }
        ChiBarSource::Data(pairs) => {
            if pairs.is_empty() {
                return Err(Error::EmptyStream);
            }
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let (ra, rb) = (empirical_ranks(&a), empirical_ranks(&b));
            let counts = u_grid
                .iter()
                .map(|&u| ra.iter().zip(&rb).filter(|(x, y)| x.min(**y) > u).count() as u64)
                .collect();
            (counts, pairs.len() as u64, vec![None; u_grid.len()])
        }
    };
    Ok(u_grid
        .iter()
        .zip(counts)
        .zip(exact)
        .map(|((&u, c), exact)| {
            let p = c as f64 / n as f64;
            let lp = p.ln();
            let se = (2.0 * (-u).ln_1p()).abs() / (p * lp * lp) * (p * (1.0 - p) / n as f64).sqrt();
            ChiBarRow {
                u,
                exceedances: c,
                n,
                p_joint: p,
                chi_bar: chi_bar_value(u, p),
                std_error: if c == 0 { f64::NAN } else { se },
                exact,
                warning: (c < CHI_BAR_MIN_COUNT)
                    .then(|| format!("only {c} joint exceedances (< {CHI_BAR_MIN_COUNT})")),
            }
        })
        .collect())
}

/// Both routes for `P(X_{N(2)} <= x)` on the copula scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondRecordReport {
    pub x: Vec<f64>,
    /// `E((C(x) - C(min(x, Y))) / (1 - C(Y)))` over `Y ~ C`; absent without
    /// a closed-form df.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<Estimate>,
    /// Fraction of simulated second records below `x`, over uncensored runs.
    pub direct: Estimate,
    pub censored: u64,
}

/// `P(X_{N(2)} <= x)` by conditioning on the first observation, and by direct
/// simulation of the second record with the search for it cut at `cap` draws.
pub fn second_record_df(copula: &CopulaModel, x: &[f64], mc: &Mc, cap: u64) -> Result<SecondRecordReport> {
    crate::error::check_dim(copula.dim(), x.len())?;
    for &v in x {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "x",
                value: v,
                reason: "second-record df is evaluated on the copula scale (0, 1]",
            });
        }
    }
    let sampler = copula.sampler()?;
    let d = copula.dim();
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let note = sampler.bias_note();

    let formula = if copula.has_closed_form_cdf() {
        let (_, s_x) = copula.cdf_log(&lx)?;
        let stats = mc.accumulate(
            DEFAULT_CHUNK,
            RunningStats::new,
            |rng, acc| {
                let mut y: Buf = SmallVec::from_elem(0.0, d);
                let mut m: Buf = SmallVec::from_elem(0.0, d);
                sampler.sample_log_into(rng, &mut y)?;
                for i in 0..d {
                    m[i] = y[i].min(lx[i]);
                }
                let (_, s_y) = copula.cdf_log(&y)?;
                let (_, s_m) = copula.cdf_log(&m)?;
                acc.push(((s_m - s_x) / s_y).clamp(0.0, 1.0));
                Ok(())
            },
            merge_stats,
        )?;
        Some(with_note(stats.estimate("conditioning-formula", mc.seed), note))
    } else {
        None
    };

    let (stats, censored) = mc.with_seed(mc.seed ^ 0x5EC0D).accumulate(
        DIRECT_CHUNK,
        || (RunningStats::new(), 0u64),
        |rng, (stats, censored)| {
            let mut first: Buf = SmallVec::from_elem(0.0, d);
            let mut z: Buf = SmallVec::from_elem(0.0, d);
            sampler.sample_log_into(rng, &mut first)?;
            for _ in 1..cap {
                sampler.sample_log_into(rng, &mut z)?;
                if z.iter().zip(&first).any(|(a, b)| a > b) {
                    stats.push(z.iter().zip(&lx).all(|(a, b)| a <= b) as u8 as f64);
                    return Ok(());
                }
            }
            *censored += 1;
            Ok(())
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1 += b.1;
        },
    )?;
    let mut direct = stats.estimate(format!("direct-simulation(cap={cap})"), mc.seed);
    if censored > 0 {
        direct = direct.with_bias_note(format!("{censored} runs without a second record by N = {cap} dropped"));
    } else if let Some(n) = note {
        direct = direct.with_bias_note(n);
    }
    Ok(SecondRecordReport {
        x: x.to_vec(),
        formula,
        direct,
        censored,
    })
}
