use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::concurrence::{inverse_norm_weight, merge_stats, norm_model, with_note, Buf, REPS_CHUNK};
use super::sim::ArgmaxTracker;
use super::Mc;
use crate::dnorm::{lp_norm, DependenceModel, Family, Generator, MAX_IE_DIM};
use crate::error::{check_dim, Error, Result};
use crate::parallel::DEFAULT_CHUNK;
use crate::samplers::{CopulaModel, EtaSampler};
use crate::stats::{Estimate, PairStats, RunningStats};

/// Route used for `E ||eta||_D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimpleLimitRoute {
    /// Mean norm over `eta` draws.
    Eta,
    /// Inclusion-exclusion over margins of the generator concurrence
    /// representation `E(||1/Z_T||^{-1} 1{Z_T > 0})`.
    GeneratorIe,
    /// Logistic only: `E ||Z_W||_lambda` with a Weibull generator `Z_W`.
    WeibullIdentity,
}

impl fmt::Display for SimpleLimitRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Eta => "eta",
            Self::GeneratorIe => "generator-ie",
            Self::WeibullIdentity => "weibull-identity",
        })
    }
}

impl FromStr for SimpleLimitRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eta" => Ok(Self::Eta),
            "generator-ie" | "generator" => Ok(Self::GeneratorIe),
            "weibull-identity" | "weibull" => Ok(Self::WeibullIdentity),
            _ => Err(Error::Parse {
                input: s.to_string(),
                reason: "expected eta, generator-ie or weibull-identity".into(),
            }),
        }
    }
}

fn check_nonpositive(model_dim: usize, x: &[f64], allow_neg_inf: bool) -> Result<()> {
    check_dim(model_dim, x.len())?;
    for &v in x {
        let ok = v <= 0.0 && (allow_neg_inf || v.is_finite());
        if !ok {
            return Err(Error::InvalidParameter {
                name: "x",
                value: v,
                reason: if allow_neg_inf {
                    "evaluation point must satisfy x <= 0"
                } else {
                    "evaluation point must be finite and <= 0"
                },
            });
        }
    }
    Ok(())
}

/// `E ||eta||_D`, the limit of `n` times the simple-record probability.
pub fn simple_record_limit(model: &DependenceModel, route: SimpleLimitRoute, mc: &Mc) -> Result<Estimate> {
    let d = model.dim();
    match route {
        SimpleLimitRoute::Eta => {
            let sampler = EtaSampler::new(model)?;
            let stats = mc.accumulate(
                DEFAULT_CHUNK,
                RunningStats::new,
                |rng, acc| {
                    let mut eta: Buf = SmallVec::from_elem(0.0, d);
                    sampler.sample_into(rng, &mut eta)?;
                    acc.push(model.norm(&eta)?);
                    Ok(())
                },
                merge_stats,
            )?;
            Ok(with_note(
                stats.estimate(format!("eta-norm({})", sampler.method()), mc.seed),
                sampler.bias_note(),
            ))
        }
        SimpleLimitRoute::WeibullIdentity => {
            let lambda = match model.family() {
                Family::Logistic { lambda } => *lambda,
                _ => {
                    return Err(Error::Unsupported(format!(
                        "the Weibull identity route applies to logistic models only, not {model}"
                    )))
                }
            };
            let gen = Generator::new(&DependenceModel::weibull(lambda, d)?);
            let stats = mc.accumulate(
                DEFAULT_CHUNK,
                RunningStats::new,
                |rng, acc| {
                    let mut z: Buf = SmallVec::from_elem(0.0, d);
                    gen.sample_into(rng, &mut z);
                    acc.push(lp_norm(&z, lambda));
                    Ok(())
                },
                merge_stats,
            )?;
            Ok(stats.estimate("weibull-generator-identity", mc.seed))
        }
        SimpleLimitRoute::GeneratorIe => {
            if d > MAX_IE_DIM {
                return Err(Error::TooManyCoordinates { d, max: MAX_IE_DIM });
            }
            let (norm_m, suffix) = norm_model(model)?;
            let gen = Generator::new(model);
            let stats = mc.accumulate(
                DEFAULT_CHUNK,
                RunningStats::new,
                |rng, acc| {
                    let mut z: Buf = SmallVec::from_elem(0.0, d);
                    let mut inv: Buf = SmallVec::from_elem(0.0, d);
                    gen.sample_into(rng, &mut z);
                    let mut total = 0.0;
                    for mask in 1u32..(1 << d) {
                        // ||(1/z_T, 0)||_D is the margin norm of 1/z_T
                        let mut positive = true;
                        for i in 0..d {
                            if mask >> i & 1 == 1 {
                                positive &= z[i] > 0.0;
                                inv[i] = 1.0 / z[i];
                            } else {
                                inv[i] = 0.0;
                            }
                        }
                        if !positive {
                            continue;
                        }
                        let w = 1.0 / norm_m.norm(&inv)?;
                        if mask.count_ones() % 2 == 1 {
                            total += w;
                        } else {
                            total -= w;
                        }
                    }
                    acc.push(total);
                    Ok(())
                },
                merge_stats,
            )?;
            Ok(stats.estimate(format!("generator-inclusion-exclusion{suffix}"), mc.seed))
        }
    }
}

/// Both routes for the champion's limiting conditional survival `Hbar_D(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChampionSurvival {
    pub x: Vec<f64>,
    /// Primary value: the `eta` route when its sampler is exact, otherwise
    /// the generator route.
    pub value: Estimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Estimate>,
    pub generator: Estimate,
}

fn reject_zero_concurrence(model: &DependenceModel) -> Result<()> {
    if model.has_positive_concurrence() == Some(false) {
        return Err(Error::ZeroConcurrence(model.to_string()));
    }
    Ok(())
}

/// `Hbar_D(x) = E |||max(eta, x)|||_D / E |||eta|||_D` for `x <= 0`,
/// cross-checked by the generator representation
/// `1 - E(w exp(||1/Z||_D max_i x_i Z_i) 1{Z > 0}) / E(w 1{Z > 0})`,
/// `w = ||1/Z||_D^{-1}`.
pub fn champion_survival(model: &DependenceModel, x: &[f64], mc: &Mc) -> Result<ChampionSurvival> {
    reject_zero_concurrence(model)?;
    check_nonpositive(model.dim(), x, true)?;
    let d = model.dim();

    let (norm_m, suffix) = norm_model(model)?;
    let gen = Generator::new(model);
    let pairs = mc.accumulate(
        DEFAULT_CHUNK,
        PairStats::new,
        |rng, acc| {
            let mut z: Buf = SmallVec::from_elem(0.0, d);
            let mut buf = Buf::new();
            gen.sample_into(rng, &mut z);
            let w = inverse_norm_weight(&norm_m, &z, &mut buf)?;
            if w == 0.0 {
                acc.push(0.0, 0.0);
                return Ok(());
            }
            let peak = x.iter().zip(&z).map(|(a, b)| a * b).fold(f64::NEG_INFINITY, f64::max);
            acc.push(w * (peak / w).exp(), w);
            Ok(())
        },
        |a, b| a.merge(&b),
    )?;
    if pairs.second().mean() == 0.0 {
        return Err(Error::ZeroConcurrence(model.to_string()));
    }
    let generator = Estimate::new(
        1.0 - pairs.ratio(),
        pairs.ratio_std_error(),
        pairs.count(),
        format!("generator-ratio{suffix}"),
        mc.seed,
    );

    let eta = match EtaSampler::new(model) {
        Ok(sampler) => {
            let pairs = mc.accumulate(
                DEFAULT_CHUNK,
                PairStats::new,
                |rng, acc| {
                    let mut eta: Buf = SmallVec::from_elem(0.0, d);
                    let mut m: Buf = SmallVec::from_elem(0.0, d);
                    sampler.sample_into(rng, &mut eta)?;
                    for i in 0..d {
                        m[i] = eta[i].max(x[i]);
                    }
                    acc.push(model.dual(&m)?, model.dual(&eta)?);
                    Ok(())
                },
                |a, b| a.merge(&b),
            )?;
            if pairs.second().mean() == 0.0 {
                return Err(Error::ZeroConcurrence(model.to_string()));
            }
            let e = pairs.ratio_estimate(format!("eta-dual-ratio({})", sampler.method()), mc.seed);
            Some((with_note(e, sampler.bias_note()), sampler.is_exact()))
        }
        Err(Error::UnboundedGenerator) => None,
        Err(e) => return Err(e),
    };

    let value = match &eta {
        Some((e, true)) => e.clone(),
        _ => generator.clone(),
    };
    Ok(ChampionSurvival {
        x: x.to_vec(),
        value,
        eta: eta.map(|(e, _)| e),
        generator,
    })
}

/// [`champion_survival`] at each grid point, all with the same seed.
pub fn champion_survival_grid(model: &DependenceModel, grid: &[Vec<f64>], mc: &Mc) -> Result<Vec<ChampionSurvival>> {
    grid.iter().map(|x| champion_survival(model, x, mc)).collect()
}

/// `H_D(x) = (E ||min(x, eta)||_D - ||x||_D) / E ||eta||_D` for finite `x <= 0`,
/// as a paired ratio over `eta` draws.
pub fn simple_record_limit_df(model: &DependenceModel, x: &[f64], mc: &Mc) -> Result<Estimate> {
    check_nonpositive(model.dim(), x, false)?;
    let d = model.dim();
    let sampler = EtaSampler::new(model)?;
    let norm_x = model.norm(x)?;
    let pairs = mc.accumulate(
        DEFAULT_CHUNK,
        PairStats::new,
        |rng, acc| {
            let mut eta: Buf = SmallVec::from_elem(0.0, d);
            let mut m: Buf = SmallVec::from_elem(0.0, d);
            sampler.sample_into(rng, &mut eta)?;
            for i in 0..d {
                m[i] = eta[i].min(x[i]);
            }
            let norm_eta = model.norm(&eta)?;
            let num = if norm_x == 0.0 { norm_eta } else { model.norm(&m)? - norm_x };
            acc.push(num, norm_eta);
            Ok(())
        },
        |a, b| a.merge(&b),
    )?;
    Ok(with_note(
        pairs.ratio_estimate(format!("eta-norm-ratio({})", sampler.method()), mc.seed),
        sampler.bias_note(),
    ))
}

/// [`simple_record_limit_df`] at each grid point, all with the same seed.
pub fn simple_record_limit_df_grid(model: &DependenceModel, grid: &[Vec<f64>], mc: &Mc) -> Result<Vec<Estimate>> {
    grid.iter().map(|x| simple_record_limit_df(model, x, mc)).collect()
}

/// Conditional probability estimated from simulated batches, with the
/// number of conditioning events actually observed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEmpirical {
    pub estimate: Estimate,
    pub reps: u64,
    pub effective: u64,
}

fn check_empirical(copula: &CopulaModel, x: &[f64], n: u64) -> Result<()> {
    check_nonpositive(copula.dim(), x, true)?;
    if n < 1 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "batch size must be positive",
        });
    }
    Ok(())
}

fn check_grid(copula: &CopulaModel, grid: &[Vec<f64>], n: u64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: 0.0,
            reason: "need at least one evaluation point",
        });
    }
    grid.iter().try_for_each(|x| check_empirical(copula, x, n))
}

/// `Hbar_n(x) = P(n(U_n - 1) > x | U_n is a complete record)`.
///
/// Batches are exchangeable, so the law of `U_n` given that it is a complete
/// record equals the law of a batch's champion given that one exists. Each
/// batch with a champion contributes one conditioning event.
pub fn champion_survival_empirical(copula: &CopulaModel, x: &[f64], n: u64, mc: &Mc) -> Result<ConditionalEmpirical> {
    let mut v = champion_survival_empirical_grid(copula, &[x.to_vec()], n, mc)?;
    Ok(v.remove(0))
}

/// [`champion_survival_empirical`] at every grid point from the same batches.
pub fn champion_survival_empirical_grid(
    copula: &CopulaModel,
    grid: &[Vec<f64>],
    n: u64,
    mc: &Mc,
) -> Result<Vec<ConditionalEmpirical>> {
    check_grid(copula, grid, n)?;
    let sampler = copula.sampler()?;
    let d = copula.dim();
    let scale = n as f64;
    let stats = mc.accumulate(
        REPS_CHUNK,
        || vec![RunningStats::new(); grid.len()],
        |rng, acc| {
            let mut t = ArgmaxTracker::new(d);
            let mut u: Buf = SmallVec::from_elem(0.0, d);
            for _ in 0..n {
                sampler.sample_log_into(rng, &mut u)?;
                t.push(&u);
            }
            if let Some(c) = t.champion() {
                let z: Buf = c.iter().map(|lu| scale * lu.exp_m1()).collect();
                for (st, x) in acc.iter_mut().zip(grid) {
                    st.push(z.iter().zip(x).all(|(a, b)| a > b) as u8 as f64);
                }
            }
            Ok(())
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    )?;
    let effective = stats[0].count();
    if effective == 0 {
        return Err(Error::ZeroConcurrence(format!("{copula} (no champion in {} batches)", mc.samples)));
    }
    Ok(stats
        .iter()
        .map(|st| ConditionalEmpirical {
            estimate: with_note(
                st.estimate(format!("empirical-champion-survival(n={n})"), mc.seed),
                sampler.bias_note(),
            ),
            reps: mc.samples,
            effective,
        })
        .collect())
}

/// `H_n(x) = P(n(U_n - 1) <= x | U_n is a simple record)`.
///
/// By exchangeability every observation of a batch that holds some
/// coordinate maximum is a draw from the conditional law; the estimate is
/// the ratio of such holders meeting the bound to all holders.
pub fn simple_record_df_empirical(copula: &CopulaModel, x: &[f64], n: u64, mc: &Mc) -> Result<ConditionalEmpirical> {
    let mut v = simple_record_df_empirical_grid(copula, &[x.to_vec()], n, mc)?;
    Ok(v.remove(0))
}

/// [`simple_record_df_empirical`] at every grid point from the same batches.
pub fn simple_record_df_empirical_grid(
    copula: &CopulaModel,
    grid: &[Vec<f64>],
    n: u64,
    mc: &Mc,
) -> Result<Vec<ConditionalEmpirical>> {
    check_grid(copula, grid, n)?;
    let sampler = copula.sampler()?;
    let d = copula.dim();
    let scale = n as f64;
    let pairs = mc.accumulate(
        REPS_CHUNK,
        || vec![PairStats::new(); grid.len()],
        |rng, acc| {
            let mut t = ArgmaxTracker::new(d);
            let mut u: Buf = SmallVec::from_elem(0.0, d);
            for _ in 0..n {
                sampler.sample_log_into(rng, &mut u)?;
                t.push(&u);
            }
            let mut holders: SmallVec<[Buf; 4]> = SmallVec::new();
            t.for_each_max_holder(|h| holders.push(h.iter().map(|lu| scale * lu.exp_m1()).collect()));
            for (ps, x) in acc.iter_mut().zip(grid) {
                let hit = holders.iter().filter(|z| z.iter().zip(x).all(|(a, b)| a <= b)).count();
                ps.push(hit as f64, holders.len() as f64);
            }
            Ok(())
        },
        |a, b| a.iter_mut().zip(&b).for_each(|(x, y)| x.merge(y)),
    )?;
    Ok(pairs
        .iter()
        .map(|ps| ConditionalEmpirical {
            estimate: with_note(
                ps.ratio_estimate(format!("empirical-simple-record-df(n={n})"), mc.seed),
                sampler.bias_note(),
            ),
            reps: mc.samples,
            effective: (ps.second().mean() * ps.count() as f64).round() as u64,
        })
        .collect())
}

/// Mean simple and complete record counts at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: u64,
    pub mean_simple: f64,
    pub se_simple: f64,
    pub mean_complete: f64,
    pub se_complete: f64,
    /// `E m(k) / ln k` (undefined at `k = 1`).
    pub simple_over_log: f64,
    pub complete_over_log: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub copula: String,
    pub reps: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_note: Option<String>,
    pub rows: Vec<GrowthRow>,
}

/// Streams per chunk for the growth table.
const GROWTH_CHUNK: u64 = 16;

/// Simulates `mc.samples` streams up to the largest checkpoint and averages
/// `m(k)` and `M(k)` at each checkpoint.
pub fn expected_records_growth(copula: &CopulaModel, checkpoints: &[u64], mc: &Mc) -> Result<GrowthTable> {
    let mut ks = checkpoints.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.first() == Some(&0) || ks.is_empty() {
        return Err(Error::InvalidParameter {
            name: "checkpoints",
            value: 0.0,
            reason: "need at least one positive checkpoint",
        });
    }
    let sampler = copula.sampler()?;
    let d = copula.dim();
    let horizon = *ks.last().unwrap_or(&1);
    let init = || vec![(RunningStats::new(), RunningStats::new()); ks.len()];
    let stats = mc.accumulate(
        GROWTH_CHUNK,
        init,
        |rng, acc| {
            let mut t = ArgmaxTracker::new(d);
            let mut u: Buf = SmallVec::from_elem(0.0, d);
            let (mut simple, mut complete) = (0u64, 0u64);
            let mut next = 0;
            for i in 1..=horizon {
                sampler.sample_log_into(rng, &mut u)?;
                let (s, c) = t.push(&u);
                simple += s as u64;
                complete += c as u64;
                if ks[next] == i {
                    acc[next].0.push(simple as f64);
                    acc[next].1.push(complete as f64);
                    next += 1;
                }
            }
            Ok(())
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0.merge(&y.0);
                x.1.merge(&y.1);
            }
        },
    )?;
    let rows = ks
        .iter()
        .zip(&stats)
        .map(|(&k, (s, c))| {
            let lk = (k as f64).ln();
            GrowthRow {
                k,
                mean_simple: s.mean(),
                se_simple: s.std_error(),
                mean_complete: c.mean(),
                se_complete: c.std_error(),
                simple_over_log: s.mean() / lk,
                complete_over_log: c.mean() / lk,
            }
        })
        .collect();
    Ok(GrowthTable {
        copula: copula.to_string(),
        reps: mc.samples,
        seed: mc.seed,
        bias_note: sampler.bias_note().map(str::to_string),
        rows,
    })
}
