use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::sim::ArgmaxTracker;
use super::Mc;
use crate::dnorm::{DependenceModel, Family, Generator};
use crate::error::{Error, Result};
use crate::parallel::DEFAULT_CHUNK;
use crate::samplers::{CopulaModel, EtaSampler};
use crate::stats::{Estimate, RunningStats};

/// Inner sample count for norms of custom generators inside generator routes.
pub const NESTED_INNER_SAMPLES: u64 = 2_000;

/// Replications per chunk for routes that simulate whole samples.
pub(crate) const REPS_CHUNK: u64 = 64;

pub(crate) type Buf = SmallVec<[f64; 8]>;

/// The model whose norm is evaluated per generator draw, and a method
/// suffix when that norm is itself a nested Monte Carlo mean.
pub(crate) fn norm_model(model: &DependenceModel) -> Result<(DependenceModel, String)> {
    match model.family() {
        Family::Custom(g) => Ok((
            DependenceModel::custom(g.clone().with_eval_samples(NESTED_INNER_SAMPLES, 0x5EED))?,
            format!("-nested-mc(inner={NESTED_INNER_SAMPLES})"),
        )),
        _ => Ok((model.clone(), String::new())),
    }
}

/// `||1/z||_D^{-1} 1{z > 0}`.
#[inline]
pub(crate) fn inverse_norm_weight(model: &DependenceModel, z: &[f64], buf: &mut Buf) -> Result<f64> {
    if z.iter().any(|v| !(*v > 0.0)) {
        return Ok(0.0);
    }
    buf.clear();
    buf.extend(z.iter().map(|v| 1.0 / v));
    Ok(1.0 / model.norm(buf)?)
}

pub(crate) fn merge_stats(a: &mut RunningStats, b: RunningStats) {
    a.merge(&b);
}

pub(crate) fn with_note(e: Estimate, note: Option<&str>) -> Estimate {
    match note {
        Some(n) => e.with_bias_note(n),
        None => e,
    }
}

/// `E |||eta|||_D = E(||1/Z||_D^{-1} 1{Z > 0})` over generator draws.
pub fn concurrence_via_generator(model: &DependenceModel, mc: &Mc) -> Result<Estimate> {
    let (norm_m, suffix) = norm_model(model)?;
    let gen = Generator::new(model);
    let d = model.dim();
    let stats = mc.accumulate(
        DEFAULT_CHUNK,
        RunningStats::new,
        |rng, acc| {
            let mut z: Buf = SmallVec::from_elem(0.0, d);
            let mut buf = Buf::new();
            gen.sample_into(rng, &mut z);
            acc.push(inverse_norm_weight(&norm_m, &z, &mut buf)?);
            Ok(())
        },
        merge_stats,
    )?;
    Ok(stats.estimate(format!("generator-lemma{suffix}"), mc.seed))
}

/// `E |||eta|||_D` as the mean dual over `eta` draws.
pub fn concurrence_via_eta(model: &DependenceModel, mc: &Mc) -> Result<Estimate> {
    let sampler = EtaSampler::new(model)?;
    let d = model.dim();
    let stats = mc.accumulate(
        DEFAULT_CHUNK,
        RunningStats::new,
        |rng, acc| {
            let mut eta: Buf = SmallVec::from_elem(0.0, d);
            sampler.sample_into(rng, &mut eta)?;
            acc.push(model.dual(&eta)?);
            Ok(())
        },
        merge_stats,
    )?;
    Ok(with_note(
        stats.estimate(format!("eta-dual({})", sampler.method()), mc.seed),
        sampler.bias_note(),
    ))
}

/// Empirical concurrence from `mc.samples` replications of `n` copula draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceEmpirical {
    /// Fraction of replications containing a champion (`p_n`).
    pub p_n: Estimate,
    /// `n` times the fraction whose last draw is a complete record.
    pub n_pi_bar: Estimate,
}

pub fn concurrence_empirical(copula: &CopulaModel, n: u64, mc: &Mc) -> Result<ConcurrenceEmpirical> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "need at least two observations per replication",
        });
    }
    let sampler = copula.sampler()?;
    let d = copula.dim();
    let (champ, last) = mc.accumulate(
        REPS_CHUNK,
        || (RunningStats::new(), RunningStats::new()),
        |rng, (champ, last)| {
            let mut t = ArgmaxTracker::new(d);
            let mut x: Buf = SmallVec::from_elem(0.0, d);
            let mut complete = false;
            for _ in 0..n {
                sampler.sample_log_into(rng, &mut x)?;
                complete = t.push(&x).1;
            }
            champ.push(t.champion().is_some() as u8 as f64);
            last.push(complete as u8 as f64);
            Ok(())
        },
        |a, b| {
            a.0.merge(&b.0);
            a.1.merge(&b.1);
        },
    )?;
    let note = sampler.bias_note();
    let scale = n as f64;
    Ok(ConcurrenceEmpirical {
        p_n: with_note(champ.estimate(format!("empirical-champion(n={n})"), mc.seed), note),
        n_pi_bar: with_note(
            Estimate::new(
                scale * last.mean(),
                scale * last.std_error(),
                last.count(),
                format!("empirical-n-pi-bar(n={n})"),
                mc.seed,
            ),
            note,
        ),
    })
}

/// Finite-`n` complete-record probability for max-stable data,
/// `E exp(-(n-1) ||eta||_D)`.
pub fn record_prob_maxstable_exact(model: &DependenceModel, n: u64, mc: &Mc) -> Result<Estimate> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "record index is 1-based",
        });
    }
    if n == 1 {
        return Ok(Estimate::exact(1.0, 0, "first-observation", mc.seed));
    }
    let sampler = EtaSampler::new(model)?;
    let d = model.dim();
    let k = (n - 1) as f64;
    let stats = mc.accumulate(
        DEFAULT_CHUNK,
        RunningStats::new,
        |rng, acc| {
            let mut eta: Buf = SmallVec::from_elem(0.0, d);
            sampler.sample_into(rng, &mut eta)?;
            acc.push((-k * model.norm(&eta)?).exp());
            Ok(())
        },
        merge_stats,
    )?;
    Ok(with_note(stats.estimate(format!("maxstable-exact(n={n})"), mc.seed), sampler.bias_note()))
}

/// `sum_{i<=n} pibar_i = E M(n)` for max-stable data, from the per-draw
/// geometric sum `sum_i exp(-(i-1) ||eta||_D)`.
pub fn expected_complete_records_exact(model: &DependenceModel, n: u64, mc: &Mc) -> Result<Estimate> {
    let sampler = EtaSampler::new(model)?;
    let d = model.dim();
    let nf = n as f64;
    let stats = mc.accumulate(
        DEFAULT_CHUNK,
        RunningStats::new,
        |rng, acc| {
            let mut eta: Buf = SmallVec::from_elem(0.0, d);
            sampler.sample_into(rng, &mut eta)?;
            let s = model.norm(&eta)?;
            acc.push((-nf * s).exp_m1() / (-s).exp_m1());
            Ok(())
        },
        merge_stats,
    )?;
    Ok(with_note(
        stats.estimate(format!("maxstable-exact-sum(n={n})"), mc.seed),
        sampler.bias_note(),
    ))
}
