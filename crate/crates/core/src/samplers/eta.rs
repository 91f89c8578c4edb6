use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::stable::ln_positive_stable;
use crate::dnorm::{DependenceModel, Family, Generator};
use crate::error::{Error, Result};

/// Poisson points a single thinning draw may consume.
pub const THINNING_CAP: u64 = 10_000_000;

/// Tail mass cut off when an unbounded Weibull generator is truncated.
pub const WEIBULL_TRUNCATION_TAIL: f64 = 1e-6;

/// One draw of a standard max-stable vector: `P(eta <= x) = exp(-||x||_D)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxStableSample {
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
enum Kind {
    Comonotone,
    Independence,
    Logistic { alpha: f64, inv_lambda: f64 },
    Thinning { gen: Generator, bound: f64, clamp: Option<f64> },
}

/// Prepared sampler for `eta` under a fixed model.
#[derive(Clone, Debug)]
pub struct EtaSampler {
    dim: usize,
    kind: Kind,
    bias_note: Option<String>,
}

impl EtaSampler {
    /// Picks the sampler for `model`: direct for independence and comonotone,
    /// a positive-stable mixture for logistic, thinning for bounded
    /// generators, truncated thinning for the Weibull model.
    pub fn new(model: &DependenceModel) -> Result<Self> {
        let dim = model.dim();
        let kind = match model.family() {
            _ if dim == 1 => Kind::Independence,
            Family::Comonotone => Kind::Comonotone,
            Family::Independence => Kind::Independence,
            Family::Logistic { lambda } => Kind::Logistic {
                alpha: 1.0 / lambda,
                inv_lambda: 1.0 / lambda,
            },
            Family::WeibullModel { alpha } => {
                let gen = Generator::new(model);
                let scale = 1.0 / crate::numeric::gamma(1.0 + 1.0 / alpha);
                let cap = (-WEIBULL_TRUNCATION_TAIL.ln()).powf(1.0 / alpha) * scale;
                return Ok(Self {
                    dim,
                    kind: Kind::Thinning {
                        gen,
                        bound: cap,
                        clamp: Some(cap),
                    },
                    bias_note: Some(format!(
                        "Weibull generator truncated at its 1-{WEIBULL_TRUNCATION_TAIL:e} quantile \
                         c={cap:.6}; df bias of order {:e}",
                        dim as f64 * WEIBULL_TRUNCATION_TAIL
                    )),
                });
            }
            _ => return Self::thinning(model),
        };
        Ok(Self {
            dim,
            kind,
            bias_note: None,
        })
    }

    /// Exact thinning sampler; the model must declare a generator bound.
    pub fn thinning(model: &DependenceModel) -> Result<Self> {
        let bound = model.generator_bound().ok_or(Error::UnboundedGenerator)?;
        Ok(Self {
            dim: model.dim(),
            kind: Kind::Thinning {
                gen: Generator::new(model),
                bound,
                clamp: None,
            },
            bias_note: None,
        })
    }

    /// Thinning with generator components clamped at `cap`; approximate
    /// unless the generator is already bounded by `cap`.
    pub fn truncated(model: &DependenceModel, cap: f64) -> Result<Self> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "cap",
                value: cap,
                reason: "truncation cap must be positive and finite",
            });
        }
        if let Some(c) = model.generator_bound() {
            if c <= cap {
                return Self::thinning(model);
            }
        }
        Ok(Self {
            dim: model.dim(),
            kind: Kind::Thinning {
                gen: Generator::new(model),
                bound: cap,
                clamp: Some(cap),
            },
            bias_note: Some(format!("generator components clamped at c={cap}")),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_exact(&self) -> bool {
        self.bias_note.is_none()
    }

    pub fn bias_note(&self) -> Option<&str> {
        self.bias_note.as_deref()
    }

    pub fn method(&self) -> &'static str {
        match &self.kind {
            Kind::Comonotone => "comonotone-direct",
            Kind::Independence => "independent-exponentials",
            Kind::Logistic { .. } => "positive-stable-mixture",
            Kind::Thinning { clamp: None, .. } => "thinning",
            Kind::Thinning { .. } => "truncated-thinning",
        }
    }

    /// Fills `out` (length `dim`) with one draw.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        self.sample_counted(rng, out).map(|_| ())
    }

    /// Like [`sample_into`](Self::sample_into) and returns the number of
    /// Poisson points consumed (1 for non-thinning samplers).
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<u64> {
        crate::error::check_dim(self.dim, out.len())?;
        match &self.kind {
            Kind::Comonotone => {
                let e: f64 = Exp1.sample(rng);
                out.fill(-e);
            }
            Kind::Independence => {
                for v in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *v = -e;
                }
            }
            Kind::Logistic { alpha, inv_lambda } => {
                // eta_i = -(E_i / S)^(1/lambda)
                let ln_s = ln_positive_stable(*alpha, rng);
                for v in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *v = -((e.ln() - ln_s) * inv_lambda).exp();
                }
            }
            Kind::Thinning { gen, bound, clamp } => {
                return thin(gen, *bound, *clamp, rng, out);
            }
        }
        Ok(1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MaxStableSample> {
        let mut values = vec![0.0; self.dim];
        self.sample_into(rng, &mut values)?;
        Ok(MaxStableSample { values })
    }
}

fn thin<R: Rng + ?Sized>(
    gen: &Generator,
    bound: f64,
    clamp: Option<f64>,
    rng: &mut R,
    out: &mut [f64],
) -> Result<u64> {
    let mut m: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, out.len());
    let mut z: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, out.len());
    let mut arrival = 0.0f64;
    let mut k = 0u64;
    loop {
        let e: f64 = Exp1.sample(rng);
        arrival += e;
        let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
        if lo > 0.0 && bound / arrival <= lo {
            break;
        }
        if k == THINNING_CAP {
            return Err(Error::ThinningCap(THINNING_CAP));
        }
        k += 1;
        gen.sample_into(&mut RngShim(rng), &mut z);
        if let Some(c) = clamp {
            z.iter_mut().for_each(|v| *v = v.min(c));
        }
        for (mi, zi) in m.iter_mut().zip(&z) {
            let v = zi / arrival;
            if v > *mi {
                *mi = v;
            }
        }
    }
    for (o, mi) in out.iter_mut().zip(&m) {
        *o = -1.0 / mi;
    }
    Ok(k)
}

/// Sized adapter so unsized RNG references can drive generic samplers.
struct RngShim<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> rand::RngCore for RngShim<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// One draw of `eta` under `model`.
pub fn sample_eta<R: Rng + ?Sized>(model: &DependenceModel, rng: &mut R) -> Result<MaxStableSample> {
    EtaSampler::new(model)?.sample(rng)
}

/// One exact logistic draw.
pub fn sample_eta_logistic<R: Rng + ?Sized>(lambda: f64, dim: usize, rng: &mut R) -> Result<MaxStableSample> {
    sample_eta(&DependenceModel::logistic(lambda, dim)?, rng)
}

/// One exact thinning draw; requires a bounded generator.
pub fn sample_eta_thinning<R: Rng + ?Sized>(model: &DependenceModel, rng: &mut R) -> Result<MaxStableSample> {
    EtaSampler::thinning(model)?.sample(rng)
}
