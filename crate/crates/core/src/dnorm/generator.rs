//! Generator draws and closed-form functionals of the named families.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::model::{CustomGenerator, DependenceModel, Family};
use crate::numeric::gamma;

/// One realization of a generator `Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSample {
    pub values: Vec<f64>,
}

/// Sampler for the generator of a [`DependenceModel`], with its constants
/// precomputed.
#[derive(Clone, Debug)]
pub enum Generator {
    /// `E^{-1/lambda} / Gamma(1 - 1/lambda)` per coordinate (Frechet).
    Frechet { inv_lambda: f64, scale: f64 },
    /// `E^{1/alpha} / Gamma(1 + 1/alpha)` per coordinate (Weibull).
    Weibull { inv_alpha: f64, scale: f64 },
    Bernoulli { beta: f64 },
    /// All-ones with probability `gamma`, otherwise a random permutation of
    /// `(d, 0, ..., 0)`.
    MarshallOlkin { gamma: f64 },
    /// Random permutation of `(d, 0, ..., 0)`.
    Permutation,
    Ones,
    Custom(CustomGenerator),
}

impl Generator {
    pub fn new(model: &DependenceModel) -> Self {
        match model.family() {
            Family::Logistic { lambda } => Generator::Frechet {
                inv_lambda: 1.0 / lambda,
                scale: 1.0 / gamma(1.0 - 1.0 / lambda),
            },
            Family::WeibullModel { alpha } => Generator::Weibull {
                inv_alpha: 1.0 / alpha,
                scale: 1.0 / gamma(1.0 + 1.0 / alpha),
            },
            Family::Bernoulli { beta } => Generator::Bernoulli { beta: *beta },
            Family::MarshallOlkin { gamma } => Generator::MarshallOlkin { gamma: *gamma },
            Family::Independence => Generator::Permutation,
            Family::Comonotone => Generator::Ones,
            Family::Custom(g) => Generator::Custom(g.clone()),
        }
    }

    /// Essential supremum of the components, when the family has one.
    pub fn bound(&self, dim: usize) -> Option<f64> {
        match self {
            Generator::Frechet { .. } | Generator::Weibull { .. } => None,
            Generator::Bernoulli { beta } => Some(1.0 / beta),
            Generator::MarshallOlkin { .. } | Generator::Permutation => Some(dim as f64),
            Generator::Ones => Some(1.0),
            Generator::Custom(g) => g.bound(),
        }
    }

    /// Fills `out` with one draw; `out.len()` is the model dimension.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let d = out.len();
        match self {
            Generator::Frechet { inv_lambda, scale } => {
                for z in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *z = e.powf(-inv_lambda) * scale;
                }
            }
            Generator::Weibull { inv_alpha, scale } => {
                for z in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *z = e.powf(*inv_alpha) * scale;
                }
            }
            Generator::Bernoulli { beta } => {
                let hit = 1.0 / beta;
                for z in out.iter_mut() {
                    *z = if rng.random::<f64>() < *beta { hit } else { 0.0 };
                }
            }
            Generator::MarshallOlkin { gamma } => {
                if rng.random::<f64>() < *gamma {
                    out.fill(1.0);
                } else {
                    out.fill(0.0);
                    out[rng.random_range(0..d)] = d as f64;
                }
            }
            Generator::Permutation => {
                out.fill(0.0);
                out[rng.random_range(0..d)] = d as f64;
            }
            Generator::Ones => out.fill(1.0),
            Generator::Custom(g) => {
                let mut scratch = Vec::new();
                g.sample_into(rng as &mut dyn RngCore, out, &mut scratch);
            }
        }
    }
}

/// One generator draw.
pub fn sample_generator<R: Rng>(model: &DependenceModel, rng: &mut R) -> GeneratorSample {
    let mut values = vec![0.0; model.dim()];
    Generator::new(model).sample_into(rng, &mut values);
    GeneratorSample { values }
}

impl DependenceModel {
    /// Declared almost-sure bound `c` on the generator components.
    pub fn generator_bound(&self) -> Option<f64> {
        Generator::new(self).bound(self.dim())
    }

    /// Exact extremal concurrence probability `E |||eta|||_D`, where known.
    pub fn concurrence_closed_form(&self) -> Option<f64> {
        let d = self.dim();
        if d == 1 {
            return Some(1.0);
        }
        match self.family() {
            Family::Logistic { lambda } => {
                Some((1..d).map(|i| 1.0 - 1.0 / (lambda * i as f64)).product())
            }
            Family::Comonotone => Some(1.0),
            Family::Independence => Some(0.0),
            Family::MarshallOlkin { gamma } => {
                // Z > 0 only on the all-ones branch, where ||1/Z|| = ||1||.
                Some(gamma / (gamma + d as f64 * (1.0 - gamma)))
            }
            Family::Bernoulli { beta } => {
                // Z > 0 with probability beta^d, then 1/Z = beta * 1.
                let one_norm = (1.0 - (1.0 - beta).powi(d as i32)) / beta;
                Some(beta.powi(d as i32) / (beta * one_norm))
            }
            Family::WeibullModel { .. } | Family::Custom(_) => None,
        }
    }

    /// Exact `E ||eta||_D`, where known.
    pub fn expected_norm_closed_form(&self) -> Option<f64> {
        let d = self.dim();
        if d == 1 {
            return Some(1.0);
        }
        match self.family() {
            Family::Logistic { lambda } => {
                Some((1..d).map(|i| 1.0 + 1.0 / (lambda * i as f64)).product())
            }
            Family::Comonotone => Some(1.0),
            Family::Independence => Some(d as f64),
            _ => None,
        }
    }

    /// `P(Z > 0) > 0`, i.e. positive extremal concurrence. `None` for custom
    /// generators.
    pub fn has_positive_concurrence(&self) -> Option<bool> {
        match self.family() {
            Family::Independence => Some(self.dim() == 1),
            Family::Custom(_) => None,
            _ => Some(true),
        }
    }
}
