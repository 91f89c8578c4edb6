use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};

/// Fills a full-dimensional generator draw.
pub type GeneratorFn = dyn Fn(&mut dyn RngCore, &mut [f64]) + Send + Sync;

/// User-supplied generator `Z` (nonnegative, unit-mean components).
///
/// Norms and duals of custom models are Monte Carlo means over
/// `eval_samples` draws from a fixed seed, so they are deterministic but
/// only approximate.
#[derive(Clone)]
pub struct CustomGenerator {
    sampler: Arc<GeneratorFn>,
    full_dim: usize,
    coords: Vec<usize>,
    bound: Option<f64>,
    label: String,
    eval_samples: u64,
    eval_seed: u64,
}

impl CustomGenerator {
    pub const DEFAULT_EVAL_SAMPLES: u64 = 200_000;

    pub fn new<F>(label: impl Into<String>, dim: usize, sampler: F) -> Self
    where
        F: Fn(&mut dyn RngCore, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            sampler: Arc::new(sampler),
            full_dim: dim,
            coords: (0..dim).collect(),
            bound: None,
            label: label.into(),
            eval_samples: Self::DEFAULT_EVAL_SAMPLES,
            eval_seed: 0x5EED,
        }
    }

    /// Declares an almost-sure upper bound on every component.
    pub fn with_bound(mut self, c: f64) -> Self {
        self.bound = Some(c);
        self
    }

    pub fn with_eval_samples(mut self, samples: u64, seed: u64) -> Self {
        self.eval_samples = samples.max(1);
        self.eval_seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub(crate) fn eval_samples(&self) -> u64 {
        self.eval_samples
    }

    pub(crate) fn eval_seed(&self) -> u64 {
        self.eval_seed
    }

    /// Draws into `out` (length `dim()`), using `scratch` for the full draw.
    pub(crate) fn sample_into(&self, rng: &mut dyn RngCore, out: &mut [f64], scratch: &mut Vec<f64>) {
        if self.coords.len() == self.full_dim {
            (self.sampler)(rng, out);
            return;
        }
        scratch.resize(self.full_dim, 0.0);
        (self.sampler)(rng, scratch);
        for (o, &c) in out.iter_mut().zip(&self.coords) {
            *o = scratch[c];
        }
    }

    fn restrict(&self, subset: &[usize]) -> Self {
        let mut out = self.clone();
        out.coords = subset.iter().map(|&i| self.coords[i]).collect();
        out
    }
}

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGenerator")
            .field("label", &self.label)
            .field("coords", &self.coords)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl PartialEq for CustomGenerator {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.sampler, &other.sampler)
            && self.coords == other.coords
            && self.bound == other.bound
            && self.eval_samples == other.eval_samples
            && self.eval_seed == other.eval_seed
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `(sum |x_i|^lambda)^(1/lambda)`, `lambda > 1`.
    Logistic { lambda: f64 },
    /// Generator with i.i.d. Weibull(`alpha`) components.
    WeibullModel { alpha: f64 },
    /// Generator `B_i / beta` with i.i.d. Bernoulli(`beta`) indicators.
    Bernoulli { beta: f64 },
    /// `gamma ||x||_inf + (1 - gamma) ||x||_1`.
    MarshallOlkin { gamma: f64 },
    Independence,
    Comonotone,
    Custom(CustomGenerator),
}

/// A D-norm on `R^d` given by a named dependence family.
#[derive(Clone, Debug, PartialEq)]
pub struct DependenceModel {
    family: Family,
    dim: usize,
}

fn check_dim_positive(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidParameter {
            name: "d",
            value: 0.0,
            reason: "dimension must be at least 1",
        });
    }
    Ok(())
}

impl DependenceModel {
    pub fn logistic(lambda: f64, dim: usize) -> Result<Self> {
        if !(lambda > 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "logistic parameter must be finite and > 1",
            });
        }
        Self::with_family(Family::Logistic { lambda }, dim)
    }

    pub fn weibull(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "Weibull parameter must be finite and > 0",
            });
        }
        Self::with_family(Family::WeibullModel { alpha }, dim)
    }

    pub fn bernoulli(beta: f64, dim: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "Bernoulli parameter must lie in (0, 1]",
            });
        }
        Self::with_family(Family::Bernoulli { beta }, dim)
    }

    pub fn marshall_olkin(gamma: f64, dim: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "Marshall-Olkin parameter must lie in (0, 1)",
            });
        }
        Self::with_family(Family::MarshallOlkin { gamma }, dim)
    }

    pub fn independence(dim: usize) -> Result<Self> {
        Self::with_family(Family::Independence, dim)
    }

    pub fn comonotone(dim: usize) -> Result<Self> {
        Self::with_family(Family::Comonotone, dim)
    }

    pub fn custom(generator: CustomGenerator) -> Result<Self> {
        if let Some(c) = generator.bound {
            if !(c >= 1.0 && c.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "c",
                    value: c,
                    reason: "generator bound must be finite and >= 1",
                });
            }
        }
        let dim = generator.dim();
        Self::with_family(Family::Custom(generator), dim)
    }

    fn with_family(family: Family, dim: usize) -> Result<Self> {
        check_dim_positive(dim)?;
        Ok(Self { family, dim })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same family restricted to the coordinates in `subset` (0-based,
    /// strictly increasing). All named families are closed under margins
    /// with unchanged parameters.
    pub fn margin(&self, subset: &[usize]) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::InvalidSubset("empty subset".into()));
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(format!(
                "indices must be strictly increasing: {subset:?}"
            )));
        }
        if let Some(&last) = subset.last() {
            if last >= self.dim {
                return Err(Error::InvalidSubset(format!(
                    "index {last} out of range for dimension {}",
                    self.dim
                )));
            }
        }
        let family = match &self.family {
            Family::Custom(g) => Family::Custom(g.restrict(subset)),
            other => other.clone(),
        };
        Ok(Self {
            family,
            dim: subset.len(),
        })
    }

    /// Same family and parameter in another dimension. Not available for
    /// custom generators.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        check_dim_positive(dim)?;
        if matches!(self.family, Family::Custom(_)) {
            return Err(Error::Unsupported(
                "custom generators have a fixed dimension".into(),
            ));
        }
        Ok(Self {
            family: self.family.clone(),
            dim,
        })
    }
}

/// Descriptor grammar:
///
/// ```text
/// model  := family [ ":d=" n ]            (d defaults to 2)
/// family := "logistic:" f | "weibull:" f | "bernoulli:" f | "mo:" f
///         | "indep" | "independence" | "comonotone"
/// ```
impl FromStr for DependenceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let mut tokens: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let mut dim = 2usize;
        if let Some(last) = tokens.last() {
            if let Some(v) = last.strip_prefix("d=") {
                dim = v.parse().map_err(|_| err("dimension must be a positive integer"))?;
                tokens.pop();
            }
        }
        let param = |tokens: &[&str]| -> Result<f64> {
            match tokens {
                [_, p] => p.parse::<f64>().map_err(|_| err("parameter is not a number")),
                [_] => Err(err("missing parameter")),
                _ => Err(err("too many fields")),
            }
        };
        let no_param = |tokens: &[&str]| -> Result<()> {
            if tokens.len() == 1 {
                Ok(())
            } else {
                Err(err("family takes no parameter"))
            }
        };
        let family = tokens.first().copied().unwrap_or("").to_ascii_lowercase();
        match family.as_str() {
            "logistic" => Self::logistic(param(&tokens)?, dim),
            "weibull" => Self::weibull(param(&tokens)?, dim),
            "bernoulli" => Self::bernoulli(param(&tokens)?, dim),
            "mo" => Self::marshall_olkin(param(&tokens)?, dim),
            "indep" | "independence" => {
                no_param(&tokens)?;
                Self::independence(dim)
            }
            "comonotone" => {
                no_param(&tokens)?;
                Self::comonotone(dim)
            }
            "" => Err(err("empty descriptor")),
            _ => Err(err("unknown family")),
        }
    }
}

impl fmt::Display for DependenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Logistic { lambda } => write!(f, "logistic:{lambda}")?,
            Family::WeibullModel { alpha } => write!(f, "weibull:{alpha}")?,
            Family::Bernoulli { beta } => write!(f, "bernoulli:{beta}")?,
            Family::MarshallOlkin { gamma } => write!(f, "mo:{gamma}")?,
            Family::Independence => f.write_str("indep")?,
            Family::Comonotone => f.write_str("comonotone")?,
            Family::Custom(g) => write!(f, "custom({})", g.label)?,
        }
        write!(f, ":d={}", self.dim)
    }
}
