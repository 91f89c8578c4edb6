use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::eta::EtaSampler;
use crate::dnorm::DependenceModel;
use crate::error::{Error, Result};
use crate::numeric::{bivariate_norm_cdf, norm_cdf, norm_quantile};

#[derive(Clone, Debug, PartialEq)]
pub enum CopulaFamily {
    Product,
    Comonotone,
    /// Extreme-value copula `exp(-(sum (-ln u_i)^lambda)^(1/lambda))`.
    GumbelHougaard { lambda: f64 },
    /// Equicorrelated Gaussian copula.
    Gaussian { rho: f64 },
    /// `exp(-||ln u||_D)`.
    MaxStable(DependenceModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CopulaModel {
    family: CopulaFamily,
    dim: usize,
}

impl CopulaModel {
    pub fn product(dim: usize) -> Result<Self> {
        Self::checked(CopulaFamily::Product, dim)
    }

    pub fn comonotone(dim: usize) -> Result<Self> {
        Self::checked(CopulaFamily::Comonotone, dim)
    }

    pub fn gumbel(lambda: f64, dim: usize) -> Result<Self> {
        // validated through the logistic model it samples from
        DependenceModel::logistic(lambda, dim)?;
        Self::checked(CopulaFamily::GumbelHougaard { lambda }, dim)
    }

    pub fn gaussian(rho: f64, dim: usize) -> Result<Self> {
        let lower = if dim > 1 { -1.0 / (dim as f64 - 1.0) } else { -1.0 };
        if !(rho > lower && rho < 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                reason: "equicorrelation must lie in (-1/(d-1), 1)",
            });
        }
        Self::checked(CopulaFamily::Gaussian { rho }, dim)
    }

    pub fn max_stable(model: DependenceModel) -> Self {
        let dim = model.dim();
        Self {
            family: CopulaFamily::MaxStable(model),
            dim,
        }
    }

    fn checked(family: CopulaFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "d",
                value: 0.0,
                reason: "dimension must be at least 1",
            });
        }
        Ok(Self { family, dim })
    }

    pub fn family(&self) -> &CopulaFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The D-norm behind the copula's max-stable limit, when it is one of the
    /// named families (product, comonotone, Gumbel and max-stable copulas are
    /// themselves max-stable).
    pub fn dependence_model(&self) -> Option<DependenceModel> {
        match &self.family {
            CopulaFamily::Product => DependenceModel::independence(self.dim).ok(),
            CopulaFamily::Comonotone => DependenceModel::comonotone(self.dim).ok(),
            CopulaFamily::GumbelHougaard { lambda } => DependenceModel::logistic(*lambda, self.dim).ok(),
            CopulaFamily::MaxStable(m) => Some(m.clone()),
            CopulaFamily::Gaussian { .. } => None,
        }
    }

    pub fn has_closed_form_cdf(&self) -> bool {
        !matches!(self.family, CopulaFamily::Gaussian { .. }) || self.dim <= 2
    }

    /// `C(u)`.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        crate::error::check_dim(self.dim, u.len())?;
        for &v in u {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name: "u",
                    value: v,
                    reason: "copula arguments must lie in [0, 1]",
                });
            }
        }
        let log_u: Vec<f64> = u.iter().map(|v| v.ln()).collect();
        Ok(self.cdf_log(&log_u)?.0)
    }

    /// `(C(u), 1 - C(u))` from `ln u`, keeping precision near `u = 1`.
    pub fn cdf_log(&self, log_u: &[f64]) -> Result<(f64, f64)> {
        crate::error::check_dim(self.dim, log_u.len())?;
        let from_log_c = |lc: f64| (lc.exp(), -lc.exp_m1());
        match &self.family {
            CopulaFamily::Product => Ok(from_log_c(log_u.iter().sum())),
            CopulaFamily::Comonotone => Ok(from_log_c(log_u.iter().copied().fold(0.0, f64::min))),
            CopulaFamily::GumbelHougaard { .. } | CopulaFamily::MaxStable(_) => {
                let model = self.dependence_model().expect("max-stable family");
                Ok(from_log_c(-model.norm(log_u)?))
            }
            CopulaFamily::Gaussian { rho } => {
                if self.dim == 1 {
                    return Ok(from_log_c(log_u[0]));
                }
                if self.dim > 2 {
                    return Err(Error::Unsupported(
                        "Gaussian copula df is only available for d = 2".into(),
                    ));
                }
                // upper-tail quantiles -z_i = Phi^{-1}(1 - u_i), exact near u = 1
                let tail: Vec<f64> = log_u.iter().map(|l| norm_quantile(-l.exp_m1())).collect();
                let c = bivariate_norm_cdf(-tail[0], -tail[1], *rho);
                let survival = norm_cdf(tail[0]) + norm_cdf(tail[1])
                    - bivariate_norm_cdf(tail[0], tail[1], *rho);
                Ok((c, survival.clamp(0.0, 1.0)))
            }
        }
    }

    pub fn sampler(&self) -> Result<CopulaSampler> {
        let kind = match &self.family {
            CopulaFamily::Product => SamplerKind::Product,
            CopulaFamily::Comonotone => SamplerKind::Comonotone,
            CopulaFamily::GumbelHougaard { .. } | CopulaFamily::MaxStable(_) => {
                SamplerKind::Eta(EtaSampler::new(&self.dependence_model().expect("max-stable family"))?)
            }
            CopulaFamily::Gaussian { rho } => SamplerKind::Gaussian {
                common: rho.max(0.0).sqrt(),
                own: (1.0 - rho.max(0.0)).sqrt(),
                rho: *rho,
            },
        };
        Ok(CopulaSampler { dim: self.dim, kind })
    }
}

#[derive(Clone, Debug)]
enum SamplerKind {
    Product,
    Comonotone,
    Eta(EtaSampler),
    Gaussian { common: f64, own: f64, rho: f64 },
}

/// Prepared copula sampler. Draws are produced on the log scale `ln U`,
/// which keeps full resolution near `U = 1`.
#[derive(Clone, Debug)]
pub struct CopulaSampler {
    dim: usize,
    kind: SamplerKind,
}

/// `ln Phi(x)` without cancellation for large `x`.
fn ln_norm_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-norm_cdf(-x)).ln_1p()
    } else {
        norm_cdf(x).ln()
    }
}

impl CopulaSampler {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bias_note(&self) -> Option<&str> {
        match &self.kind {
            SamplerKind::Eta(s) => s.bias_note(),
            _ => None,
        }
    }

    /// Fills `out` with `ln U` for one copula draw (all entries `< 0`).
    pub fn sample_log_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        crate::error::check_dim(self.dim, out.len())?;
        match &self.kind {
            SamplerKind::Product => {
                for v in out.iter_mut() {
                    let e: f64 = Exp1.sample(rng);
                    *v = -e;
                }
            }
            SamplerKind::Comonotone => {
                let e: f64 = Exp1.sample(rng);
                out.fill(-e);
            }
            SamplerKind::Eta(s) => s.sample_into(rng, out)?,
            SamplerKind::Gaussian { common, own, rho } => {
                if self.dim == 2 && *rho < 0.0 {
                    let a: f64 = StandardNormal.sample(rng);
                    let b: f64 = StandardNormal.sample(rng);
                    out[0] = ln_norm_cdf(a);
                    out[1] = ln_norm_cdf(rho * a + (1.0 - rho * rho).sqrt() * b);
                } else if *rho < 0.0 {
                    // equicorrelation below zero: subtract the mean of i.i.d. normals
                    let d = self.dim as f64;
                    let z: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
                    let mean = z.iter().sum::<f64>() / d;
                    // Var(z_i - t mean) and Cov give rho for the t solving the quadratic
                    let t = shrink_factor(*rho, d);
                    let scale = (1.0 - 2.0 * t / d + t * t / d).sqrt();
                    for (o, zi) in out.iter_mut().zip(&z) {
                        *o = ln_norm_cdf((zi - t * mean) / scale);
                    }
                } else {
                    let w: f64 = StandardNormal.sample(rng);
                    for v in out.iter_mut() {
                        let e: f64 = StandardNormal.sample(rng);
                        *v = ln_norm_cdf(common * w + own * e);
                    }
                }
            }
        }
        for v in out.iter_mut() {
            // an exact zero would put U on the boundary
            if *v >= 0.0 {
                *v = -f64::MIN_POSITIVE;
            }
        }
        Ok(())
    }

    /// Fills `out` with one copula draw in `(0, 1)^d`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        self.sample_log_into(rng, out)?;
        for v in out.iter_mut() {
            *v = v.exp().clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        }
        Ok(())
    }
}

/// `t` with `corr(z_i - t zbar, z_j - t zbar) = rho` for i.i.d. standard
/// normals, `-1/(d-1) < rho < 0`.
fn shrink_factor(rho: f64, d: f64) -> f64 {
    // cov = (t^2 - 2t)/d, var = 1 + cov; solve cov = rho (1 + cov)
    let c = rho / (1.0 - rho);
    // t^2 - 2t - c d = 0, smaller root keeps the map invertible
    1.0 - (1.0 + c * d).sqrt()
}

/// One draw of `U` from `copula`.
pub fn sample_copula<R: Rng + ?Sized>(copula: &CopulaModel, rng: &mut R) -> Result<Vec<f64>> {
    let mut out = vec![0.0; copula.dim()];
    copula.sampler()?.sample_into(rng, &mut out)?;
    Ok(out)
}

/// `C(u)`; errors for the Gaussian copula above dimension two.
pub fn copula_cdf(copula: &CopulaModel, u: &[f64]) -> Result<f64> {
    copula.cdf(u)
}

/// Descriptor grammar:
///
/// ```text
/// copula := ("product" | "comonotone" | "gumbel:" f | "gaussian:" f) [":d=" n]
///         | "msc:" model
/// ```
impl FromStr for CopulaModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = s.trim();
        let lower = trimmed.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("msc:") {
            return Ok(Self::max_stable(rest.parse()?));
        }
        let mut tokens: Vec<&str> = lower.split(':').map(str::trim).collect();
        let mut dim = 2usize;
        if let Some(v) = tokens.last().and_then(|t| t.strip_prefix("d=")) {
            dim = v.parse().map_err(|_| err("dimension must be a positive integer"))?;
            tokens.pop();
        }
        let param = || -> Result<f64> {
            match tokens.as_slice() {
                [_, p] => p.parse::<f64>().map_err(|_| err("parameter is not a number")),
                [_] => Err(err("missing parameter")),
                _ => Err(err("too many fields")),
            }
        };
        let bare = || if tokens.len() == 1 { Ok(()) } else { Err(err("family takes no parameter")) };
        match tokens[0] {
            "product" | "indep" => {
                bare()?;
                Self::product(dim)
            }
            "comonotone" => {
                bare()?;
                Self::comonotone(dim)
            }
            "gumbel" => Self::gumbel(param()?, dim),
            "gaussian" => Self::gaussian(param()?, dim),
            "" => Err(err("empty descriptor")),
            _ => Err(err("unknown copula family")),
        }
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            CopulaFamily::Product => write!(f, "product:d={}", self.dim),
            CopulaFamily::Comonotone => write!(f, "comonotone:d={}", self.dim),
            CopulaFamily::GumbelHougaard { lambda } => write!(f, "gumbel:{lambda}:d={}", self.dim),
            CopulaFamily::Gaussian { rho } => write!(f, "gaussian:{rho}:d={}", self.dim),
            CopulaFamily::MaxStable(m) => write!(f, "msc:{m}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn c(s: &str) -> CopulaModel {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        for s in ["product", "comonotone:d=3", "gumbel:2.0", "gaussian:0.5", "msc:logistic:2.0:d=3", "msc:mo:0.3"] {
            let m = c(s);
            assert_eq!(m.to_string().parse::<CopulaModel>().unwrap(), m, "{s}");
        }
        assert_eq!(c("msc:logistic:2:d=3").dim(), 3);
        for bad in ["", "gumbel", "gumbel:1", "gaussian:1", "gaussian:-0.6:d=3", "product:2", "msc:foo", "clayton:2"] {
            assert!(bad.parse::<CopulaModel>().is_err(), "{bad}");
        }
    }

    #[test]
    fn cdf_examples() {
        assert_abs_diff_eq!(c("product").cdf(&[0.5, 0.5]).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c("comonotone").cdf(&[0.3, 0.8]).unwrap(), 0.3, epsilon = 1e-15);
        let g = (-(2.0f64).sqrt() * 2.0f64.ln()).exp();
        assert_abs_diff_eq!(c("gumbel:2").cdf(&[0.5, 0.5]).unwrap(), g, epsilon = 1e-15);
        assert_abs_diff_eq!(g, 0.375214, epsilon = 1e-6);
        assert_abs_diff_eq!(c("gaussian:0").cdf(&[0.3, 0.7]).unwrap(), 0.21, epsilon = 1e-12);
        assert_abs_diff_eq!(c("msc:comonotone").cdf(&[0.3, 0.8]).unwrap(), 0.3, epsilon = 1e-15);
        assert!(c("gaussian:0.3:d=3").cdf(&[0.5; 3]).is_err());
        assert!(c("product").cdf(&[1.5, 0.5]).is_err());
        assert_eq!(c("gumbel:2").cdf(&[0.0, 0.5]).unwrap(), 0.0);
        assert_abs_diff_eq!(c("gumbel:2").cdf(&[1.0, 0.5]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_survival_is_complement() {
        let g = c("gaussian:0.5");
        let lu = [(0.97f64).ln(), (0.99f64).ln()];
        let (cdf, surv) = g.cdf_log(&lu).unwrap();
        assert_abs_diff_eq!(cdf + surv, 1.0, epsilon = 1e-12);
        let (_, tiny) = g.cdf_log(&[-1e-12, -1e-12]).unwrap();
        assert!(tiny > 1e-12 && tiny < 2e-12, "{tiny}");
    }

    #[test]
    fn samples_inside_unit_cube() {
        let mut rng = rng_from_seed(3);
        for s in ["product:d=3", "comonotone", "gumbel:3", "gaussian:0.9", "gaussian:-0.4:d=3", "msc:mo:0.5:d=3"] {
            let sampler = c(s).sampler().unwrap();
            let mut u = vec![0.0; sampler.dim()];
            for _ in 0..5000 {
                sampler.sample_into(&mut rng, &mut u).unwrap();
                assert!(u.iter().all(|v| *v > 0.0 && *v < 1.0), "{s} {u:?}");
            }
        }
    }

    #[test]
    fn negative_equicorrelation_is_reproduced() {
        let d = 3.0;
        let rho = -0.3;
        let t = shrink_factor(rho, d);
        let cov = (t * t - 2.0 * t) / d;
        assert_abs_diff_eq!(cov / (1.0 + cov), rho, epsilon = 1e-12);
    }

    #[test]
    fn comonotone_coordinates_equal() {
        let mut rng = rng_from_seed(8);
        for _ in 0..100 {
            let u = sample_copula(&c("comonotone:d=4"), &mut rng).unwrap();
            assert!(u.iter().all(|v| *v == u[0]));
        }
    }

    #[test]
    fn gaussian_zero_matches_product_df() {
        let mut rng = rng_from_seed(12);
        let n = 100_000;
        let sampler = c("gaussian:0").sampler().unwrap();
        let mut u = [0.0; 2];
        let mut hits = 0;
        for _ in 0..n {
            sampler.sample_into(&mut rng, &mut u).unwrap();
            if u[0] <= 0.3 && u[1] <= 0.7 {
                hits += 1;
            }
        }
        let se = (0.21f64 * 0.79 / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - 0.21).abs() < 4.0 * se);
    }
}
