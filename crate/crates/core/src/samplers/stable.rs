use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};

use crate::error::{Error, Result};

/// Positive `alpha`-stable variate with Laplace transform `exp(-t^alpha)`.
///
/// Kanter's representation `S = (A(U) / E)^{(1-alpha)/alpha}` with
/// `A(u) = [sin(alpha u)^alpha sin((1-alpha) u)^(1-alpha) / sin u]^(1/(1-alpha))`,
/// `U ~ Unif(0, pi)` and `E ~ Exp(1)`.
pub fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "stability index must lie in (0, 1)",
        });
    }
    Ok(ln_positive_stable(alpha, rng).exp())
}

/// `ln S` for the variate of [`sample_positive_stable`]; `alpha` unchecked.
pub(crate) fn ln_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v: f64 = Open01.sample(rng);
    let u = PI * v;
    let e: f64 = Exp1.sample(rng);
    let beta = 1.0 - alpha;
    let num = alpha * (alpha * u).sin().ln() + beta * (beta * u).sin().ln() - u.sin().ln();
    num / alpha - beta / alpha * e.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::RunningStats;

    #[test]
    fn rejects_bad_index() {
        let mut rng = rng_from_seed(1);
        for a in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(sample_positive_stable(a, &mut rng).is_err());
        }
    }

    #[test]
    fn laplace_transform_half() {
        // alpha = 1/2 at t = 1: E exp(-S) = exp(-1)
        let mut rng = rng_from_seed(42);
        let mut s = RunningStats::new();
        for _ in 0..200_000 {
            s.push((-sample_positive_stable(0.5, &mut rng).unwrap()).exp());
        }
        assert!(s.estimate("lt", 42).within((-1.0f64).exp(), 4.0));
    }

    #[test]
    fn half_stable_matches_levy_tail() {
        // alpha = 1/2: S = 1 / (4 G) with G ~ Gamma(1/2), so P(S > 1) = P(N^2 < 1/2).
        let mut rng = rng_from_seed(7);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| sample_positive_stable(0.5, &mut rng).unwrap() > 1.0)
            .count() as f64;
        let p = 1.0 - 2.0 * crate::numeric::norm_cdf(-(0.5f64).sqrt());
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits / n as f64 - p).abs() < 4.0 * se);
    }
}
