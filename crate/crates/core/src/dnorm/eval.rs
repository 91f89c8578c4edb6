//! Evaluation of `||x||_D` and `|||x|||_D = E min_i |x_i| Z_i`.

use super::generator::Generator;
use super::model::{CustomGenerator, DependenceModel, Family};
use crate::error::{check_dim, Error, Result};
use crate::rng::rng_from_seed;
use crate::stats::CompensatedSum;

/// Largest dimension accepted by the `2^d`-term inclusion-exclusion routes.
pub const MAX_IE_DIM: usize = 20;

fn check_ie_dim(d: usize) -> Result<()> {
    if d > MAX_IE_DIM {
        Err(Error::TooManyCoordinates { d, max: MAX_IE_DIM })
    } else {
        Ok(())
    }
}

/// `sum_{T != {}} (-1)^{|T|-1} g(sum_{i in T} v_i)` with compensated
/// accumulation. Subset sums are built by one addition from the subset
/// without its lowest element.
fn alternating_subset_sum(values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let n = values.len();
    let mut sums = vec![0.0f64; 1usize << n];
    let mut acc = CompensatedSum::new();
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        let s = sums[mask & (mask - 1)] + values[low];
        sums[mask] = s;
        let term = g(s);
        if mask.count_ones() % 2 == 1 {
            acc.add(term);
        } else {
            acc.add(-term);
        }
    }
    acc.value()
}

fn abs_vec(x: &[f64]) -> impl Iterator<Item = f64> + '_ {
    x.iter().map(|v| v.abs())
}

fn max_abs(x: &[f64]) -> f64 {
    abs_vec(x).fold(0.0, f64::max)
}

fn min_abs(x: &[f64]) -> f64 {
    abs_vec(x).fold(f64::INFINITY, f64::min)
}

/// `(sum |x_i|^p)^(1/p)`, scaled by the largest entry against overflow.
pub(crate) fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = max_abs(x);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let s: f64 = abs_vec(x).map(|a| (a / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// Closed-form Weibull-model dual `(sum |x_i|^-alpha)^(-1/alpha)` (0 if any
/// coordinate vanishes).
fn weibull_dual(x: &[f64], alpha: f64) -> f64 {
    let m = min_abs(x);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = abs_vec(x).map(|a| (a / m).powf(-alpha)).sum();
    m * s.powf(-1.0 / alpha)
}

fn custom_mean(g: &CustomGenerator, x: &[f64], reduce: fn(f64, f64) -> f64, init: f64) -> f64 {
    let gen = Generator::Custom(g.clone());
    let mut rng = rng_from_seed(g.eval_seed());
    let mut z = vec![0.0; x.len()];
    let mut acc = CompensatedSum::new();
    for _ in 0..g.eval_samples() {
        gen.sample_into(&mut rng, &mut z);
        acc.add(x.iter().zip(&z).map(|(xi, zi)| xi.abs() * zi).fold(init, reduce));
    }
    acc.value() / g.eval_samples() as f64
}

impl DependenceModel {
    /// `||x||_D`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        if self.dim() == 1 {
            return Ok(x[0].abs());
        }
        Ok(match self.family() {
            Family::Logistic { lambda } => lp_norm(x, *lambda),
            Family::Independence => abs_vec(x).collect::<CompensatedSum>().value(),
            Family::Comonotone => max_abs(x),
            Family::MarshallOlkin { gamma } => {
                let sum = abs_vec(x).collect::<CompensatedSum>().value();
                gamma * max_abs(x) + (1.0 - gamma) * sum
            }
            Family::Bernoulli { beta } => {
                // The largest active coordinate is the k-th largest overall
                // with probability beta (1 - beta)^(k-1).
                let mut a: Vec<f64> = abs_vec(x).collect();
                a.sort_by(|p, q| q.total_cmp(p));
                let mut w = 1.0;
                let mut acc = CompensatedSum::new();
                for v in a {
                    acc.add(w * v);
                    w *= 1.0 - beta;
                }
                acc.value()
            }
            Family::WeibullModel { alpha } => {
                let nonzero: Vec<f64> = abs_vec(x).filter(|&a| a > 0.0).collect();
                if nonzero.is_empty() {
                    return Ok(0.0);
                }
                check_ie_dim(nonzero.len())?;
                let m = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
                let v: Vec<f64> = nonzero.iter().map(|a| (a / m).powf(-alpha)).collect();
                let alpha = *alpha;
                m * alternating_subset_sum(&v, |s| s.powf(-1.0 / alpha))
            }
            Family::Custom(g) => custom_mean(g, x, f64::max, 0.0),
        })
    }

    /// `|||x|||_D = E min_i |x_i| Z_i`. Zero whenever a coordinate is zero.
    pub fn dual(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let m = min_abs(x);
        if m == 0.0 {
            return Ok(0.0);
        }
        let d = self.dim();
        if d == 1 {
            return Ok(m);
        }
        Ok(match self.family() {
            Family::Independence => 0.0,
            Family::Comonotone => m,
            Family::WeibullModel { alpha } => weibull_dual(x, *alpha),
            Family::Bernoulli { beta } => beta.powi(d as i32 - 1) * m,
            Family::MarshallOlkin { gamma } => gamma * m,
            Family::Logistic { lambda } => {
                check_ie_dim(d)?;
                let top = max_abs(x);
                let v: Vec<f64> = abs_vec(x).map(|a| (a / top).powf(*lambda)).collect();
                let inv = 1.0 / lambda;
                (top * alternating_subset_sum(&v, |s| s.powf(inv))).max(0.0)
            }
            Family::Custom(g) => custom_mean(g, x, f64::min, f64::INFINITY),
        })
    }

    /// Inclusion-exclusion oracle `sum_T (-1)^{|T|-1} ||x_T||_{D,T}` for the dual,
    /// evaluated through [`margin`](Self::margin) and [`norm`](Self::norm).
    pub fn dual_from_norm_ie(&self, x: &[f64]) -> Result<f64> {
        self.ie_over_margins(x, |m, xt| m.norm(xt))
    }

    /// Mirror of [`dual_from_norm_ie`](Self::dual_from_norm_ie):
    /// `sum_T (-1)^{|T|-1} |||x_T|||_{D,T}`.
    pub fn norm_from_dual_ie(&self, x: &[f64]) -> Result<f64> {
        self.ie_over_margins(x, |m, xt| m.dual(xt))
    }

    fn ie_over_margins(
        &self,
        x: &[f64],
        f: impl Fn(&DependenceModel, &[f64]) -> Result<f64>,
    ) -> Result<f64> {
        let d = self.dim();
        check_dim(d, x.len())?;
        check_ie_dim(d)?;
        let mut acc = CompensatedSum::new();
        let mut subset = Vec::with_capacity(d);
        let mut xt = Vec::with_capacity(d);
        for mask in 1u32..(1 << d) {
            subset.clear();
            xt.clear();
            for i in 0..d {
                if mask & (1 << i) != 0 {
                    subset.push(i);
                    xt.push(x[i]);
                }
            }
            let term = f(&self.margin(&subset)?, &xt)?;
            if subset.len() % 2 == 1 {
                acc.add(term);
            } else {
                acc.add(-term);
            }
        }
        Ok(acc.value())
    }
}

/// Monte Carlo mean of `max_i |x_i| Z_i` and `min_i |x_i| Z_i` over `n`
/// generator draws, with standard errors. Used by consistency tests.
pub fn generator_moments(
    model: &DependenceModel,
    x: &[f64],
    n: u64,
    seed: u64,
) -> Result<[(f64, f64); 2]> {
    check_dim(model.dim(), x.len())?;
    let gen = Generator::new(model);
    let mut rng = rng_from_seed(seed);
    let mut z = vec![0.0; x.len()];
    let mut max_s = crate::stats::RunningStats::new();
    let mut min_s = crate::stats::RunningStats::new();
    for _ in 0..n {
        gen.sample_into(&mut rng, &mut z);
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        for (xi, zi) in x.iter().zip(&z) {
            let v = xi.abs() * zi;
            hi = hi.max(v);
            lo = lo.min(v);
        }
        max_s.push(hi);
        min_s.push(lo);
    }
    Ok([
        (max_s.mean(), max_s.std_error()),
        (min_s.mean(), min_s.std_error()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(s: &str) -> DependenceModel {
        s.parse().unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_abs_diff_eq!(m("logistic:2").norm(&[-3.0, -4.0]).unwrap(), 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m("mo:0.5").norm(&[-1.0, -1.0]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m("bernoulli:0.5").norm(&[-1.0, -1.0]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m("weibull:1").norm(&[-1.0, -1.0]).unwrap(), 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m("indep").norm(&[-1.0, -2.0]).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn bernoulli_norm_matches_subset_sum() {
        // sum_T beta^{|T|-1} (1-beta)^{d-|T|} max_{i in T} |x_i|
        let x = [-0.3f64, 2.0, -1.1, 0.7];
        for &beta in &[0.2f64, 0.5, 0.9, 1.0] {
            let d = x.len();
            let mut direct = 0.0;
            for mask in 1u32..(1 << d) {
                let k = mask.count_ones() as i32;
                let mx = (0..d)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| x[i].abs())
                    .fold(0.0, f64::max);
                direct += beta.powi(k - 1) * (1.0 - beta).powi(d as i32 - k) * mx;
            }
            let model = DependenceModel::bernoulli(beta, d).unwrap();
            assert_abs_diff_eq!(model.norm(&x).unwrap(), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn dual_examples() {
        assert_eq!(m("comonotone").dual(&[-2.0, -5.0]).unwrap(), 2.0);
        assert_eq!(m("indep:d=3").dual(&[-1.0, -4.0, -2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            m("logistic:2").dual(&[-1.0, -1.0]).unwrap(),
            2.0 - 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(m("weibull:1").dual(&[-2.0, -2.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m("bernoulli:0.5").dual(&[-1.0, -1.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m("mo:0.3:d=3").dual(&[-1.0, -2.0, -3.0]).unwrap(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn dual_zero_coordinate_is_zero() {
        for s in ["logistic:3:d=3", "weibull:0.7:d=3", "bernoulli:0.4:d=3", "mo:0.2:d=3", "comonotone:d=3"] {
            assert_eq!(m(s).dual(&[-1.0, 0.0, -2.0]).unwrap(), 0.0, "{s}");
        }
    }

    #[test]
    fn univariate_margins_are_absolute_value() {
        for s in ["logistic:2:d=1", "weibull:0.5:d=1", "bernoulli:0.3:d=1", "mo:0.6:d=1", "indep:d=1", "comonotone:d=1"] {
            let model = m(s);
            assert_eq!(model.norm(&[-2.5]).unwrap(), 2.5, "{s}");
            assert_eq!(model.dual(&[-2.5]).unwrap(), 2.5, "{s}");
        }
    }

    #[test]
    fn ie_examples() {
        assert_abs_diff_eq!(m("comonotone").dual_from_norm_ie(&[-1.0, -3.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m("bernoulli:0.5").dual_from_norm_ie(&[-1.0, -1.0]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            m("logistic:2").dual_from_norm_ie(&[-1.0, -1.0]).unwrap(),
            2.0 - 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(m("weibull:1").norm_from_dual_ie(&[-1.0, -1.0]).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            m("comonotone:d=3").norm_from_dual_ie(&[-1.0, -1.0, -1.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(m("indep").norm_from_dual_ie(&[-1.0, -2.0]).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(m("logistic:2").norm(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(m("mo:0.5:d=3").dual(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        let big = m("weibull:1:d=21");
        assert!(matches!(big.norm(&[-1.0; 21]), Err(Error::TooManyCoordinates { .. })));
        assert!(matches!(
            m("logistic:2:d=21").dual_from_norm_ie(&[-1.0; 21]),
            Err(Error::TooManyCoordinates { .. })
        ));
    }

    #[test]
    fn weibull_norm_drops_zero_coordinates() {
        let w3 = m("weibull:1.3:d=3");
        let w2 = m("weibull:1.3:d=2");
        assert_abs_diff_eq!(
            w3.norm(&[-1.0, 0.0, -2.0]).unwrap(),
            w2.norm(&[-1.0, -2.0]).unwrap(),
            epsilon = 1e-14
        );
        assert_eq!(w3.norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn logistic_overflow_safe() {
        let v = m("logistic:50").norm(&[1e300, 1e300]).unwrap();
        assert!(v.is_finite() && v >= 1e300);
    }
}
