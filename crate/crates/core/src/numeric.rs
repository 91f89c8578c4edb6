//! Special functions and quadrature.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use statrs::function::erf::erfc_inv;

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Standard normal df.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile; `±inf` at the endpoints.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        let x = -SQRT_2 * erfc_inv(2.0 * p);
        // one Halley step, measured in the smaller tail
        let err = if p < 0.5 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if pdf > 0.0 && pdf.is_finite() {
            let u = err / pdf;
            x - u / (1.0 + 0.5 * x * u)
        } else {
            x
        }
    }
}

/// Bivariate standard normal df `P(X <= h, Y <= k)` with correlation `rho`.
///
/// Uses `Phi(h) Phi(k) + (1/2pi) int_0^{asin rho} exp(-(h^2 - 2hk sin t + k^2) / (2 cos^2 t)) dt`,
/// integrated by adaptive Gauss-Kronrod to an absolute tolerance of 1e-14.
pub fn bivariate_norm_cdf(h: f64, k: f64, rho: f64) -> f64 {
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return 0.0;
    }
    if h == f64::INFINITY {
        return norm_cdf(k);
    }
    if k == f64::INFINITY {
        return norm_cdf(h);
    }
    let base = norm_cdf(h) * norm_cdf(k);
    if rho == 0.0 {
        return base;
    }
    let upper = rho.clamp(-1.0, 1.0).asin();
    let integrand = |t: f64| {
        let c = t.cos();
        let c2 = c * c;
        if c2 <= 0.0 {
            // limit as |t| -> pi/2 is 0 unless h = +-k
            let q = if t > 0.0 { h - k } else { h + k };
            return if q == 0.0 { (-h * h / (1.0 + t.sin().abs())).exp() } else { 0.0 };
        }
        (-(h * h - 2.0 * h * k * t.sin() + k * k) / (2.0 * c2)).exp()
    };
    let integral = integrate(integrand, 0.0, upper, 1e-14);
    (base + integral / (2.0 * PI)).clamp(0.0, 1.0)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth - 1) + recurse(f, mid, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(&f, a, b, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_cdf_and_quantile_agree() {
        for &p in &[1e-10, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert_abs_diff_eq!(norm_cdf(norm_quantile(p)), p, epsilon = 1e-14 + 1e-12 * p);
        }
        assert_abs_diff_eq!(norm_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-14);
    }

    #[test]
    fn bivariate_at_origin_is_arcsine_law() {
        for &rho in &[-0.95f64, -0.5, 0.1, 0.5, 0.9, 0.999] {
            let exact = 0.25 + rho.asin() / (2.0 * PI);
            assert_abs_diff_eq!(bivariate_norm_cdf(0.0, 0.0, rho), exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn bivariate_independence_and_limits() {
        assert_abs_diff_eq!(
            bivariate_norm_cdf(0.3, -1.2, 0.0),
            norm_cdf(0.3) * norm_cdf(-1.2),
            epsilon = 1e-15
        );
        assert_eq!(bivariate_norm_cdf(f64::NEG_INFINITY, 1.0, 0.4), 0.0);
        assert_abs_diff_eq!(bivariate_norm_cdf(f64::INFINITY, 0.7, 0.4), norm_cdf(0.7), epsilon = 1e-15);
    }

    #[test]
    fn bivariate_symmetry() {
        // P(X <= h, Y <= k) with rho equals Phi(h) - P(X <= h, -Y <= -k) with -rho
        let (h, k, rho) = (0.4, -0.3, 0.6);
        let lhs = bivariate_norm_cdf(h, k, rho);
        let rhs = norm_cdf(h) - bivariate_norm_cdf(h, -k, -rho);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn integrate_polynomial_and_exp() {
        assert_abs_diff_eq!(integrate(|x| x * x, 0.0, 3.0, 1e-14), 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(integrate(|x| (-x).exp(), 0.0, 20.0, 1e-14), 1.0 - (-20.0f64).exp(), epsilon = 1e-12);
    }
}
