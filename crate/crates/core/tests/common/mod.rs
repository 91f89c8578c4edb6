#![allow(dead_code)]

use proptest::prelude::*;
use recmax::DependenceModel;

/// Every named family with a parameter drawn from its valid range.
pub fn model(max_dim: usize) -> impl Strategy<Value = DependenceModel> {
    (0usize..6, 0.0f64..1.0, 1usize..=max_dim).prop_map(|(family, t, d)| match family {
        0 => DependenceModel::logistic(1.0 + 5.0 * t, d),
        1 => DependenceModel::weibull(0.3 + 4.7 * t, d),
        2 => DependenceModel::bernoulli(0.05 + 0.95 * t, d),
        3 => DependenceModel::marshall_olkin(t, d),
        4 => DependenceModel::independence(d),
        _ => DependenceModel::comonotone(d),
    }
    .unwrap())
}

/// A model paired with a point of its dimension.
pub fn model_and_point(max_dim: usize) -> impl Strategy<Value = (DependenceModel, Vec<f64>)> {
    model(max_dim).prop_flat_map(|m| {
        let d = m.dim();
        (Just(m), prop::collection::vec(-5.0f64..5.0, d))
    })
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub fn sum_abs(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn min_abs(x: &[f64]) -> f64 {
    x.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()))
}

/// Named models used by cross-route suites.
pub fn named(s: &str) -> DependenceModel {
    s.parse().unwrap()
}

/// Five evaluation points `x < 0` with `P(eta <= x)` spread over (0.1, 0.9).
pub fn df_points(d: usize) -> Vec<Vec<f64>> {
    [0.1, 0.3, 0.6, 1.0, 1.8]
        .iter()
        .map(|s| (0..d).map(|i| -s * (1.0 + 0.5 * (i % 3) as f64) / d as f64).collect())
        .collect()
}

/// Largest binomial z-score of the empirical df of `draw` against `exact`.
pub fn binomial_df_z(
    points: &[Vec<f64>],
    n: u64,
    seed: u64,
    exact: impl Fn(&[f64]) -> f64,
    mut draw: impl FnMut(&mut recmax::rng::SimRng, &mut [f64]),
) -> f64 {
    let d = points[0].len();
    let mut rng = recmax::rng::rng_from_seed(seed);
    let mut hits = vec![0u64; points.len()];
    let mut x = vec![0.0; d];
    for _ in 0..n {
        draw(&mut rng, &mut x);
        for (h, p) in hits.iter_mut().zip(points) {
            *h += x.iter().zip(p).all(|(a, b)| a <= b) as u64;
        }
    }
    points
        .iter()
        .zip(&hits)
        .map(|(p, &h)| {
            let q = exact(p);
            let se = (q * (1.0 - q) / n as f64).sqrt();
            (h as f64 / n as f64 - q).abs() / se
        })
        .fold(0.0, f64::max)
}

/// `P(eta <= x) = exp(-||x||_D)` on [`df_points`].
pub fn eta_df_z(model: &DependenceModel, n: u64, seed: u64) -> f64 {
    let sampler = recmax::EtaSampler::new(model).unwrap();
    binomial_df_z(
        &df_points(model.dim()),
        n,
        seed,
        |x| (-model.norm(x).unwrap()).exp(),
        |rng, out| sampler.sample_into(rng, out).unwrap(),
    )
}

/// `k max(eta_1, ..., eta_k)` has the law of `eta`.
pub fn max_stability_z(model: &DependenceModel, k: usize, n: u64, seed: u64) -> f64 {
    let sampler = recmax::EtaSampler::new(model).unwrap();
    let d = model.dim();
    let mut one = vec![0.0; d];
    binomial_df_z(
        &df_points(d),
        n,
        seed,
        |x| (-model.norm(x).unwrap()).exp(),
        |rng, out| {
            out.fill(f64::NEG_INFINITY);
            for _ in 0..k {
                sampler.sample_into(rng, &mut one).unwrap();
                for (o, v) in out.iter_mut().zip(&one) {
                    *o = o.max(*v);
                }
            }
            for o in out.iter_mut() {
                *o *= k as f64;
            }
        },
    )
}

/// Largest z-score of `E exp(-t S)` against `exp(-t^alpha)` over `ts`.
pub fn laplace_z(alpha: f64, ts: &[f64], n: u64, seed: u64) -> f64 {
    let mut rng = recmax::rng::rng_from_seed(seed);
    let mut stats = vec![recmax::stats::RunningStats::new(); ts.len()];
    for _ in 0..n {
        let s = recmax::samplers::sample_positive_stable(alpha, &mut rng).unwrap();
        for (st, t) in stats.iter_mut().zip(ts) {
            st.push((-t * s).exp());
        }
    }
    ts.iter()
        .zip(&stats)
        .map(|(t, st)| st.estimate("laplace", seed).z_score((-t.powf(alpha)).exp()))
        .fold(0.0, f64::max)
}

/// Exact max-stable models in the sampler suites.
pub const EXACT_ETA_MODELS: [&str; 9] = [
    "logistic:1.5:d=2",
    "logistic:2:d=3",
    "logistic:4:d=5",
    "mo:0.5:d=3",
    "bernoulli:0.5:d=2",
    "bernoulli:0.3:d=3",
    "indep:d=3",
    "comonotone:d=2",
    "logistic:2:d=1",
];
