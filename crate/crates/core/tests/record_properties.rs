mod common;

use proptest::prelude::*;
use recmax::estimators::{concurrence_empirical, record_prob_maxstable_exact, Mc};
use recmax::records::{
    champion_index, conditional_gap_law_check, pit_transform, scan, stochastic_monotonicity_check, Margin,
};
use recmax::{CopulaModel, Error, Parallelism};

fn stream() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=8).prop_flat_map(|d| {
        // coarse grid so that ties occur
        prop::collection::vec(prop::collection::vec((-12i32..=12).prop_map(|k| k as f64 / 4.0), d), 1..60)
    })
}

fn champion_outcome(batch: &[Vec<f64>]) -> Result<Option<u64>, String> {
    champion_index(batch).map_err(|e| match e {
        Error::ChampionTie { .. } => "tie".to_string(),
        other => other.to_string(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn records_invariant_under_increasing_transforms(rows in stream(), shift in -3.0f64..3.0) {
        let base = scan(&rows).unwrap();
        let transforms: [&dyn Fn(f64) -> f64; 3] = [
            &|x: f64| x.exp(),
            &|x: f64| x * x * x + 3.0 * x + shift,
            &|x: f64| (x / 4.0).atan(),
        ];
        for f in transforms {
            let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| f(v)).collect()).collect();
            prop_assert_eq!(&scan(&moved).unwrap(), &base);
            prop_assert_eq!(champion_outcome(&moved), champion_outcome(&rows));
        }
        let pit = pit_transform(&rows, &[Margin::Normal { mean: shift, sd: 2.0 }]).unwrap();
        prop_assert_eq!(&scan(&pit).unwrap(), &base);
    }

    #[test]
    fn scan_champion_matches_brute_force(rows in stream()) {
        let s = scan(&rows).unwrap();
        match champion_outcome(&rows) {
            Ok(c) => prop_assert_eq!(s.champion_index, c),
            Err(_) => prop_assert_eq!(s.champion_index, None),
        }
        prop_assert!(s.simple_records >= s.complete_records);
        prop_assert!(s.complete_records >= 1);
        prop_assert_eq!(s.gaps.len() + 1, s.simple_record_times.len());
        if let Some(c) = s.champion_index {
            prop_assert_eq!(s.complete_record_times.last().copied(), Some(c));
        }
    }

    #[test]
    fn one_dimension_reduces_to_univariate_records(xs in prop::collection::vec(-100.0f64..100.0, 1..80)) {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let s = scan(&rows).unwrap();
        prop_assert_eq!(&s.simple_record_times, &s.complete_record_times);
        let mut best = f64::NEG_INFINITY;
        let times: Vec<u64> = xs.iter().enumerate().filter_map(|(i, &x)| {
            (x > best).then(|| { best = x; i as u64 + 1 })
        }).collect();
        prop_assert_eq!(&s.simple_record_times, &times);
        let top = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if xs.iter().filter(|&&x| x == top).count() == 1 {
            prop_assert_eq!(s.champion_index, times.last().copied());
        }
    }
}

#[test]
fn hand_enumerated_streams() {
    let s = scan([[0.2, 0.2], [0.5, 0.1], [0.6, 0.7]]).unwrap();
    assert_eq!(s.simple_record_times, vec![1, 2, 3]);
    assert_eq!(s.complete_record_times, vec![1, 3]);
    assert_eq!(s.champion_index, Some(3));
    let s = scan([[0.5, 0.1], [0.1, 0.5]]).unwrap();
    assert_eq!(s.simple_record_times, vec![1, 2]);
    assert_eq!(s.complete_record_times, vec![1]);
    assert_eq!(s.champion_index, None);
}

/// `pibar_2` and `piunder_2` for the product copula are `1/4` and `3/4`.
#[test]
fn second_observation_record_probabilities() {
    let sampler = CopulaModel::product(2).unwrap().sampler().unwrap();
    let mut rng = recmax::rng::rng_from_seed(12);
    let n = 200_000u64;
    let (mut simple, mut complete) = (0u64, 0u64);
    let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
    for _ in 0..n {
        sampler.sample_into(&mut rng, &mut a).unwrap();
        sampler.sample_into(&mut rng, &mut b).unwrap();
        simple += (b[0] > a[0] || b[1] > a[1]) as u64;
        complete += (b[0] > a[0] && b[1] > a[1]) as u64;
    }
    let se = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
    assert!((complete as f64 / n as f64 - 0.25).abs() <= 4.0 * se(0.25));
    assert!((simple as f64 / n as f64 - 0.75).abs() <= 4.0 * se(0.75));
}

/// For max-stable data `pibar_2 = E exp(-||eta||_D)` and, by symmetry,
/// `piunder_2 = 1 - pibar_2`.
#[test]
fn max_stable_second_observation() {
    let model = common::named("mo:0.4:d=3");
    let exact = record_prob_maxstable_exact(&model, 2, &Mc::new(200_000, 3)).unwrap();
    let sampler = CopulaModel::max_stable(model).sampler().unwrap();
    let mut rng = recmax::rng::rng_from_seed(13);
    let n = 200_000u64;
    let (mut simple, mut complete) = (0u64, 0u64);
    let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
    for _ in 0..n {
        sampler.sample_log_into(&mut rng, &mut a).unwrap();
        sampler.sample_log_into(&mut rng, &mut b).unwrap();
        simple += b.iter().zip(&a).any(|(x, y)| x > y) as u64;
        complete += b.iter().zip(&a).all(|(x, y)| x > y) as u64;
    }
    let pc = complete as f64 / n as f64;
    let ps = simple as f64 / n as f64;
    let se = (pc * (1.0 - pc) / n as f64 + exact.std_error.powi(2)).sqrt();
    assert!((pc - exact.value).abs() <= 4.0 * se, "{pc} vs {exact:?}");
    assert!((ps - (1.0 - exact.value)).abs() <= 4.0 * se, "{ps} vs {exact:?}");
}

#[test]
fn champion_probability_equals_n_times_pibar() {
    for (i, c) in ["gumbel:2", "product:d=2", "msc:mo:0.5:d=3"].iter().enumerate() {
        let copula: CopulaModel = c.parse().unwrap();
        let r = concurrence_empirical(&copula, 20, &Mc::new(40_000, 50 + i as u64)).unwrap();
        assert!(r.p_n.agrees_with(&r.n_pi_bar, 4.0, 0.0), "{c}: {r:?}");
    }
}

#[test]
fn geometric_gap_law_holds() {
    for c in ["product:d=2", "comonotone:d=2", "gaussian:0.5"] {
        let copula: CopulaModel = c.parse().unwrap();
        let r = conditional_gap_law_check(&copula, 6, 20_000, 1_000_000, 4, &Parallelism::new(2)).unwrap();
        assert!(r.passed, "{c}: {:?}", r.bins.iter().map(|b| b.z).collect::<Vec<_>>());
    }
}

#[test]
fn record_gaps_grow_stochastically() {
    let copula: CopulaModel = "product:d=2".parse().unwrap();
    let r = stochastic_monotonicity_check(&copula, 4, 20_000, 50, 100_000, 8, &Parallelism::new(2)).unwrap();
    assert!(r.passed, "{r:?}");
}
