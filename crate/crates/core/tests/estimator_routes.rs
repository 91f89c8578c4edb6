mod common;

use common::named;
use recmax::estimators::*;
use recmax::{CopulaModel, CustomGenerator, DependenceModel, Estimate};

fn mc(n: u64, seed: u64) -> Mc {
    Mc::new(n, seed)
}

fn closed_concurrence(m: &DependenceModel) -> f64 {
    m.concurrence_closed_form().unwrap()
}

#[test]
fn three_concurrence_routes_agree() {
    let models = ["logistic:1.5", "logistic:2", "mo:0.3", "mo:0.7", "bernoulli:0.5", "comonotone"];
    for (i, s) in models.iter().enumerate() {
        for d in [2, 3] {
            let m = named(&format!("{s}:d={d}"));
            let seed = 10 * i as u64 + d as u64;
            let g = concurrence_via_generator(&m, &mc(100_000, seed)).unwrap();
            let e = concurrence_via_eta(&m, &mc(100_000, seed + 1000)).unwrap();
            let emp = concurrence_empirical(&CopulaModel::max_stable(m.clone()), 1000, &mc(2000, seed + 2000)).unwrap();
            assert!(g.agrees_with(&e, 4.0, 0.0), "{m}: {g:?} {e:?}");
            assert!(g.agrees_with(&emp.p_n, 4.0, 0.02), "{m}: {g:?} {:?}", emp.p_n);
            assert!(e.agrees_with(&emp.p_n, 4.0, 0.02), "{m}: {e:?} {:?}", emp.p_n);
            let exact = closed_concurrence(&m);
            assert!(g.within(exact, 4.0) && e.within(exact, 4.0), "{m}: exact {exact}");
        }
    }
}

#[test]
fn logistic_concurrence_is_monotone() {
    let lambdas = [1.2, 1.5, 2.0, 3.0, 6.0];
    for d in 2..=6 {
        let v: Vec<f64> = lambdas.iter().map(|&l| closed_concurrence(&DependenceModel::logistic(l, d).unwrap())).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]), "increasing in lambda at d={d}: {v:?}");
    }
    for &l in &lambdas {
        let v: Vec<f64> = (2..=6).map(|d| closed_concurrence(&DependenceModel::logistic(l, d).unwrap())).collect();
        assert!(v.windows(2).all(|w| w[0] > w[1]), "decreasing in d at lambda={l}: {v:?}");
    }
}

#[test]
fn bernoulli_concurrence_uses_conditioned_form() {
    for (beta, d) in [(0.3, 2), (0.5, 2), (0.5, 3), (1.0, 3)] {
        let m = DependenceModel::bernoulli(beta, d).unwrap();
        let exact = beta.powi(d as i32) / (1.0 - (1.0 - beta).powi(d as i32));
        let g = concurrence_via_generator(&m, &mc(100_000, 1)).unwrap();
        assert!(g.within(exact, 4.0), "beta={beta} d={d}: {g:?} vs {exact}");
    }
}

#[test]
fn custom_generator_route_is_labelled() {
    // Marshall-Olkin generator written out by hand
    let gamma = 0.5;
    let custom = CustomGenerator::new("mo-by-hand", 2, move |rng, out| {
        use rand::Rng;
        if rng.random::<f64>() < gamma {
            out.fill(1.0);
        } else {
            out.fill(0.0);
            out[rng.random_range(0..2)] = 2.0;
        }
    })
    .with_bound(2.0);
    let m = DependenceModel::custom(custom).unwrap();
    let g = concurrence_via_generator(&m, &mc(20_000, 4)).unwrap();
    assert!(g.method.contains(&format!("inner={NESTED_INNER_SAMPLES}")), "{}", g.method);
    assert!(g.agrees_with(&Estimate::exact(1.0 / 3.0, 0, "", 0), 4.0, 0.03), "{g:?}");
}

#[test]
fn survival_and_df_grids_are_bounded_and_monotone() {
    let grid: Vec<Vec<f64>> = [3.0, 1.5, 0.8, 0.4, 0.1].iter().map(|s| vec![-s, -0.5 * s]).collect();
    for s in ["logistic:2", "mo:0.3", "bernoulli:0.5"] {
        let m = named(s);
        let hbar = champion_survival_grid(&m, &grid, &mc(40_000, 5)).unwrap();
        let h = simple_record_limit_df_grid(&m, &grid, &mc(40_000, 6)).unwrap();
        for w in hbar.windows(2) {
            // x grows along the grid, so the survival falls
            let slack = 4.0 * (w[0].value.std_error + w[1].value.std_error);
            assert!(w[1].value.value <= w[0].value.value + slack, "{s}");
        }
        for w in h.windows(2) {
            let slack = 4.0 * (w[0].std_error + w[1].std_error);
            assert!(w[1].value + slack >= w[0].value, "{s}");
        }
        for e in hbar.iter().map(|c| &c.value).chain(&h) {
            assert!(e.value >= -4.0 * e.std_error && e.value <= 1.0 + 4.0 * e.std_error, "{s}: {e:?}");
        }
        for c in &hbar {
            let eta = c.eta.as_ref().unwrap();
            assert!(eta.agrees_with(&c.generator, 4.0, 0.0), "{s}: {c:?}");
        }
    }
}

#[test]
fn simple_record_df_special_cases_on_grids() {
    let indep = named("indep:d=3");
    let como = named("comonotone:d=3");
    for s in [0.2, 0.7, 1.5] {
        let x = vec![-s, -2.0 * s, -0.5 * s];
        let h1: f64 = x.iter().map(|v: &f64| v.exp()).sum::<f64>() / 3.0;
        let e = simple_record_limit_df(&indep, &x, &mc(50_000, 8)).unwrap();
        assert!(e.within(h1, 4.0), "{e:?} vs {h1}");
        let hinf = (-2.0 * s).exp();
        let e = simple_record_limit_df(&como, &x, &mc(50_000, 9)).unwrap();
        assert!(e.within(hinf, 4.0), "{e:?} vs {hinf}");
    }
}

#[test]
fn marshall_olkin_survival_matches_closed_form() {
    let gamma = 0.3;
    let m = DependenceModel::marshall_olkin(gamma, 3).unwrap();
    let norm_one = gamma + 3.0 * (1.0 - gamma);
    for s in [0.05, 0.2, 0.5, 1.0] {
        let x = vec![-s, -2.0 * s, -1.5 * s];
        let exact = 1.0 - (norm_one * -s).exp();
        let r = champion_survival(&m, &x, &mc(40_000, 10)).unwrap();
        assert!(r.value.within(exact, 4.0), "{r:?} vs {exact}");
    }
}

#[test]
fn comonotone_champion_survival() {
    // max(eta, x) on equal coordinates: E min(|eta_1|, 1) = 1 - exp(-1)
    let r = champion_survival(&named("comonotone"), &[-1.0, -1.0], &mc(100_000, 3)).unwrap();
    let exact = 1.0 - (-1.0f64).exp();
    assert!(r.value.within(exact, 4.0), "{r:?}");
}

#[test]
fn growth_for_comonotone_matches_one_dimension() {
    let t3 = expected_records_growth(&"comonotone:d=3".parse().unwrap(), &[10, 100, 1000], &mc(2000, 3)).unwrap();
    let t1 = expected_records_growth(&"product:d=1".parse().unwrap(), &[10, 100, 1000], &mc(2000, 3)).unwrap();
    for (a, b) in t3.rows.iter().zip(&t1.rows) {
        assert_eq!(a.mean_simple, a.mean_complete);
        let h: f64 = (1..=a.k).map(|i| 1.0 / i as f64).sum();
        assert!((a.mean_simple - h).abs() <= 4.0 * a.se_simple, "{a:?}");
        assert!((b.mean_simple - h).abs() <= 4.0 * b.se_simple, "{b:?}");
    }
}

#[test]
fn complete_record_growth_matches_exact_sum() {
    let m = named("logistic:2");
    let t = expected_records_growth(&CopulaModel::max_stable(m.clone()), &[100], &mc(4000, 17)).unwrap();
    let exact = expected_complete_records_exact(&m, 100, &mc(100_000, 18)).unwrap();
    let row = &t.rows[0];
    let se = (row.se_complete.powi(2) + exact.std_error.powi(2)).sqrt();
    assert!((row.mean_complete - exact.value).abs() <= 4.0 * se, "{row:?} vs {exact:?}");
}

#[test]
fn second_record_routes_agree() {
    let c: CopulaModel = "product".parse().unwrap();
    let r = second_record_df(&c, &[0.8, 0.8], &mc(100_000, 19), 1_000_000).unwrap();
    let f = r.formula.unwrap();
    assert!(f.agrees_with(&r.direct, 4.0, 0.0), "{f:?} {:?}", r.direct);
    let g: CopulaModel = "gumbel:2".parse().unwrap();
    let r = second_record_df(&g, &[0.9, 0.7], &mc(100_000, 20), 1_000_000).unwrap();
    let f = r.formula.unwrap();
    assert!(f.agrees_with(&r.direct, 4.0, 0.0) || r.censored > 0, "{f:?} {:?}", r.direct);
}

#[test]
fn gaussian_chi_bar_near_rho() {
    let rows = chi_bar(&ChiBarSource::Copula("gaussian:0.5".parse().unwrap()), &[0.99], &mc(1_000_000, 21)).unwrap();
    let r = &rows[0];
    assert!(r.warning.is_none());
    let exact = r.exact.unwrap();
    assert!((r.chi_bar - exact).abs() <= 4.0 * r.std_error, "{r:?}");
    let prod = chi_bar(&ChiBarSource::Copula("product".parse().unwrap()), &[0.9], &mc(200_000, 22)).unwrap();
    assert!(prod[0].chi_bar.abs() <= 4.0 * prod[0].std_error);
}

fn worker_invariant<T: PartialEq + std::fmt::Debug>(f: impl Fn(Mc) -> T) {
    let base = f(Mc::new(30_000, 99).with_workers(1));
    for w in [2, 3, 8] {
        assert_eq!(f(Mc::new(30_000, 99).with_workers(w)), base, "workers = {w}");
    }
}

#[test]
fn every_estimator_is_deterministic_across_workers() {
    let m = named("logistic:2:d=3");
    let c = CopulaModel::max_stable(named("mo:0.5"));
    worker_invariant(|mc| concurrence_via_generator(&m, &mc).unwrap());
    worker_invariant(|mc| concurrence_via_eta(&m, &mc).unwrap());
    worker_invariant(|mc| concurrence_empirical(&c, 50, &mc.with_samples(2000)).unwrap());
    worker_invariant(|mc| record_prob_maxstable_exact(&m, 7, &mc).unwrap());
    worker_invariant(|mc| simple_record_limit(&m, SimpleLimitRoute::GeneratorIe, &mc).unwrap());
    worker_invariant(|mc| champion_survival(&m, &[-0.3, -0.2, -1.0], &mc).unwrap());
    worker_invariant(|mc| simple_record_limit_df(&m, &[-0.3, -0.2, -1.0], &mc).unwrap());
    worker_invariant(|mc| simple_record_df_empirical(&c, &[-1.0, -1.0], 100, &mc.with_samples(2000)).unwrap());
    worker_invariant(|mc| expected_records_growth(&c, &[10, 50], &mc.with_samples(500)).unwrap());
    worker_invariant(|mc| expected_n2(&c, &mc, 1000).unwrap());
    worker_invariant(|mc| second_record_df(&c, &[0.5, 0.6], &mc, 10_000).unwrap());
    worker_invariant(|mc| chi_bar(&ChiBarSource::Copula(c.clone()), &[0.9], &mc).unwrap());
}

fn se_ratio(f: impl Fn(Mc) -> Estimate) -> f64 {
    let small = f(Mc::new(2_000, 5));
    let large = f(Mc::new(200_000, 6));
    small.std_error / large.std_error
}

#[test]
fn standard_errors_shrink_at_root_n() {
    let m = named("logistic:2:d=3");
    let mo = named("mo:0.5");
    let c: CopulaModel = "product".parse().unwrap();
    let ratios = [
        ("generator", se_ratio(|mc| concurrence_via_generator(&m, &mc).unwrap())),
        ("eta", se_ratio(|mc| concurrence_via_eta(&m, &mc).unwrap())),
        ("record-prob", se_ratio(|mc| record_prob_maxstable_exact(&m, 5, &mc).unwrap())),
        ("simple-limit", se_ratio(|mc| simple_record_limit(&m, SimpleLimitRoute::Eta, &mc).unwrap())),
        ("weibull-identity", se_ratio(|mc| simple_record_limit(&m, SimpleLimitRoute::WeibullIdentity, &mc).unwrap())),
        ("champion", se_ratio(|mc| champion_survival(&mo, &[-0.4, -0.2], &mc).unwrap().eta.unwrap())),
        ("simple-df", se_ratio(|mc| simple_record_limit_df(&m, &[-0.4, -0.2, -0.9], &mc).unwrap())),
        ("second-record", se_ratio(|mc| second_record_df(&c, &[0.7, 0.8], &mc, 100_000).unwrap().formula.unwrap())),
    ];
    for (name, r) in ratios {
        assert!(r >= 10.0 / 1.5 && r <= 10.0 * 1.5, "{name}: ratio {r}");
    }
}
