mod common;

use chasm::geometry::*;
use common::{exact_binom_cdf, exact_binom_cdf_all, exact_binom_sf_all};

#[test]
fn deep_lower_tail_against_exact_sum() {
    let (ln_exact, exact) = exact_binom_cdf(3, 64, 0.9);
    let ln = log_binom_cdf(3, 64, 0.9).unwrap();
    assert!(((ln - ln_exact) / ln_exact).abs() < 1e-9);
    let f = binom_cdf(3, 64, 0.9).unwrap();
    assert!(((f - exact) / exact).abs() < 1e-9, "{f} vs {exact}");
}

#[test]
fn log_cdf_tracks_exact_far_below_f64_range() {
    for (r, (ln_exact, _)) in exact_binom_cdf_all(192, 0.99)
        .into_iter()
        .enumerate()
        .take(40)
    {
        let ln = log_binom_cdf(r as u64, 192, 0.99).unwrap();
        assert!(ln.is_finite());
        assert!(
            ((ln - ln_exact) / ln_exact).abs() < 1e-9,
            "r={r}: {ln} vs {ln_exact}"
        );
    }
}

#[test]
fn upper_tail_near_one() {
    for p in [0.01, 0.25] {
        let cdf = exact_binom_cdf_all(128, p);
        let sf = exact_binom_sf_all(128, p);
        for r in 0..128 {
            let (_, f_exact) = cdf[r];
            let (_, tail_exact) = sf[r];
            if f_exact > 0.5 && tail_exact > 1e-290 {
                let tail = -log_binom_cdf(r as u64, 128, p).unwrap().exp_m1();
                assert!(
                    ((tail - tail_exact) / tail_exact).abs() < 1e-9,
                    "p={p} r={r}: {tail} vs {tail_exact}"
                );
            }
        }
    }
}

#[test]
fn flip_probability_examples() {
    let e1 = UnitVector::new(vec![1.0, 0.0, 0.0]).unwrap();
    let e2 = UnitVector::new(vec![0.0, 1.0, 0.0]).unwrap();
    let neg = UnitVector::new(vec![-1.0, 0.0, 0.0]).unwrap();
    assert!((bit_flip_probability(&e1, &e2).unwrap() - 0.5).abs() < 1e-15);
    let same = bit_flip_probability(&e1, &e1).unwrap();
    assert!(same > 0.0 && same < 2e-4);
    let opposite = bit_flip_probability(&e1, &neg).unwrap();
    assert!(opposite < 1.0 && opposite > 1.0 - 2e-4);
}

#[test]
fn monte_carlo_matches_arc_law_for_many_angles() {
    for theta in [0.05, 0.5, 1.5, 3.0] {
        let n = 32;
        let hist = mc_hamming_distribution(n, theta, 20_000, 99).unwrap();
        let mean = n as f64 * theta / std::f64::consts::PI;
        let se = (hist.variance() / hist.trials() as f64).sqrt();
        assert!((hist.mean() - mean).abs() < 4.0 * se, "theta={theta}");
    }
}
