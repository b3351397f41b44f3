mod common;

use std::f64::consts::PI;

use chasm::loss::{
    classify_pair, loss_and_gradient, loss_gradient, loss_terms, Batch, ClassWeightTable, FrameRef,
    LossConfig,
};
use common::{max_fd_relative_error, mixed_frames, random_matrix};
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Naive binomial CDF by direct pmf summation in f64.
fn naive_ln_cdf(r: usize, n: usize, p: f64) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0;
    for k in 0..=r {
        if k > 0 {
            c = c * (n - k + 1) as f64 / k as f64;
        }
        total += c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
    }
    total.ln()
}

fn naive_flip(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y / (na * nb)).sum();
    dot.clamp(-1.0 + 1e-7, 1.0 - 1e-7).acos() / PI
}

/// The loss straight from its definition, pair by pair.
fn naive_loss(x: &Array2<f64>, frames: &[FrameRef], cfg: &LossConfig) -> f64 {
    let (b, n) = x.dim();
    let m = n / cfg.substring_count;
    let rows: Vec<Vec<f64>> = x.axis_iter(Axis(0)).map(|r| r.to_vec()).collect();
    let (mut j1, mut j2, mut j3) = (0.0, 0.0, 0.0);
    for i in 0..b {
        for j in 0..b {
            if i == j {
                continue;
            }
            let c = classify_pair(&frames[i], &frames[j], cfg.t0).index();
            let p = naive_flip(&rows[i], &rows[j]);
            j1 += cfg.weights.u1[c] * naive_ln_cdf(cfg.r, n, p);
            if cfg.weights.u2[c] != 0.0 {
                j2 += cfg.weights.u2[c] * naive_ln_cdf(n - cfg.r - 1, n, 1.0 - p);
            }
            for l in 0..cfg.substring_count {
                if cfg.weights.u3[c] == 0.0 {
                    continue;
                }
                let pl = naive_flip(&rows[i][l * m..(l + 1) * m], &rows[j][l * m..(l + 1) * m]);
                j3 += cfg.weights.u3[c] * naive_ln_cdf(m - 1, m, 1.0 - pl);
            }
        }
    }
    let bb = (b * b) as f64;
    let mut j4 = 0.0;
    for k in 0..n {
        let s: f64 = (0..b).map(|i| x[[i, k]].powi(3)).sum();
        j4 += s * s;
    }
    j4 /= (n * b) as f64;
    -(j1 + j2 + j3) / bb + cfg.lambda4 * j4
}

#[test]
fn total_matches_naive_reimplementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let x = random_matrix(&mut rng, 6, 8);
    let frames = mixed_frames(6);
    let cfg = LossConfig::new(8, 1, 2).unwrap();
    let batch = Batch::new(x.clone(), frames.clone()).unwrap();
    let got = loss_terms(&batch, &cfg, None).unwrap().total;
    let want = naive_loss(&x, &frames, &cfg);
    assert!(((got - want) / want).abs() < 1e-10, "{got} vs {want}");
}

#[test]
fn gradient_matches_finite_differences_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let batch = Batch::new(random_matrix(&mut rng, 4, 8), mixed_frames(4)).unwrap();
    let cfg = LossConfig::new(8, 1, 2).unwrap();
    let g = loss_gradient(&batch, &cfg).unwrap();
    let err = max_fd_relative_error(&batch, &cfg, &g, 1e-5, 1e-6);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradient_and_loss_agree_with_separate_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let batch = Batch::new(random_matrix(&mut rng, 7, 16), mixed_frames(7)).unwrap();
    let cfg = LossConfig::new(16, 2, 4).unwrap();
    let (l, g) = loss_and_gradient(&batch, &cfg, None).unwrap();
    assert_eq!(l, loss_terms(&batch, &cfg, None).unwrap());
    assert_eq!(g, loss_gradient(&batch, &cfg).unwrap());
}

#[test]
fn permutation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let x = random_matrix(&mut rng, 8, 16);
    let frames = mixed_frames(8);
    let cfg = LossConfig::new(16, 1, 2).unwrap();
    let base = loss_terms(&Batch::new(x.clone(), frames.clone()).unwrap(), &cfg, None).unwrap();
    for _ in 0..5 {
        let mut order: Vec<usize> = (0..8).collect();
        order.shuffle(&mut rng);
        let px = x.select(Axis(0), &order);
        let pf: Vec<FrameRef> = order.iter().map(|&i| frames[i].clone()).collect();
        let l = loss_terms(&Batch::new(px, pf).unwrap(), &cfg, None).unwrap();
        for (a, b) in [
            (base.j1, l.j1),
            (base.j2, l.j2),
            (base.j3, l.j3),
            (base.j4, l.j4),
            (base.total, l.total),
        ] {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs {b}");
        }
    }
}

#[test]
fn row_scaling_leaves_likelihood_terms_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let x = random_matrix(&mut rng, 6, 16);
    let mut cfg = LossConfig::new(16, 2, 2).unwrap();
    cfg.lambda4 = 0.0;
    let mut scaled = x.clone();
    for mut row in scaled.axis_iter_mut(Axis(0)) {
        row *= rng.random_range(0.1..10.0);
    }
    let a = loss_terms(&Batch::new(x, mixed_frames(6)).unwrap(), &cfg, None).unwrap();
    let b = loss_terms(&Batch::new(scaled, mixed_frames(6)).unwrap(), &cfg, None).unwrap();
    assert!(((a.total - b.total) / a.total).abs() < 1e-10);
}

#[test]
fn custom_weight_table_is_used() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let batch = Batch::new(random_matrix(&mut rng, 5, 8), mixed_frames(5)).unwrap();
    let mut cfg = LossConfig::new(8, 1, 2).unwrap();
    let base = loss_terms(&batch, &cfg, None).unwrap();
    let mut w = ClassWeightTable::default().to_row_major();
    for v in &mut w[4..8] {
        *v *= 2.0;
    }
    cfg.weights = ClassWeightTable::from_row_major(&w).unwrap();
    let doubled = loss_terms(&batch, &cfg, None).unwrap();
    assert!((doubled.j2 - 2.0 * base.j2).abs() < 1e-12 * base.j2.abs());
    assert_eq!(doubled.j1, base.j1);
}
