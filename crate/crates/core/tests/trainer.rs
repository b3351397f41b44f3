use chasm::loss::{classify_pair, LossConfig, PairClass};
use chasm::trainer::*;
use chasm::Error;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_config(steps: usize) -> TrainConfig {
    let mut cfg = TrainConfig::default();
    cfg.steps = steps;
    cfg.data.videos = 6;
    cfg.data.heldout_videos = 3;
    cfg.batch.videos = 6;
    cfg
}

#[test]
fn every_class_appears_over_many_batches() {
    let mut shots = Vec::new();
    for v in 0..50 {
        for s in 0..3 {
            shots.push(Shot {
                video_id: format!("v{v}"),
                shot_id: format!("s{s}"),
                timestamps: (0..12).map(|f| (s * 12 + f) as f64 / 15.0).collect(),
            });
        }
    }
    let data = ShotDataset::new(shots, 15.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = BatchParams::default();
    let mut counts = [0u64; 4];
    for _ in 0..1000 {
        let plan = hierarchical_batch(&data, &params, &mut rng).unwrap();
        assert_eq!(plan.b(), 280);
        for i in 0..plan.b() {
            for j in i + 1..plan.b() {
                counts[classify_pair(&plan.frames[i], &plan.frames[j], params.t0).index()] += 1;
            }
        }
    }
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
}

#[test]
fn literal_three_plus_one_reading_gives_420() {
    let params = BatchParams {
        anchors_per_shot: 3,
        ..BatchParams::default()
    };
    assert_eq!(params.batch_size(), 420);
}

#[test]
fn zero_steps_returns_initial_model() {
    let cfg = small_config(0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = generate_toy_data(&cfg.data, "t", &mut rng).unwrap();
    let init = ToyModel::random(16, cfg.data.feature_dim, 0.3, &mut rng);
    let (model, history) =
        train_toy(&data, init.clone(), &cfg.options().unwrap(), &mut rng).unwrap();
    assert_eq!(model, init);
    assert!(history.is_empty());
}

#[test]
fn training_is_reproducible_and_nonnegative() {
    let cfg = small_config(15);
    let a = cfg.run().unwrap();
    let b = cfg.run().unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.history, b.history);
    assert_eq!(a.history.len(), 15);
    assert!(a.history.iter().all(|h| h.total >= 0.0));
    let csv = history_csv(&a.history);
    assert!(csv.starts_with(HISTORY_HEADER));
    assert_eq!(csv.lines().count(), 16);
}

#[test]
fn huge_learning_rate_diverges() {
    let mut cfg = small_config(50);
    cfg.schedule = Schedule::new(1e12, 1e11, 2000.0).unwrap();
    match cfg.run() {
        Err(Error::Diverged { step }) => assert!(step < 50),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn weight_gradient_matches_finite_differences() {
    let cfg = small_config(1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = generate_toy_data(&cfg.data, "t", &mut rng).unwrap();
    let mut loss = LossConfig::new(8, 1, 2).unwrap();
    loss.lambda5 = 0.5;
    let params = BatchParams {
        videos: 3,
        ..BatchParams::default()
    };
    let plan = hierarchical_batch(&data.dataset, &params, &mut rng).unwrap();
    let features = data.gather(&plan.members);
    let model = ToyModel::random(8, cfg.data.feature_dim, 0.5, &mut rng);
    let (_, grad) = model
        .loss_and_gradient(&features, plan.frames.clone(), &loss)
        .unwrap();
    let objective = |w: &Array2<f64>| {
        let m = ToyModel { w: w.clone() };
        m.loss_and_gradient(&features, plan.frames.clone(), &loss)
            .unwrap()
            .0
            .total
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for idx in [(0, 0), (3, 5), (7, 7), (5, 2)] {
        let mut up = model.w.clone();
        up[idx] += h;
        let mut down = model.w.clone();
        down[idx] -= h;
        let fd = (objective(&up) - objective(&down)) / (2.0 * h);
        worst = worst.max((fd - grad[idx]).abs() / fd.abs().max(1e-6));
    }
    assert!(worst < 1e-4, "relative error {worst}");
}

#[test]
fn batches_have_h0_companions_for_all_frames() {
    let cfg = small_config(1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data = generate_toy_data(&cfg.data, "t", &mut rng).unwrap();
    let plan = hierarchical_batch(&data.dataset, &BatchParams::default(), &mut rng).unwrap();
    for (i, a) in plan.frames.iter().enumerate() {
        assert!(plan
            .frames
            .iter()
            .enumerate()
            .any(|(j, b)| i != j && classify_pair(a, b, cfg.batch.t0) == PairClass::H0));
    }
}
