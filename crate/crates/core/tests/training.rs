use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curriculum_core::curriculum::{build_batch_plan_curriculum, build_batch_plan_vanilla, train, TrainConfig, Trainer};
use curriculum_core::data::{normalize, Dataset, NormalizedDataset, Shape, Split};
use curriculum_core::dcl::{dcl_train, train_reference, DclTrainer, DclVariant};
use curriculum_core::nn::{FcnArch, FcnModel, LrSchedule};
use curriculum_core::pacing::PaceSpec;
use curriculum_core::scoring::{class_balanced_order, score_dataset, Direction, Scorer};
use curriculum_core::Error;

/// Dark images are class 0, bright ones class 1, with per-pixel jitter.
fn separable(n: usize, d: usize, seed: u64, split: Split) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let base = if class == 0 { 40 } else { 200 };
        images.extend((0..d).map(|_| base + rng.gen_range(0..16u8)));
        labels.push(class);
    }
    Dataset::new("toy", split, Shape::new(1, d, 1), 2, images, labels).unwrap()
}

fn toy_pair() -> (NormalizedDataset, NormalizedDataset) {
    normalize(separable(80, 6, 1, Split::Train), separable(40, 6, 2, Split::Test)).unwrap()
}

fn config(steps: usize, lr: f64) -> TrainConfig {
    TrainConfig {
        batch_size: 8,
        total_steps: steps,
        seed: 3,
        lr: LrSchedule::new(lr, 1.1, 50).unwrap(),
        eval_every: 10,
        track_per_example: false,
        steps_per_epoch: None,
    }
}

#[test]
fn vanilla_sgd_separates_a_separable_toy() {
    let (tr, te) = toy_pair();
    let cfg = config(200, 0.1);
    let plan = build_batch_plan_vanilla(tr.len(), cfg.batch_size, cfg.total_steps, cfg.seed).unwrap();
    let (_, log) = train(
        FcnModel::init(FcnArch::new(6, 4, 2, true).unwrap(), 0),
        &tr,
        &te,
        &plan,
        &cfg,
    )
    .unwrap();
    let last = log.last().unwrap();
    assert_eq!(last.step, 200);
    assert_eq!(last.test_acc, 1.0);
    assert!(last.test_loss < log.rows[0].test_loss);
}

#[test]
fn metrics_rows_follow_the_eval_cadence() {
    let (tr, te) = toy_pair();
    let mut cfg = config(35, 0.05);
    cfg.track_per_example = true;
    let plan = build_batch_plan_vanilla(tr.len(), cfg.batch_size, cfg.total_steps, cfg.seed).unwrap();
    let (_, log) = train(
        FcnModel::init(FcnArch::new(6, 4, 2, true).unwrap(), 0),
        &tr,
        &te,
        &plan,
        &cfg,
    )
    .unwrap();
    let steps: Vec<usize> = log.rows.iter().map(|r| r.step).collect();
    assert_eq!(steps, [0, 10, 20, 30, 35]);
    assert!(log.rows[0].train_loss.is_nan());
    assert!(log.rows[1..].iter().all(|r| r.train_loss.is_finite()));
    // 80 examples, batch 8: an epoch is 10 steps
    assert_eq!(log.rows.iter().map(|r| r.epoch).collect::<Vec<_>>(), [0, 1, 2, 3, 3]);
    assert_eq!(log.per_epoch_correct.len(), 3);
    assert!(log.per_epoch_correct.iter().all(|e| e.len() == 80));
    assert_eq!(log.rows[4].lr, 0.05);
}

#[test]
fn short_plans_and_exhausted_budgets_are_rejected() {
    let (tr, te) = toy_pair();
    let cfg = config(5, 0.1);
    let plan = build_batch_plan_vanilla(tr.len(), 8, 4, 0).unwrap();
    let model = FcnModel::init(FcnArch::new(6, 2, 2, true).unwrap(), 0);
    assert!(matches!(
        train(model.clone(), &tr, &te, &plan, &cfg),
        Err(Error::InvalidArgument(_))
    ));
    let mut t = Trainer::new(model, &tr, &te, cfg).unwrap();
    for _ in 0..5 {
        t.step(&[0, 1]).unwrap();
    }
    assert!(t.step(&[0]).is_err());
    assert!(t.step(&[]).is_err() || t.remaining() == 0);
}

#[test]
fn huge_learning_rate_diverges() {
    let (tr, te) = toy_pair();
    let cfg = config(50, 1e300);
    let plan = build_batch_plan_vanilla(tr.len(), cfg.batch_size, cfg.total_steps, cfg.seed).unwrap();
    let model = FcnModel::init(FcnArch::new(6, 4, 2, true).unwrap(), 0);
    assert!(matches!(
        train(model, &tr, &te, &plan, &cfg),
        Err(Error::Diverged { .. })
    ));
}

#[test]
fn fixed_curriculum_training_is_deterministic() {
    let (tr, te) = toy_pair();
    let cfg = config(60, 0.1);
    let scores = score_dataset(&tr, Scorer::Stddev, Direction::Plus).unwrap();
    let order = class_balanced_order(&scores, tr.labels()).unwrap();
    let pace = PaceSpec::Exponential {
        starting_fraction: 0.2,
        inc: 1.5,
        step_length: 10,
    };
    let run = || {
        let plan = build_batch_plan_curriculum(&order, &pace, tr.len(), 8, 60, 9).unwrap();
        train(
            FcnModel::init(FcnArch::new(6, 4, 2, true).unwrap(), 5),
            &tr,
            &te,
            &plan,
            &cfg,
        )
        .unwrap()
    };
    let (m1, l1) = run();
    let (m2, l2) = run();
    assert_eq!(m1.params(), m2.params());
    assert_eq!(format!("{:?}", l1.rows), format!("{:?}", l2.rows));
}

#[test]
fn dcl_is_bitwise_deterministic() {
    let (tr, te) = toy_pair();
    let arch = FcnArch::new(6, 4, 2, true).unwrap();
    let cfg = config(80, 0.1);
    let (w_bar, _) = train_reference(&tr, &te, arch, 0, &cfg).unwrap();
    for variant in [DclVariant::Plus, DclVariant::Minus] {
        let a = dcl_train(&tr, &te, arch, 0, w_bar.params(), 0.5, &cfg, variant).unwrap();
        let b = dcl_train(&tr, &te, arch, 0, w_bar.params(), 0.5, &cfg, variant).unwrap();
        assert_eq!(a.model.params(), b.model.params());
        assert_eq!(a.rho_history, b.rho_history);
        assert_eq!(format!("{:?}", a.log.rows), format!("{:?}", b.log.rows));
        // pace 40, b 8: five steps per epoch, 80 steps in 16 epochs
        assert_eq!(a.rho_history.len(), 16);
        assert_eq!(
            a.distance_history[0],
            distance(FcnModel::init(arch, 0).params(), w_bar.params())
        );
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn dcl_variants_coincide_when_every_example_is_identical() {
    let images = [7, 90, 180, 33].repeat(24);
    let ds = Dataset::new("same", Split::Train, Shape::new(1, 4, 1), 2, images, vec![1; 24]).unwrap();
    let (tr, te) = normalize(ds.clone(), ds.with_split(Split::Test)).unwrap();
    let arch = FcnArch::new(4, 3, 2, true).unwrap();
    let cfg = config(30, 0.1);
    let w_bar = FcnModel::init(arch, 99);
    let plus = dcl_train(&tr, &te, arch, 1, w_bar.params(), 1.0, &cfg, DclVariant::Plus).unwrap();
    let minus = dcl_train(&tr, &te, arch, 1, w_bar.params(), 1.0, &cfg, DclVariant::Minus).unwrap();
    assert_eq!(plus.model.params(), minus.model.params());
    assert_eq!(format!("{:?}", plus.log.rows), format!("{:?}", minus.log.rows));
}

#[test]
fn dcl_trainer_checks_reference_and_pace() {
    let (tr, te) = toy_pair();
    let arch = FcnArch::new(6, 4, 2, true).unwrap();
    let cfg = config(10, 0.1);
    let short = vec![0.0; arch.num_params() - 1];
    assert!(matches!(
        DclTrainer::new(&tr, &te, arch, 0, &short, 0.5, &cfg, DclVariant::Plus),
        Err(Error::ArchitectureMismatch(_))
    ));
    let w_bar = FcnModel::init(arch, 1);
    // floor(0.05 * 80) = 4 < b = 8
    assert!(DclTrainer::new(&tr, &te, arch, 0, w_bar.params(), 0.05, &cfg, DclVariant::Plus).is_err());
    let same = FcnModel::init(arch, 0);
    let mut t = DclTrainer::new(&tr, &te, arch, 0, same.params(), 0.5, &cfg, DclVariant::Plus).unwrap();
    assert!(matches!(t.run_epoch(), Err(Error::AtOptimum)));
}
