use std::path::PathBuf;

use mdinet::dataset::*;
use mdinet::model::*;
use mdinet::neural::*;
use mdinet::optimize::*;
use mdinet::{Error, Execution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("neural");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Largest per-component relative gap between backprop and central finite
/// differences (step 1e-6); gaps on components below 1e-6 in size are
/// measured against 1e-6.
fn worst_gradient_gap(model: &MlpModel, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
    let analytic = model.backprop_gradients(inputs, targets).unwrap().flatten();
    let base = model.parameters();
    let mut probe = model.clone();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (i, g) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_parameters(&p).unwrap();
        let up = probe.loss(inputs, targets).unwrap();
        p[i] = base[i] - h;
        probe.set_parameters(&p).unwrap();
        let down = probe.loss(inputs, targets).unwrap();
        let numeric = (up - down) / (2.0 * h);
        let gap = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(gap);
    }
    worst
}

#[test]
fn backprop_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..20 {
        let n_in = rng.gen_range(1..=3);
        let n_out = rng.gen_range(1..=2);
        let mut sizes = vec![n_in];
        for _ in 0..rng.gen_range(1..=2) {
            sizes.push(rng.gen_range(1..=8));
        }
        sizes.push(n_out);
        let act = if case % 2 == 0 { Activation::Sigmoid } else { Activation::Tanh };
        let mut model = MlpModel::new(&sizes, act, case).unwrap();
        let thresholds: Vec<f64> = model.parameters().iter().map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut p = model.parameters();
        for (v, t) in p.iter_mut().zip(&thresholds) {
            *v += 0.1 * t;
        }
        model.set_parameters(&p).unwrap();
        let batch = rng.gen_range(1..=6);
        let inputs: Vec<Vec<f64>> = (0..batch).map(|_| (0..n_in).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let targets: Vec<Vec<f64>> = (0..batch).map(|_| (0..n_out).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let gap = worst_gradient_gap(&model, &inputs, &targets);
        assert!(gap < 1e-5, "case {case} {sizes:?}: {gap}");
    }
}

fn identity_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
    (xs.clone(), xs)
}

fn identity_model(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> MlpModel {
    let mut m = MlpModel::new(&[1, 4, 1], Activation::Sigmoid, 2).unwrap();
    m.input_norm = Normalizer::fit(xs, &[false]).unwrap();
    m.output_norm = Normalizer::fit(ys, &[false]).unwrap();
    m
}

#[test]
fn learns_the_identity() {
    let (xs, ys) = identity_data(200, 1);
    let mut m = identity_model(&xs, &ys);
    let report = train(&mut m, &xs, &ys, &TrainConfig::new(4)).unwrap();
    assert!(report.final_loss() < report.initial_loss);
    let (vx, vy) = identity_data(100, 99);
    let mse: f64 = vx.iter().zip(&vy).map(|(x, y)| (m.forward(x).unwrap()[0] - y[0]).powi(2)).sum::<f64>() / 100.0;
    assert!(mse < 1e-3, "validation mse {mse}");
}

#[test]
fn epoch_count_and_determinism() {
    let (xs, ys) = identity_data(50, 2);
    let mut config = TrainConfig::new(7);
    config.epochs = 0;
    assert!(train(&mut identity_model(&xs, &ys), &xs, &ys, &config).is_err());
    config.epochs = 1;
    let report = train(&mut identity_model(&xs, &ys), &xs, &ys, &config).unwrap();
    assert_eq!(report.loss_history.len(), 1);

    config.epochs = 30;
    let (mut a, mut b) = (identity_model(&xs, &ys), identity_model(&xs, &ys));
    train(&mut a, &xs, &ys, &config).unwrap();
    train(&mut b, &xs, &ys, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn divergence_is_reported_with_position() {
    let (xs, ys) = identity_data(64, 3);
    let mut config = TrainConfig::new(1);
    config.learning_rate = 1e6;
    config.momentum = 0.99;
    match train(&mut identity_model(&xs, &ys), &xs, &ys, &config) {
        Err(Error::Diverged { epoch, loss, .. }) => assert!(epoch >= 1 && !loss.is_finite()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn saved_model_reproduces_outputs_bit_for_bit() {
    let mut m = MlpModel::new(&[3, 20, 20, 2], Activation::Sigmoid, 5).unwrap();
    m.input_norm = Normalizer {
        shift: vec![0.01, 0.002, -6.0],
        scale: vec![0.1, 0.02, 3.0],
        log10: vec![false, false, true],
    };
    let path = scratch("model.mlp");
    save_model(&m, &path).unwrap();
    let back = load_model(&path).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let x = [rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.03), rng.gen_range(1e-6..1e-2)];
        assert_eq!(m.forward(&x).unwrap(), back.forward(&x).unwrap());
    }
}

#[test]
fn hand_written_model_file() {
    let m = load_model(&fixture("tiny_2_2_1.mlp")).unwrap();
    assert_eq!(m.sizes(), vec![2, 2, 1]);
    let y = m.forward(&[3f64.ln(), 0.0]).unwrap()[0];
    assert!((y - 0.75).abs() < 1e-15, "{y}");
}

#[test]
fn truncated_model_file_is_an_error() {
    let text = std::fs::read_to_string(fixture("tiny_2_2_1.mlp")).unwrap();
    let path = scratch("truncated.mlp");
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert!(matches!(load_model(&path), Err(Error::ModelFormat { .. })));
}

fn small_param_dataset() -> ParamDataset {
    let axis = ConditionGrid::axis(0.0, 4.0, 6);
    let grid = ConditionGrid::new(axis.clone(), axis, vec![0.01, 0.02]).unwrap();
    gen_param_dataset(&ParamGenConfig {
        grid,
        anchors: None,
        charlie: CharlieConditions::standard(),
        alpha: 0.2,
        pso: PsoConfig::new(default_param_bounds(), 8),
        lsa: LsaConfig::new(default_param_bounds()),
        execution: Execution::default(),
    })
    .unwrap()
}

#[test]
fn predictor_is_feasible_mirrored_and_persistent() {
    let ds = small_param_dataset();
    let mut config = PredictorConfig::new(3);
    config.train.epochs = 200;
    let (predictor, reports) = ParamPredictor::train(&ds, &config).unwrap();
    assert_eq!(reports.len(), 8);
    let same = predictor.predict(9.0, 9.0, 0.015).unwrap();
    assert_eq!(same.alice, same.bob);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (la, lb, ed) = (rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0), rng.gen_range(0.01..0.02));
        let p = predictor.predict(la, lb, ed).unwrap();
        p.validate().unwrap();
        let q = predictor.predict(lb, la, ed).unwrap();
        assert_eq!(p.swapped(), q);
    }
    let path = scratch("predictor.txt");
    predictor.save(&path).unwrap();
    let back = ParamPredictor::load(&path).unwrap();
    assert_eq!(back.predict(3.0, 17.0, 0.012).unwrap(), predictor.predict(3.0, 17.0, 0.012).unwrap());
}

#[test]
fn estimator_recovers_a_known_truth() {
    let link = CalibLink::optimized(
        CharlieConditions::standard(),
        UserConditions::new(10.0, 20.0),
        Misalignment::new(DEFAULT_ED_RANGE.1, DEFAULT_PHI_RANGE.1),
        3,
    )
    .unwrap();
    let ds = gen_calib_dataset(1000, DEFAULT_PHI_RANGE, DEFAULT_ED_RANGE, &link, 5, Execution::default()).unwrap();
    let mut config = EstimatorConfig::new(6);
    config.train.epochs = 600;
    let (est, _) = CalibEstimator::train(&ds, &config).unwrap();
    let got = est.estimate(&link.observe(0.25, 0.01).unwrap()).unwrap();
    assert!((got.delta_phi - 0.25).abs() < 0.01, "{got:?}");
    assert!((got.e_d - 0.01).abs() < 5e-4, "{got:?}");

    let dead = ObservedSummary {
        e11_x: 0.3,
        e_mu_z: 0.1,
        rate: 0.0,
    };
    assert!(matches!(est.estimate(&dead), Err(Error::Infeasible(_))));

    let path = scratch("estimator.txt");
    est.save(&path).unwrap();
    assert_eq!(CalibEstimator::load(&path).unwrap(), est);
}
