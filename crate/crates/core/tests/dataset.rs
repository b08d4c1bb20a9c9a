use std::path::PathBuf;

use mdinet::dataset::*;
use mdinet::model::*;
use mdinet::optimize::*;
use mdinet::{Error, Execution};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("dataset");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small_config(anchors: Option<Vec<Node>>, execution: Execution) -> ParamGenConfig {
    let axis = ConditionGrid::axis(10.0, 2.0, 5);
    let grid = ConditionGrid::new(axis.clone(), axis, vec![0.015]).unwrap();
    let mut pso = PsoConfig::new(default_param_bounds(), 17);
    pso.execution = execution;
    ParamGenConfig {
        grid,
        anchors,
        charlie: CharlieConditions::standard(),
        alpha: 0.2,
        pso,
        lsa: LsaConfig::new(default_param_bounds()),
        execution,
    }
}

#[test]
fn single_anchor_grid_counts() {
    let ds = gen_param_dataset(&small_config(Some(vec![[2, 2, 0]]), Execution::default())).unwrap();
    assert_eq!(ds.rows.len(), 25);
    let anchors = ds.rows.iter().filter(|r| r.provenance == Provenance::PsoAnchor).count();
    assert_eq!(anchors, 1);
    ds.validate().unwrap();
    let keys: Vec<[f64; 3]> = ds.rows.iter().map(|r| r.conditions()).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
}

#[test]
fn neighbouring_optima_are_close() {
    let ds = gen_param_dataset(&small_config(None, Execution::default())).unwrap();
    let bounds = default_param_bounds();
    let mut total = 0.0;
    let mut pairs = 0;
    for a in &ds.rows {
        for b in &ds.rows {
            let dl = (a.l_a - b.l_a).abs() + (a.l_b - b.l_b).abs();
            if (dl - 2.0).abs() < 1e-9 && a.l_a <= b.l_a && a.l_b <= b.l_b {
                let (u, v) = (bounds.normalize(&a.params.to_array()), bounds.normalize(&b.params.to_array()));
                total += u.iter().zip(&v).map(|(x, y)| (x - y).abs()).sum::<f64>() / u.len() as f64;
                pairs += 1;
            }
        }
    }
    assert_eq!(pairs, 40);
    let mean = total / pairs as f64;
    assert!(mean < 0.1, "mean normalized distance {mean}");
}

#[test]
fn warm_start_saves_evaluations() {
    let charlie = CharlieConditions::standard();
    let mis = Misalignment::aligned(0.015);
    let lsa = LsaConfig::new(default_param_bounds());
    let solved = optimize_pair(
        &charlie,
        &UserConditions::new(20.0, 30.0),
        &mis,
        SearchMode::Asymmetric,
        &Strategy::Hybrid {
            pso: PsoConfig::new(default_param_bounds(), 1),
            lsa: lsa.clone(),
        },
    )
    .unwrap();
    let next = UserConditions::new(22.0, 30.0);
    let run = |initial| {
        optimize_pair(&charlie, &next, &mis, SearchMode::Asymmetric, &Strategy::Lsa { initial, config: lsa.clone() }).unwrap()
    };
    let warm = run(solved.params);
    let cold = run(ProtocolParams::default());
    assert!(warm.evals < cold.evals, "warm {} vs cold {}", warm.evals, cold.evals);
    assert!(warm.rate > 0.0);
}

#[test]
fn generation_is_deterministic_across_execution_modes() {
    let seq = gen_param_dataset(&small_config(None, Execution::Sequential)).unwrap();
    let par = gen_param_dataset(&small_config(None, Execution::Parallel)).unwrap();
    assert_eq!(seq.to_table().to_text(), par.to_table().to_text());
}

#[test]
fn unreachable_node_is_a_config_error() {
    let mut config = small_config(Some(vec![[0, 0, 0]]), Execution::default());
    config.grid.remove([3, 4, 0]);
    config.grid.remove([4, 3, 0]);
    match gen_param_dataset(&config) {
        Err(Error::Config(msg)) => assert!(msg.contains("[4, 4, 0]"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let mut config = small_config(Some(vec![]), Execution::default());
    config.anchors = Some(vec![]);
    assert!(matches!(gen_param_dataset(&config), Err(Error::Config(_))));
}

#[test]
fn param_dataset_round_trips() {
    let mut ds = gen_param_dataset(&small_config(Some(vec![[0, 0, 0]]), Execution::default())).unwrap();
    ds.notes.push("mdinet test".into());
    let path = scratch("params.csv");
    ds.save(&path).unwrap();
    let back = ParamDataset::load(&path).unwrap();
    assert_eq!(back, ds);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l == PARAM_HEADER.join(",")));
}

#[test]
fn empty_dataset_is_header_only() {
    let ds = ParamDataset::new(CharlieConditions::standard(), 0.2);
    let path = scratch("empty.csv");
    ds.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1);
    assert_eq!(ParamDataset::load(&path).unwrap(), ds);
}

#[test]
fn hand_written_fixture_loads_exactly() {
    let ds = ParamDataset::load(&fixture("two_rows.csv")).unwrap();
    assert_eq!(ds.rows.len(), 2);
    assert_eq!(ds.charlie, CharlieConditions::standard());
    assert_eq!(ds.notes, vec!["hand-written: default parameters at two conditions".to_string()]);
    let r = &ds.rows[1];
    assert_eq!((r.l_a, r.l_b, r.e_d), (5.0, 20.0, 0.01));
    assert_eq!(r.params, ProtocolParams::default());
    assert_eq!(r.rate, 7.5350201068113769e-4);
    assert_eq!(r.provenance, Provenance::LsaWarmstart);
}

#[test]
fn malformed_files_name_the_position() {
    let good = std::fs::read_to_string(fixture("two_rows.csv")).unwrap();
    let path = scratch("bad.csv");
    std::fs::write(&path, good.replace("5,20,0.01,0.4", "5,20,x,0.4")).unwrap();
    match ParamDataset::load(&path) {
        Err(Error::Parse { line: 6, column: 3, .. }) => {}
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, good.replace("8.7063684308137830e-4", "8.7e-4")).unwrap();
    assert!(matches!(ParamDataset::load(&path), Err(Error::Parse { line: 5, .. })));
    std::fs::write(&path, good.replace("lsa-warmstart", "guess")).unwrap();
    assert!(matches!(ParamDataset::load(&path), Err(Error::Parse { line: 6, column: 21, .. })));
}

fn calib_link() -> CalibLink {
    CalibLink::optimized(
        CharlieConditions::standard(),
        UserConditions::new(10.0, 20.0),
        Misalignment::new(DEFAULT_ED_RANGE.1, DEFAULT_PHI_RANGE.1),
        3,
    )
    .unwrap()
}

#[test]
fn calibration_corpus_covers_range_with_key() {
    let link = calib_link();
    let ds = gen_calib_dataset(1000, DEFAULT_PHI_RANGE, DEFAULT_ED_RANGE, &link, 8, Execution::default()).unwrap();
    assert_eq!(ds.rows.len(), 1000);
    for r in &ds.rows {
        assert!((0.0..=0.5).contains(&r.delta_phi) && (0.002..=0.02).contains(&r.e_d));
        assert!(r.obs.e11_x.is_finite() && r.obs.rate > 0.0);
    }
    let path = scratch("calib.csv");
    ds.save(&path).unwrap();
    assert_eq!(CalibDataset::load(&path).unwrap(), ds);
}

#[test]
fn degenerate_ranges_repeat_one_row() {
    let ds = gen_calib_dataset(5, (0.0, 0.0), (0.01, 0.01), &calib_link(), 1, Execution::default()).unwrap();
    assert!(ds.rows.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn phase_error_tracks_drift_at_fixed_misalignment() {
    let ds = gen_calib_dataset(200, DEFAULT_PHI_RANGE, (0.01, 0.01), &calib_link(), 2, Execution::default()).unwrap();
    let mut rows = ds.rows.clone();
    rows.sort_by(|a, b| a.delta_phi.partial_cmp(&b.delta_phi).unwrap());
    assert!(rows.windows(2).all(|w| w[1].obs.e11_x >= w[0].obs.e11_x));
}

#[test]
fn calibration_ranges_are_checked() {
    let link = calib_link();
    assert!(gen_calib_dataset(1, (0.0, 4.0), DEFAULT_ED_RANGE, &link, 1, Execution::default()).is_err());
    assert!(gen_calib_dataset(1, (0.3, 0.1), DEFAULT_ED_RANGE, &link, 1, Execution::default()).is_err());
    assert!(gen_calib_dataset(1, DEFAULT_PHI_RANGE, (0.0, 0.7), &link, 1, Execution::default()).is_err());
}
