use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mdinet::dataset::Table;
use mdinet::model::PARAM_NAMES;
use tempfile::TempDir;

fn mdinet(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mdinet")).args(args).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Runs `cmd` with a config and returns the output file's text.
fn run_ok(dir: &Path, cmd: &str, config: &str, out: &str, seed: u64) -> String {
    let cfg = write(dir, &format!("{out}.conf"), config);
    let out_path = dir.join(out);
    let (code, log) = mdinet(&[
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{cmd} failed:\n{log}");
    assert!(log.contains(&format!("seed={seed} config_sha256=")), "{log}");
    let text = fs::read_to_string(out_path).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with(&format!("# mdinet {cmd} seed={seed} config_sha256=")), "{first}");
    text
}

fn table(text: &str) -> Table {
    Table::parse(text).unwrap()
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = d.join("o.csv");
    let out = out.to_str().unwrap();

    let cfg = write(d, "bad.conf", "l_a = 1,2\nwobble = 3\n");
    let (code, log) = mdinet(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2, "{log}");
    assert!(log.contains("wobble"), "{log}");

    assert_eq!(mdinet(&["simulate"]).0, 2);
    assert_eq!(mdinet(&["no-such-command", "--out", out]).0, 2);
    assert_eq!(mdinet(&["simulate", "--config", "/nonexistent.conf", "--out", out]).0, 2);

    let cfg = write(d, "missing.conf", "model = nothing-here.txt\nl_a = 1\nl_b = 1\ne_d = 0.01\n");
    let (code, log) = mdinet(&["predict", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2, "{log}");
    assert!(log.contains("nothing-here.txt"), "{log}");

    write(d, "garbage.txt", "mdinet-predictor 1\nnetworks 3\n");
    let cfg = write(d, "garbage.conf", "model = garbage.txt\nl_a = 1\nl_b = 1\ne_d = 0.01\n");
    let (code, log) = mdinet(&["predict", "--config", cfg.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 3, "{log}");
}

#[test]
fn simulate_grid_has_one_row_per_node() {
    let dir = TempDir::new().unwrap();
    let text = run_ok(dir.path(), "simulate", "l_a = 0, 15, 30\npso_swarm = 12\npso_iterations = 15\n", "sim.csv", 4);
    let t = table(&text);
    assert_eq!(t.header, ["l_a", "l_b", "rate_asym", "rate_sym"]);
    assert_eq!(t.records.len(), 9);
    for r in &t.records {
        assert!(r.f64(2).unwrap() >= r.f64(3).unwrap(), "{r:?}");
    }
    let scan = table(&run_ok(dir.path(), "simulate", "l_a = 10, 60\nl_sum = 70\npso_swarm = 8\npso_iterations = 5\n", "scan.csv", 4));
    let pts: Vec<(f64, f64)> = scan.records.iter().map(|r| (r.f64(0).unwrap(), r.f64(1).unwrap())).collect();
    assert_eq!(pts, vec![(10.0, 60.0), (60.0, 10.0)]);
}

#[test]
fn toy_pipeline_round_trip() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let start = std::time::Instant::now();
    let ds = run_ok(d, "gen-dataset", "l_a_start = 0\nl_a_step = 10\nl_a_count = 3\ne_d = 0.015\n", "ds.csv", 2);
    assert_eq!(table(&ds).records.len(), 9);
    run_ok(d, "train", "dataset = ds.csv\nhidden = 6\nepochs = 150\n", "pred.txt", 3);
    let p = table(&run_ok(d, "predict", "model = pred.txt\nl_a = 12, 5\nl_b = 12, 25\ne_d = 0.015\n", "p.csv", 3));
    assert_eq!(p.records.len(), 2);
    let r = &p.records[0];
    for k in 0..8 {
        assert_eq!(r.str(3 + k), r.str(11 + k), "{} differs from its mirror", PARAM_NAMES[k]);
    }
    assert!(p.records.iter().all(|r| r.f64(19).unwrap() > 0.0));

    let b = table(&run_ok(d, "bench", "model = pred.txt\nsamples = 4\nl_max = 20\ntiming_out = timing.csv\n", "bench.csv", 6));
    assert_eq!(b.records.len(), 4);
    assert!(b.meta("summary").unwrap().is_some());
    let timing = fs::read_to_string(d.join("timing.csv")).unwrap();
    assert!(timing.starts_with("# mdinet bench seed=6"));
    assert!(start.elapsed().as_secs() < 300);
}

#[test]
fn calibration_pipeline_recovers_truths() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    run_ok(d, "gen-dataset", "kind = calib\nrows = 1500\n", "calib.csv", 5);
    run_ok(d, "train", "kind = estimator\ndataset = calib.csv\n", "est.txt", 5);
    // Same link, fresh truths.
    run_ok(d, "gen-dataset", "kind = calib\nrows = 200\nlink_seed = 5\n", "held.csv", 6);
    let out = table(&run_ok(d, "calibrate", "model = est.txt\nobservations = held.csv\n", "est.csv", 5));
    assert_eq!(out.records.len(), 200);
    let (_, errs) = out.meta("errors").unwrap().unwrap();
    assert!(errs["mean_abs_phi_error"] <= 0.01, "{errs:?}");
    assert!(errs["mean_abs_ed_error"] <= 4e-4, "{errs:?}");
}

#[test]
fn netsim_reports_pairs() {
    let dir = TempDir::new().unwrap();
    let t = table(&run_ok(dir.path(), "netsim", "users = 5\nticks = 12\nrecalibration_period = 0\n", "net.csv", 8));
    assert_eq!(t.records.len(), 13);
    let (_, prov) = t.meta("provisioning").unwrap().unwrap();
    assert_eq!(prov["pairs"], 10.0);
}
