//! End-to-end command tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nhpp")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nhpp-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(dir: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(dir.join(rel)).unwrap()
}

#[test]
fn simulate_preset2_count_in_central_range() {
    let dir = tmpdir("sim-count");
    let out = run_in(
        &dir,
        &[
            "simulate",
            "--preset",
            "2",
            "--seed",
            "7",
            "--out-dir",
            "run",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.join("run/pattern.csv")).unwrap();
    let k = text.lines().count() - 1;
    assert!(
        (300..=530).contains(&k),
        "event count {k} outside the Poisson central range"
    );
}

#[test]
fn simulate_is_replayable_from_manifest() {
    let dir = tmpdir("sim-replay");
    let a = run_in(
        &dir,
        &["simulate", "--preset", "1", "--seed", "3", "--out-dir", "a"],
    );
    assert!(a.status.success());
    // Replay: the manifest is a valid config for the same command.
    std::fs::copy(dir.join("a/manifest.json"), dir.join("replay.json")).unwrap();
    let b = run_in(
        &dir,
        &["simulate", "--config", "replay.json", "--out-dir", "b"],
    );
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    assert_eq!(read(&dir, "a/pattern.csv"), read(&dir, "b/pattern.csv"));
}

#[test]
fn simulate_rejects_unknown_preset() {
    let dir = tmpdir("sim-bad");
    let out = run_in(
        &dir,
        &["simulate", "--preset", "9", "--seed", "1", "--out-dir", "x"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("preset"));
}

#[test]
fn simulate_requires_a_seed() {
    let dir = tmpdir("sim-noseed");
    let out = run_in(&dir, &["simulate", "--preset", "1", "--out-dir", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

fn write_hpp_pattern(dir: &Path, k: usize) {
    let mut text = String::from("x,y\n");
    // Deterministic low-discrepancy-ish points inside the unit square.
    for i in 0..k {
        let x = ((i as f64) * 0.618_033_988_75) % 1.0;
        let y = ((i as f64) * 0.414_213_562_37 + 0.17) % 1.0;
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(dir.join("points.csv"), text).unwrap();
}

#[test]
fn fit_homogeneous_matches_conjugate_posterior() {
    let dir = tmpdir("fit-conj");
    write_hpp_pattern(&dir, 40);
    std::fs::write(
        dir.join("fit.json"),
        r#"{
            "points": "points.csv",
            "covariates": [],
            "model": [],
            "prior": {"sigma0_sq": 100.0, "a1": 1.0, "b1": 1.0},
            "mcmc": {"n_iter": 4000, "burn_in": 1000, "thin": 1},
            "seed": 11,
            "grid": [20, 20],
            "out_dir": "out"
        }"#,
    )
    .unwrap();
    let out = run_in(&dir, &["fit", "--config", "fit.json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap())
            .unwrap();
    let lambda0 = &summary["params"][0];
    let mean = lambda0["mean"].as_f64().unwrap();
    // Exact posterior: Gamma(1 + 40, 1 + 1), mean 20.5, sd sqrt(41)/2.
    let target = 41.0 / 2.0;
    let se = (41.0f64).sqrt() / 2.0 / (3000.0f64).sqrt();
    assert!(
        (mean - target).abs() < 3.0 * se,
        "posterior mean {mean} vs conjugate {target} (se {se})"
    );
}

#[test]
fn fit_empty_pattern_without_covariates_runs() {
    let dir = tmpdir("fit-empty");
    std::fs::write(dir.join("points.csv"), "x,y\n").unwrap();
    std::fs::write(
        dir.join("fit.json"),
        r#"{
            "points": "points.csv",
            "covariates": [],
            "model": [],
            "mcmc": {"n_iter": 300, "burn_in": 100, "thin": 1},
            "seed": 2,
            "grid": [10, 10],
            "out_dir": "out"
        }"#,
    )
    .unwrap();
    let out = run_in(&dir, &["fit", "--config", "fit.json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let criteria: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/criteria.json")).unwrap())
            .unwrap();
    // No events: lpml is exactly minus the integral term, hence negative.
    assert!(criteria["lpml"].as_f64().unwrap() < 0.0);
    let terms = std::fs::read_to_string(dir.join("out/event_terms.csv")).unwrap();
    assert_eq!(terms.lines().count(), 1, "no event rows expected");
}

#[test]
fn fit_missing_points_file_exits_4() {
    let dir = tmpdir("fit-missing");
    std::fs::write(
        dir.join("fit.json"),
        r#"{"points": "nope.csv", "covariates": [], "model": [], "seed": 1, "out_dir": "out"}"#,
    )
    .unwrap();
    let out = run_in(&dir, &["fit", "--config", "fit.json"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn select_earthquake_shaped_candidates_has_8_rows() {
    let dir = tmpdir("select-8");
    write_hpp_pattern(&dir, 60);
    std::fs::write(
        dir.join("select.json"),
        r#"{
            "points": "points.csv",
            "covariates": [
                {"kind": "coord_x"},
                {"kind": "coord_y"},
                {"kind": "distance_to", "cx": 0.7, "cy": 0.45, "name": "dist"}
            ],
            "candidates": {"all": {"include_homogeneous": true}},
            "mcmc": {"n_iter": 400, "burn_in": 200, "thin": 1},
            "seed": 4,
            "grid": [25, 25],
            "out_dir": "out"
        }"#,
    )
    .unwrap();
    let out = run_in(&dir, &["select", "--config", "select.json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("out/selection.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9, "header + 8 candidate rows");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/selection.json")).unwrap())
            .unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);
    // Mechanical winner re-check against the dic column.
    let rows = report["rows"].as_array().unwrap();
    let dics: Vec<f64> = rows
        .iter()
        .map(|r| r["dic"]["dic"].as_f64().unwrap())
        .collect();
    let argmin = dics
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert_eq!(report["winner_dic"].as_u64().unwrap() as usize, argmin);
}

#[test]
fn study_rerun_produces_identical_files() {
    let dir = tmpdir("study-det");
    std::fs::write(
        dir.join("study.json"),
        r#"{
            "preset": 2,
            "replicates": 2,
            "seed": 10,
            "mcmc": {"n_iter": 400, "burn_in": 200, "thin": 1}
        }"#,
    )
    .unwrap();
    // Different worker counts must not change the report.
    let a = run_in(
        &dir,
        &[
            "study",
            "--config",
            "study.json",
            "--jobs",
            "1",
            "--out-dir",
            "a",
        ],
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run_in(
        &dir,
        &[
            "study",
            "--config",
            "study.json",
            "--jobs",
            "3",
            "--out-dir",
            "b",
        ],
    );
    assert!(b.status.success());
    for f in ["study.csv", "study_diffs.csv", "study.json"] {
        assert_eq!(
            read(&dir, &format!("a/{f}")),
            read(&dir, &format!("b/{f}")),
            "{f} differs between identical runs"
        );
    }
}

#[test]
fn oracle_fixture_final_row_converges() {
    let dir = tmpdir("oracle-fix");
    let out = run_in(&dir, &["oracle", "--fixture", "--out-dir", "out"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.join("out/oracle.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "200");
    let diff: f64 = fields[3].parse().unwrap();
    assert!(diff < 1e-2, "final |oracle - lpml| = {diff}");
}
