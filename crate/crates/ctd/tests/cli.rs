use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ctd::output::without_timestamp;

fn ctd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctd")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_at_infinite_temperature_is_arc_length() {
    let o = ctd(&["analyze", "--beta", "0", "--epsilon", "0.1", "--truncation", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 5);
    let bg: f64 = rows[4][3].parse().unwrap();
    let expected = 1.0 - (2e-3 + 2e-9) / (2.0 * std::f64::consts::PI);
    assert!((bg - expected).abs() < 1e-12, "{bg}");
    for r in &rows {
        assert!(r[4].parse::<f64>().unwrap().abs() < 1e-12);
    }
}

#[test]
fn analyze_schedule_marks_its_own_well() {
    let o = ctd(&["analyze", "--schedule", "2..8", "--truncation", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 7 * 11);
    for (k, chunk) in rows.chunks(11).enumerate() {
        assert_eq!(chunk[0][5], (k + 2).to_string());
    }
}

#[test]
fn malformed_config_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let out = dir.path().join("out.csv");
    fs::write(&cfg, "epsilon=0.1\ntruncation=four\n").unwrap();
    let o = ctd(&["analyze", "--config", path_str(&cfg), "--beta", "1", "--out", path_str(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("truncation"));
    assert!(!out.exists());
    let o = ctd(&["analyze", "--epsilon", "2", "--beta", "1", "--out", path_str(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn schedule_has_ratio_six_and_alternates() {
    let o = ctd(&["schedule", "--schedule", "2..10", "--epsilon", "0.1", "--truncation", "12"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 9);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[2], if i % 2 == 0 { "F" } else { "AF" });
        if i > 0 {
            let ratio: f64 = r[3].parse().unwrap();
            assert!((ratio - 6.0).abs() < 1e-9, "{ratio}");
        }
    }
}

#[test]
fn infeasible_schedule_exit_code() {
    let o = ctd(&["schedule", "--schedule", "1..3", "--epsilon", "0.9", "--truncation", "5"]);
    assert_eq!(code(&o), 4);
    assert!(o.stdout.is_empty());
}

#[test]
fn sample_writes_one_row_per_bond_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sample".to_string(),
            "--beta".into(),
            "20".into(),
            "--epsilon".into(),
            "0.25".into(),
            "--truncation".into(),
            "4".into(),
            "--dims".into(),
            "50".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let run = |out: &Path| {
        let argv = args(out);
        ctd(&argv.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(code(&run(&a)), 0);
    assert_eq!(code(&run(&b)), 0);
    let ta = fs::read_to_string(&a).unwrap();
    let tb = fs::read_to_string(&b).unwrap();
    assert_eq!(data_rows(&ta).len(), 49);
    assert_eq!(without_timestamp(&ta), without_timestamp(&tb));
}

#[test]
fn missing_seed_is_an_error() {
    let o = ctd(&["sample", "--beta", "1", "--epsilon", "0.25", "--truncation", "4", "--dims", "10"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"));
    let o = ctd(&["mcmc", "--beta", "1", "--epsilon", "0.25", "--truncation", "4", "--dims", "10"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn regime_violation_names_the_width() {
    let o = ctd(&["sample", "--beta", "1", "--epsilon", "0.1", "--truncation", "4", "--dims", "10", "--seed", "1"]);
    assert_eq!(code(&o), 3);
    let e = stderr(&o);
    assert!(e.contains("regime violation") && e.contains("half-width"), "{e}");
    assert!(o.stdout.is_empty());
}

fn assert_rerun_identical(args: &[&str], file: &str) {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join(file);
    let second = dir.path().join(format!("again-{file}"));
    let mut argv = args.to_vec();
    argv.extend(["--out", path_str(&first)]);
    let o = ctd(&argv);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = ctd(&["--config", path_str(&first), "--out", path_str(&second)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = fs::read_to_string(&first).unwrap();
    let b = fs::read_to_string(&second).unwrap();
    assert_eq!(without_timestamp(&a), without_timestamp(&b));
}

#[test]
fn rerun_from_header_reproduces_files() {
    assert_rerun_identical(&["analyze", "--beta", "0,3.5,900", "--epsilon", "0.2", "--truncation", "5"], "a.csv");
    assert_rerun_identical(
        &["analyze", "--schedule", "1..4", "--mode", "paper", "--format", "json"],
        "a.json",
    );
    assert_rerun_identical(&["schedule", "--schedule", "2..6", "--format", "json"], "s.json");
    assert_rerun_identical(
        &["sample", "--beta", "7", "--epsilon", "0.3", "--truncation", "3", "--dims", "20", "--seed", "42"],
        "x.csv",
    );
    assert_rerun_identical(
        &[
            "mcmc", "--beta", "20", "--epsilon", "0.25", "--truncation", "4", "--dims", "8x8", "--sweeps", "300",
            "--burn-in", "100", "--thin", "20", "--seed", "9", "--w-global", "0.3", "--init", "neel",
        ],
        "m.csv",
    );
    assert_rerun_identical(
        &[
            "ctd-demo", "--schedule", "1..3", "--epsilon", "0.25", "--truncation", "4", "--dims", "64", "--sweeps",
            "200", "--seed", "3", "--seeds", "2", "--format", "json",
        ],
        "d.json",
    );
    assert_rerun_identical(&["verify", "--criteria", "3,4", "--epsilon", "0.2"], "v.json");
}

#[test]
fn mcmc_streams_records_and_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chain.csv");
    let o = ctd(&[
        "mcmc", "--beta", "20", "--epsilon", "0.25", "--truncation", "4", "--dims", "200", "--sweeps", "2000",
        "--burn-in", "500", "--thin", "10", "--seed", "1", "--out", path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 150);
    for r in &rows {
        let bonds: u64 = r[7..].iter().map(|c| c.parse::<u64>().unwrap()).sum();
        assert_eq!(bonds, 199);
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.with_extension("report.json")).unwrap()).unwrap();
    assert_eq!(report["records"], 150);
    let tv: f64 = report["total_variation"].as_str().unwrap().parse().unwrap();
    assert!(tv < 0.05, "{tv}");
}

#[test]
fn verify_passes_by_default_on_the_fast_criteria() {
    let o = ctd(&["verify", "--criteria", "1,2,3,4,5,6,7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["first_failure"].is_null());
    assert_eq!(stderr(&o).lines().filter(|l| l.contains("PASS")).count(), 7);
}

#[test]
fn verify_reports_the_validity_precondition() {
    let o = ctd(&["verify", "--epsilon", "0.9", "--criteria", "1,4"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["precondition"]["passed"], false);
    assert!(v["precondition"]["reason"].as_str().unwrap().contains("epsilon"));
}

#[test]
fn tampered_tolerance_fails_its_criterion() {
    let o = ctd(&["verify", "--criteria", "3,4", "--set", "tol.offset_rel=1e-17"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["first_failure"]["id"], 4);
    assert!(v["first_failure"]["expected"].as_str().unwrap().contains("1e-17"));
    assert!(v["first_failure"]["actual"].is_string());
    assert_eq!(v["criteria"][0]["passed"], true);
}

#[test]
fn verify_writes_offset_and_convexity_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctd(&["verify", "--criteria", "4,6", "--tables", path_str(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let offsets = fs::read_to_string(dir.path().join("offsets.csv")).unwrap();
    assert!(offsets.contains("\nn_max,k,side,closed_form,direct,abs_diff\n"));
    assert_eq!(data_rows(&offsets).len(), 30 * 7 * 2);
    let convexity = fs::read_to_string(dir.path().join("convexity.csv")).unwrap();
    assert_eq!(data_rows(&convexity).len(), 101 * 60);
}

#[test]
fn unknown_flags_and_commands_are_config_errors() {
    assert_eq!(code(&ctd(&["frobnicate"])), 2);
    assert_eq!(code(&ctd(&["analyze", "--bogus", "1"])), 2);
    assert_eq!(code(&ctd(&["analyze", "--mode", "approx", "--beta", "1"])), 2);
    assert_eq!(code(&ctd(&["analyze"])), 2);
}
