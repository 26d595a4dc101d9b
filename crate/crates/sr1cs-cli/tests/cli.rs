use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sr1cs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sr1cs")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Data rows of a trace or envelope CSV, without the manifest line and header.
fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).skip(1).map(str::to_owned).collect()
}

#[test]
fn quad_terminates_within_n_plus_one_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let run = sr1cs(&["quad", "--n", "20", "--kappa", "1e3", "--seed", "7", "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let summary = stdout_json(&run);
    assert!(summary["iterations"].as_u64().unwrap() <= 21);
    assert!(summary["applied_updates"].as_u64().unwrap() <= 20);
    let rows = data_rows(&out);
    assert!(rows.len() <= 22);
    let envelopes = data_rows(&dir.path().join("t.envelopes.csv"));
    assert_eq!(envelopes.len(), rows.len());
}

#[test]
fn quad_with_unit_condition_number_converges_in_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    for precision in ["f64", "f256"] {
        for form in ["direct", "factored"] {
            let run = sr1cs(&[
                "quad",
                "--n",
                "10",
                "--kappa",
                "1",
                "--precision",
                precision,
                "--form",
                form,
                "--out",
                path_str(&out),
            ]);
            assert_eq!(run.status.code(), Some(0), "{precision} {form}: {}", stderr(&run));
            assert_eq!(stdout_json(&run)["iterations"], 1, "{precision} {form}");
        }
    }
}

#[test]
fn quad_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let missing_out = sr1cs(&["quad", "--n", "5", "--kappa", "10"]);
    assert_eq!(missing_out.status.code(), Some(2));
    assert!(stderr(&missing_out).contains("Usage"));
    for bad in [["--n", "0", "--kappa", "10"], ["--n", "5", "--kappa", "0.5"], ["--n", "5", "--kappa", "nan"]] {
        let mut args = vec!["quad"];
        args.extend(bad);
        args.extend(["--out", path_str(&out)]);
        assert_eq!(sr1cs(&args).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn logistic_reports_local_condition_and_default_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lg.csv");
    let run = sr1cs(&[
        "logistic",
        "--m",
        "200",
        "--n",
        "30",
        "--method",
        "sr1_cs",
        "--m-const",
        "1",
        "--warm-start",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let summary = stdout_json(&run);
    assert_eq!(summary["termination"], "GradTol");
    assert!(summary["local_condition"]["satisfied"].is_boolean());
    assert!(summary["local_condition"]["threshold"].as_f64().unwrap() > 0.0);
    assert!((summary["gamma"].as_f64().unwrap() - 1.0 / 2000.0).abs() < 1e-18);

    let text = fs::read_to_string(&out).unwrap();
    let manifest: Value = serde_json::from_str(text.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    assert!((manifest["constants"]["gamma"].as_f64().unwrap() - 1.0 / 2000.0).abs() < 1e-18);
    assert_eq!(manifest["method"], "sr1_cs");
    assert!(dir.path().join("lg.envelopes.csv").exists());
}

#[test]
fn logistic_runs_every_method_on_a_dataset_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    let gen = sr1cs(&["gen", "--m", "40", "--n", "5", "--seed", "3", "--out", path_str(&data)]);
    assert_eq!(gen.status.code(), Some(0));
    let out = dir.path().join("lg.csv");
    for method in ["sr1", "sr1_cs", "bfgs", "newton"] {
        let run = sr1cs(&["logistic", "--data", path_str(&data), "--method", method, "--out", path_str(&out)]);
        assert_eq!(run.status.code(), Some(0), "{method}: {}", stderr(&run));
        assert_eq!(stdout_json(&run)["method"], method);
    }
}

#[test]
fn logistic_parse_error_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.txt");
    fs::write(&data, "+1 1:0.5\n-1 2:x\n").unwrap();
    let run = sr1cs(&["logistic", "--data", path_str(&data), "--out", path_str(&dir.path().join("o.csv"))]);
    assert_eq!(run.status.code(), Some(1));
    assert!(stderr(&run).contains("line 2"), "{}", stderr(&run));
}

#[test]
fn bounds_prints_starting_moments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let run = sr1cs(&["bounds", "--n", "10", "--kappa", "100", "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let summary = stdout_json(&run);
    let sr1cs_k0 = summary["starting_moments"]["sr1_cs"].as_f64().unwrap();
    assert!((sr1cs_k0 - 161.7).abs() < 0.05, "{sr1cs_k0}");
    assert!(summary["local_satisfied"].is_null());
    assert_eq!(data_rows(&out).len(), 100);

    let with_lambda = sr1cs(&[
        "bounds",
        "--n",
        "10",
        "--kappa",
        "100",
        "--lambda0",
        "1e-6",
        "--m-const",
        "1",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(stdout_json(&with_lambda)["local_satisfied"], true);
}

#[test]
fn bounds_with_zero_horizon_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let run = sr1cs(&["bounds", "--n", "10", "--kappa", "100", "--k-max", "0", "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1);
    let bad = sr1cs(&["bounds", "--n", "10", "--kappa", "-1", "--out", path_str(&out)]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_lemma_suite_passes() {
    let run = sr1cs(&["verify", "--suite", "lemmas", "--cases", "1000", "--seed", "1"]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    let summary = stdout_json(&run);
    assert_eq!(summary["suite"], "lemmas");
    assert_eq!(summary["passes"], 1000);
    assert_eq!(summary["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn verify_zero_cases_pass_with_warning() {
    let run = sr1cs(&["verify", "--suite", "lemmas", "--cases", "0"]);
    assert_eq!(run.status.code(), Some(0));
    assert!(stderr(&run).contains("zero cases"));
    assert_eq!(stdout_json(&run)["cases"], 0);
}

#[test]
fn verify_catches_a_corrupted_update() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("summary.json");
    let run =
        sr1cs(&["verify", "--suite", "lemmas", "--cases", "20", "--fault", "half-update", "--out", path_str(&out)]);
    assert_eq!(run.status.code(), Some(1));
    assert!(stderr(&run).contains("rank_drop"), "{}", stderr(&run));
    let written: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written, stdout_json(&run));
    assert!(!written["failures"].as_array().unwrap().is_empty());
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    for p in [&a, &b] {
        let run = sr1cs(&["gen", "--m", "30", "--n", "4", "--seed", "11", "--out", path_str(p)]);
        assert_eq!(run.status.code(), Some(0));
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let d = sr1cs::data::parse_libsvm(std::str::from_utf8(&text).unwrap()).unwrap();
    assert_eq!((d.labels.len(), d.features.cols()), (30, 4));

    let tiny = dir.path().join("tiny.txt");
    let run = sr1cs(&["gen", "--m", "1", "--n", "1", "--out", path_str(&tiny)]);
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&tiny).unwrap().lines().count(), 1);
    assert_eq!(sr1cs(&["gen", "--m", "0", "--n", "1", "--out", path_str(&tiny)]).status.code(), Some(2));
}
