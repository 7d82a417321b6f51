use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stabledt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabledt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    stabledt(&all)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn build_parity_reaches_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["build", "--target", "parity:1,2", "--n", "10", "--t", "4", "--delta", "0.1", "--eps", "0.1"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(tmp.path());
    assert_eq!(s["error_final"], 0.0);
    assert_eq!(s["size_final"], 4);
    for key in ["n", "target", "t", "delta", "eps", "d", "ns_initial", "depth_final", "wall_ms"] {
        assert!(s.get(key).is_some(), "missing {key}");
    }
    let trace = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,leaf,var,score,potential,error\n"));
    let sexp = fs::read_to_string(tmp.path().join("tree.sexp")).unwrap();
    assert!(sexp.starts_with("(split 1"));
    let json: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("tree.json")).unwrap()).unwrap();
    assert_eq!(json["type"], "split");
}

#[test]
fn build_dictator() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["build", "--target", "dictator:1", "--n", "5", "--t", "2", "--delta", "0.2", "--eps", "0.1"],
    );
    assert!(out.status.success());
    let s = summary(tmp.path());
    assert_eq!(s["size_final"], 2);
    assert_eq!(s["error_final"], 0.0);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let over_cap = run_in(
        tmp.path(),
        &["build", "--target", "parity:1,2", "--n", "25", "--t", "4", "--delta", "0.1", "--eps", "0.1"],
    );
    assert_eq!(over_cap.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&over_cap.stderr).contains("exceeds the cap"));

    for args in [
        vec!["build", "--target", "parity:1,2", "--n", "4", "--t", "4", "--delta", "1.5", "--eps", "0.1"],
        vec!["build", "--target", "parity:1,2", "--n", "4", "--t", "4"],
        vec!["build", "--target", "nonsense", "--n", "4", "--t", "4", "--delta", "0.1", "--eps", "0.1"],
        vec!["build", "--target", "parity:1,2", "--n", "2", "--t", "8", "--delta", "0.1", "--eps", "0.1"],
        vec!["build", "--target", "parity:1,2", "--n", "4", "--t", "4", "--delta", "0.1", "--eps", "0.1", "--mode", "sq:0"],
        vec!["baseline", "--target", "parity:1,2", "--n", "4", "--t", "4", "--impurity", "chi2"],
        vec!["verify", "--suite", "everything"],
    ] {
        let out = run_in(tmp.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    assert!(!tmp.path().join("summary.json").exists());
}

#[test]
fn baselines() {
    let cases: [(&[&str], f64); 3] = [
        (&["--impurity", "gini", "--tiebreak", "highvar", "--target", "parity:1,2", "--n", "10", "--t", "4"], 0.5),
        (&["--impurity", "entropy", "--target", "dictator:2", "--n", "6", "--t", "2"], 0.0),
        (&["--impurity", "km", "--target", "majority:1,2,3", "--n", "3", "--t", "8"], 0.0),
    ];
    for (args, expected) in cases {
        let tmp = tempfile::tempdir().unwrap();
        let mut all = vec!["baseline"];
        all.extend_from_slice(args);
        let out = run_in(tmp.path(), &all);
        assert!(out.status.success(), "{args:?}");
        assert_eq!(summary(tmp.path())["error_final"], expected, "{args:?}");
    }
}

fn compare_rows(dir: &Path) -> Vec<(String, usize, f64)> {
    let text = fs::read_to_string(dir.join("compare.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,size,error,potential"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn compare_parity_and_dictator() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["compare", "--target", "parity:1,2", "--n", "10", "--delta", "0.1", "--eps", "0.1", "--tiebreak", "highvar"],
    );
    assert!(out.status.success());
    for (method, size, error) in compare_rows(tmp.path()) {
        match method.as_str() {
            "noisy" => assert_eq!(error, if size >= 4 { 0.0 } else { 0.5 }),
            "gini" => assert_eq!(error, 0.5),
            other => panic!("unexpected method {other}"),
        }
    }

    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["compare", "--target", "dictator:3", "--n", "6", "--delta", "0.1", "--eps", "0.1"]);
    assert!(out.status.success());
    for (_, size, error) in compare_rows(tmp.path()) {
        if size >= 2 {
            assert_eq!(error, 0.0);
        }
    }

    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["compare", "--target", "corrupt:0.05:3:(dictator:1)", "--n", "10", "--preset", "general:2", "--eps", "0.1"],
    );
    assert!(out.status.success());
    let rows = compare_rows(tmp.path());
    assert!(rows.iter().any(|(m, _, e)| m == "noisy" && *e <= 0.05 + 0.1));
}

#[test]
fn identical_seeds_give_identical_artifacts() {
    let args = [
        "build", "--target", "dt:11:12", "--n", "8", "--t", "10", "--delta", "0.2", "--eps", "0.1",
        "--tiebreak", "random:5", "--mode", "sample:4000", "--seed", "3",
    ];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    for file in ["tree.sexp", "tree.json", "trace.csv", "queries.jsonl"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    let (mut sa, mut sb) = (summary(a.path()), summary(b.path()));
    sa.as_object_mut().unwrap().remove("wall_ms");
    sb.as_object_mut().unwrap().remove("wall_ms");
    assert_eq!(sa, sb);
}

#[test]
fn verify_fourier_passes() {
    let out = stabledt(&["verify", "--suite", "fourier", "--trials", "200", "--nmax", "10", "--seed", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS fourier/")).count() >= 5);
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_noise_covers_named_facts() {
    let out = stabledt(&["verify", "--suite", "noise", "--trials", "50", "--nmax", "8"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["jones_identity", "dt_ns_le_delta_log_s", "ns_le_ns_plus_twice_dist", "potential_telescoping"] {
        assert!(text.contains(&format!("PASS noise/{name}")), "{name}");
    }
}

#[test]
fn verify_builder_exhaustive() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("verify.json");
    let out = stabledt(&["verify", "--suite", "builder", "--nmax", "4", "--trials", "20", "--out", report.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS builder/case1_score_floor"));
    assert!(text.contains("PASS builder/depth_bound"));
    let json: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert!(json.as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn spectrum_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("maj.json");
    let out = stabledt(&["spectrum", "--target", "majority:1,2,3", "--n", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let json: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["n"], 3);
    let masks: Vec<u64> = json["entries"].as_array().unwrap().iter().map(|e| e["mask"].as_u64().unwrap()).collect();
    assert_eq!(masks, vec![1, 2, 4, 7]);
    assert_eq!(json["entries"][3]["coeff"], -0.5);

    let out = stabledt(&[
        "spectrum", "--target", "majority:1,2,3", "--n", "3", "--delta", "0.5", "--d", "1", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let json: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let coeffs: Vec<f64> = json["entries"].as_array().unwrap().iter().map(|e| e["coeff"].as_f64().unwrap()).collect();
    assert_eq!(coeffs, vec![0.25, 0.25, 0.25]);
}

#[test]
fn sq_modes_and_demo() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &["build", "--target", "parity:1,2", "--n", "6", "--t", "4", "--delta", "0.1", "--eps", "0.1", "--mode", "sq:0.01"],
    );
    assert!(out.status.success());
    let s = summary(tmp.path());
    assert_eq!(s["error_final"], 0.0);
    assert!(s["queries"].as_u64().unwrap() > 0);
    let ledger = fs::read_to_string(tmp.path().join("queries.jsonl")).unwrap();
    let first: Value = serde_json::from_str(ledger.lines().next().unwrap()).unwrap();
    for key in ["leaf", "subset", "tau", "backend", "value", "exact"] {
        assert!(first.get(key).is_some(), "{key}");
    }

    let out = stabledt(&["sq-demo", "--n", "10", "--k", "2", "--t", "4"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["noisy"]["error"], 0.0);
    assert!(report["baselines"].as_array().unwrap().iter().all(|b| b["error"] == 0.5));
}
