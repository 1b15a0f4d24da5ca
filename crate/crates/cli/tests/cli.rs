use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn nilwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilwalk"))
        .args(args)
        .env("NILWALK_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nilwalk-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn example_5_6_is_two_bad_at_level_three() {
    let out = nilwalk(&["certify", "--catalog", "example_5_6", "--m", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["result"]["verdict"]["degenerate_level"], 3, "{}", v["result"]["verdict"]);
    let level3 = &v["result"]["levels"][2];
    assert_eq!(level3["p"], 3);
    assert_eq!(level3["outcome"]["status"], "degenerate");
    assert_eq!(v["provenance"]["seed"], 0);
    assert_eq!(v["provenance"]["algebra_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn triangular_three_is_two_great() {
    let out = nilwalk(&["certify", "--catalog", "triangular", "--s", "3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for level in v["result"]["levels"].as_array().unwrap() {
        assert_eq!(level["outcome"]["status"], "witness");
        assert!(level["outcome"]["k"].is_array());
    }
}

#[test]
fn broken_jacobi_is_a_violation() {
    let path = scratch("bad.json");
    fs::write(
        &path,
        r#"{"dim": 5, "brackets": [
            {"i": 1, "j": 2, "out": [{"k": 4, "num": 1, "den": 1}]},
            {"i": 4, "j": 3, "out": [{"k": 5, "num": 1, "den": 1}]}]}"#,
    )
    .unwrap();
    let out = nilwalk(&["check", "--algebra", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["result"]["violation"]["triple"], serde_json::json!([1, 2, 3]));
    let certify = nilwalk(&["certify", "--algebra", path.to_str().unwrap()]);
    assert_eq!(certify.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(nilwalk(&["check"]).status.code(), Some(2));
    assert_eq!(nilwalk(&["certify", "--catalog", "nonsense"]).status.code(), Some(2));
    assert_eq!(nilwalk(&["certify", "--catalog", "heisenberg", "--bogus"]).status.code(), Some(2));
    assert_eq!(nilwalk(&["lemma-a1", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn empty_word_budget_is_undetermined() {
    let out = nilwalk(&["words", "--catalog", "heisenberg", "--p", "1", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn words_find_a_pair_on_heisenberg() {
    let out = nilwalk(&["words", "--catalog", "heisenberg", "--p", "1", "--budget", "400"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["result"]["identity_pass"], true);
    assert!(v["result"]["diophantine"]["gamma_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn counterexample_reproduces() {
    let out = nilwalk(&["counterexample"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["result"]["reproduced"], true);
    assert_eq!(v["result"]["M1211_zero"], true);
}

#[test]
fn correlate_csv_is_deterministic() {
    let a = scratch("corr_a.csv");
    let b = scratch("corr_b.csv");
    for path in [&a, &b] {
        let out = nilwalk(&[
            "correlate", "--catalog", "heisenberg", "--lambda", "1,-1,0", "--N", "2", "--N", "8", "--samples", "3000",
            "--seed", "7", "--format", "csv", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next().unwrap(), "N,estimate,estimate_im,stderr,samples");
    assert_eq!(lines.count(), 2);
}

#[test]
fn gap_csv_has_lambda_columns() {
    let out = nilwalk(&["gap", "--catalog", "heisenberg", "--radius", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().skip(1);
    assert_eq!(lines.next().unwrap(), "lambda1,lambda2,lambda3,epsilon");
    assert_eq!(lines.count(), 24);
}

#[test]
fn center_character_is_rejected() {
    let out = nilwalk(&["correlate", "--catalog", "heisenberg", "--lambda", "0,0,1", "--N", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn clt_and_lemma_run() {
    let out = nilwalk(&["clt", "--catalog", "heisenberg", "--N", "64", "--samples", "500", "--seed", "3"]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let v = json_of(&out);
    assert!(v["result"]["report"]["sigma2_hat"].as_f64().unwrap() > 0.0);
    let lemma = nilwalk(&["lemma-a1", "--grid", "1001"]);
    assert_eq!(lemma.status.code(), Some(0));
    assert!(json_of(&lemma)["result"]["max_residual"].as_f64().unwrap() <= 1e-12);
}
