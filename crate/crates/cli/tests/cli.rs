use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn laakso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laakso")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let out = laakso(args);
    let code = out.status.code().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let doc = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap() };
    (code, doc)
}

/// CSV rows below the header, comment lines dropped.
fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn spectrum_matches_the_reference_table() {
    let (code, doc) = json(&["spectrum", "-j", "2,3", "--count", "20", "--expect", "table1"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["table1_diffs"].as_array().unwrap().len(), 0);
    let entries = doc["result"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 20);
    let mults: Vec<&str> = entries.iter().map(|e| e["multiplicity"].as_str().unwrap()).collect();
    assert_eq!(mults[..7], ["1", "3", "1", "8", "1", "3", "26"]);
    assert_eq!(doc["config"]["sequence"], "2,3");
    assert_eq!(doc["config"]["count"], 20);
}

#[test]
fn short_table_fails_the_reference_diff() {
    let (code, doc) = json(&["spectrum", "-j", "2,3", "--count", "12", "--expect", "table1"]);
    assert_eq!(code, 3);
    assert_eq!(doc["result"]["table1_diffs"].as_array().unwrap().len(), 8);
}

#[test]
fn tiny_cutoff_gives_a_single_row() {
    let out = laakso(&["spectrum", "-j", "2", "--lambda-max", "0.5", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&out), vec![vec!["0".to_string(), "1".to_string()]]);
}

#[test]
fn explicit_prefix_caps_the_levels() {
    let (code, doc) = json(&["spectrum", "-j", "seq:2,3,2", "--lambda-max", "4000"]);
    assert_eq!(code, 0);
    let notes = doc["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("levels above 3")));
    assert_eq!(doc["result"]["deepest_level"], 3);

    // Same table as the periodic sequence restricted to levels 1..=3.
    let (_, periodic) = json(&["spectrum", "-j", "2,3", "--lambda-max", "4000", "--level", "3"]);
    assert_eq!(doc["result"]["entries"], periodic["result"]["entries"]);
}

#[test]
fn compare_constant_two_level_one() {
    let out = laakso(&["compare", "-j", "2", "-n", "1", "-m", "128", "-k", "8", "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out);
    let got: Vec<(f64, &str)> = rows
        .iter()
        .filter(|r| r[6] == "match")
        .map(|r| (r[2].parse::<f64>().unwrap(), r[3].as_str()))
        .collect();
    let want = [(0.0, "1"), (PI * PI, "3"), (4.0 * PI * PI, "1"), (9.0 * PI * PI, "3")];
    assert_eq!(got.len(), 4);
    for ((v, m), (wv, wm)) in got.iter().zip(want) {
        assert_eq!(*m, wm);
        assert!((v - wv).abs() <= 5e-3 * wv.max(1.0));
    }
}

#[test]
fn compare_unit_interval() {
    let (code, doc) = json(&["compare", "-j", "2,3", "-n", "0", "-m", "99", "-k", "4"]);
    assert_eq!(code, 0);
    let rows = doc["result"]["rows"].as_array().unwrap();
    for (k, row) in rows.iter().take(4).enumerate() {
        let want = (k as f64 * PI).powi(2);
        assert_eq!(row["status"], "match");
        assert_eq!(row["numeric_multiplicity"], 1);
        assert!((row["numeric"].as_f64().unwrap() - want).abs() <= 5e-3 * want.max(1.0));
    }
}

#[test]
fn compare_level_three() {
    let (code, doc) = json(&["compare", "-j", "2,3", "-n", "3", "-m", "64", "-k", "20"]);
    assert_eq!(code, 0);
    let rows = doc["result"]["rows"].as_array().unwrap();
    let matched = rows.iter().filter(|r| r["status"] == "match").count();
    assert!(matched >= 6);
    for r in rows.iter().filter(|r| r["status"] == "match") {
        assert_eq!(r["numeric_multiplicity"], r["analytic_multiplicity"]);
        assert!(r["relative_error"].as_f64().unwrap() <= 5e-3);
    }
}

#[test]
fn compare_flags_a_mismatch() {
    // A value tolerance no discretization can meet.
    let (code, doc) = json(&["compare", "-j", "2", "-n", "1", "-m", "16", "-k", "8", "--value-tol", "1e-12"]);
    assert_eq!(code, 3);
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["status"] == "missing" || r["status"] == "value-mismatch"));
}

#[test]
fn dims_for_two_three() {
    let (code, doc) = json(&["dims", "-j", "2,3"]);
    assert_eq!(code, 0);
    let q = 24f64.ln() / 6f64.ln();
    let r = &doc["result"];
    assert!((r["hausdorff"].as_f64().unwrap() - q).abs() < 1e-14);
    assert!((r["spectral"].as_f64().unwrap() - q).abs() < 1e-14);
    assert_eq!(r["walk"].as_f64().unwrap(), 2.0);
}

#[test]
fn heat_fit_recovers_dimension_two() {
    let (code, doc) = json(&["heat", "-j", "2", "--t", "1e-9:1e-5:40log", "--fit-ds"]);
    assert_eq!(code, 0);
    let ds = doc["result"]["fitted_spectral_dimension"].as_f64().unwrap();
    assert!((ds - 2.0).abs() < 0.01, "{ds}");
    assert_eq!(doc["result"]["samples"].as_array().unwrap().len(), 40);
}

#[test]
fn heat_asymptotic_columns() {
    let out = laakso(&["heat", "-j", "2,3", "--t", "1e-8:1e-6:5log", "--asymptotic", "--format", "csv"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r[5].parse::<f64>().unwrap().abs() < 1e-3);
    }
    // Other sequences have no leading-term formula.
    let (code, doc) = json(&["heat", "-j", "3", "--t", "1e-4", "--asymptotic"]);
    assert_eq!(code, 0);
    assert!(doc["notes"][0].as_str().unwrap().contains("ignored"));
}

#[test]
fn zeta_closed_and_direct_agree() {
    let (code, doc) = json(&["zeta", "-j", "2,3", "-s", "2;1.5+3i", "-s", "0"]);
    assert_eq!(code, 0);
    let rows = doc["result"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows[..2] {
        for i in 0..2 {
            let (a, b) = (r["closed"][i].as_f64().unwrap(), r["direct"]["value"][i].as_f64().unwrap());
            assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
    assert!((rows[2]["closed"][0].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!(rows[2]["direct"].is_null());
}

#[test]
fn zeta_at_a_pole_is_a_numerical_failure() {
    let out = laakso(&["zeta", "-j", "2", "-s", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pole"));
}

#[test]
fn poles_for_constant_two() {
    let out = laakso(&["poles", "-j", "2", "-m", "-3:3", "--format", "csv"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 7);
    let spacing = PI / 2f64.ln();
    for r in rows {
        assert_eq!(r[0], "leading");
        let m: f64 = r[1].parse().unwrap();
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
        assert!((r[3].parse::<f64>().unwrap() - m * spacing).abs() < 1e-12);
    }
}

#[test]
fn validation_errors_exit_one() {
    for args in [
        &["spectrum", "-j", "1", "--count", "3"][..],
        &["spectrum", "--count", "3"],
        &["spectrum", "-j", "2"],
        &["dims", "-j", "seq:2,3"],
        &["heat", "-j", "2", "--t", "1e-3:1e-1:10"],
        &["poles", "-j", "2", "-m", "3:-3"],
        &["zeta", "-j", "2", "-s", "abc"],
        &["spectrum", "-j", "2", "--count", "20", "--expect", "table1"],
        &["frobnicate", "-j", "2"],
    ] {
        let out = laakso(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn output_files_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("run{i}.json"));
            let out = laakso(&[
                "compare", "-j", "2,3", "-n", "2", "-m", "12", "--seed", "7", "--out", path.to_str().unwrap(),
            ]);
            assert!(out.status.success());
            assert!(out.stdout.is_empty());
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let doc: Value = serde_json::from_slice(&runs[0]).unwrap();
    assert_eq!(doc["config"]["seed"], 7);
    assert_eq!(doc["config"]["mesh"], 12);
}

#[test]
fn sequential_and_parallel_results_agree() {
    let args = ["heat", "-j", "2,3", "--t", "1e-6:1e-2:30log"];
    let (_, a) = json(&args);
    let (_, b) = json(&[&args[..], &["--sequential"]].concat());
    assert_eq!(a["result"], b["result"]);
    assert_eq!(b["config"]["execution"], "sequential");
}
