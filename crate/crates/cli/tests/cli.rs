use std::process::{Command, Output};

use serde_json::Value;

fn arctic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arctic"))
        .args(args)
        .env_remove("ARCTIC_NUMERIC_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV table (comment lines and header dropped).
fn data_rows(text: &str) -> Vec<Vec<String>> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    csv::Reader::from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn unrefined_aztec_count() {
    let out = arctic(&["aztec", "exact", "--n", "6", "--w", "1", "--no-timestamp"]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows[0][6], "2097152");
}

#[test]
fn refined_count_matches_path_count() {
    let out = arctic(&[
        "aztec", "exact", "--n", "6", "--k", "2,5", "--l", "3,4", "--oracle",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(data_rows(&stdout(&out))[0][8], "true");
}

#[test]
fn large_refined_ratio_is_an_integer() {
    let out = arctic(&["aztec", "exact", "--n", "50", "--k", "3", "--l", "7"]);
    assert!(out.status.success());
    let ratio = &data_rows(&stdout(&out))[0][4];
    assert!(
        !ratio.contains('/') && ratio.chars().all(|c| c.is_ascii_digit()),
        "{ratio}"
    );
}

#[test]
fn asm_corner_difference_is_zero() {
    let out = arctic(&[
        "converge",
        "--model",
        "asm",
        "--n",
        "20,40",
        "--fixture",
        "corner",
        "--check",
        "0",
    ]);
    assert!(out.status.success());
    for row in data_rows(&stdout(&out)) {
        assert_eq!(row[5], "0");
    }
}

#[test]
fn difference_column_is_recomputable() {
    let out = arctic(&[
        "converge",
        "--model",
        "aztec",
        "--n",
        "40",
        "--r-grid",
        "0.5,1",
        "--no-timestamp",
    ]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 4);
    for row in rows {
        let (lat, pred, diff): (f64, f64, f64) = (
            row[3].parse().unwrap(),
            row[4].parse().unwrap(),
            row[5].parse().unwrap(),
        );
        assert!((lat - pred - diff).abs() < 1e-11, "{row:?}");
        assert!(diff < 0.0);
    }
}

#[test]
fn failing_check_exits_one() {
    let out = arctic(&[
        "converge", "--model", "aztec", "--n", "20", "--r-grid", "0.5", "--check", "1e-9",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stdout.is_empty(), "table is still written");
}

#[test]
fn mismatched_fixture_is_a_usage_error() {
    let out = arctic(&[
        "converge",
        "--model",
        "aztec",
        "--n",
        "20",
        "--fixture",
        "corner",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn closed_tangent_curve_has_small_residual() {
    for model in ["asm", "aztec"] {
        let out = arctic(&[
            "tangent", "--model", model, "--points", "12", "--format", "json",
        ]);
        assert!(out.status.success(), "{model}");
        let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
        let rows = doc["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 12);
        for row in rows {
            assert!(row["residual"].as_f64().unwrap().abs() < 1e-6);
        }
    }
}

#[test]
fn lattice_tangent_needs_an_order() {
    let out = arctic(&["tangent", "--model", "asm", "--source", "lattice"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn properties_pass_and_are_seeded() {
    let args = [
        "properties",
        "--tuples",
        "300",
        "--points",
        "30",
        "--seed",
        "7",
        "--no-timestamp",
    ];
    let (a, b) = (arctic(&args), arctic(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["passed"] == Value::Bool(true)));
}

#[test]
fn no_timestamp_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = (0..2)
        .map(|i| dir.path().join(format!("run{i}.csv")))
        .collect();
    for f in &files {
        let out = arctic(&[
            "asm",
            "count",
            "--n",
            "4,9",
            "--k",
            "2",
            "--no-timestamp",
            "--out",
            f.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let (a, b) = (
        std::fs::read(&files[0]).unwrap(),
        std::fs::read(&files[1]).unwrap(),
    );
    assert_eq!(a, b);
    assert!(!String::from_utf8(a).unwrap().contains("timestamp"));
    let stamped = stdout(&arctic(&["asm", "count", "--n", "4"]));
    assert!(stamped.contains("#timestamp="));
}

#[test]
fn json_mirrors_csv() {
    let base = [
        "lagrangean",
        "eval",
        "--model",
        "aztec",
        "--w",
        "2",
        "--t",
        "-0.4,0,0.7",
        "--no-timestamp",
    ];
    let csv_text = stdout(&arctic(&base));
    let mut json_args = base.to_vec();
    json_args.extend(["--format", "json"]);
    let doc: Value = serde_json::from_slice(&arctic(&json_args).stdout).unwrap();
    assert_eq!(doc["schema"], "lagrangean/1");
    assert_eq!(doc["metadata"]["model"], "aztec");
    let rows = data_rows(&csv_text);
    let json_rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), json_rows.len());
    for (c, j) in rows.iter().zip(json_rows) {
        assert_eq!(c[3].parse::<f64>().unwrap(), j["L"].as_f64().unwrap());
        assert_eq!(c[4].parse::<f64>().unwrap(), j["Lprime"].as_f64().unwrap());
    }
}

#[test]
fn asm_counts_agree_with_enumeration() {
    let out = arctic(&["asm", "count", "--n", "6", "--k", "1,2,3", "--oracle"]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(
        rows.iter().map(|r| r[2].as_str()).collect::<Vec<_>>(),
        ["429", "1287", "2002"]
    );
    assert!(rows.iter().all(|r| r[4] == "true"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(arctic(&["aztec", "exact"]).status.code(), Some(2));
    assert_eq!(
        arctic(&["aztec", "exact", "--n", "4", "--w", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        arctic(&["aztec", "exact", "--n", "4", "--k", "3,2", "--l", "1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        arctic(&[
            "lagrangean",
            "eval",
            "--model",
            "sixvertex",
            "--w1",
            "1",
            "--w2",
            "2",
            "--t",
            "0.3"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        arctic(&["lagrangean", "eval", "--model", "custom", "--t", "0.3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn bad_tolerance_override_exits_two() {
    let out = Command::new(env!("CARGO_BIN_EXE_arctic"))
        .args(["asm", "count", "--n", "3"])
        .env("ARCTIC_NUMERIC_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ARCTIC_NUMERIC_TOL"));
}
