// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bench(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus/benches").join(name)
}

fn leakload(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leakload")).args(args).output().expect("spawn")
}

fn code(args: &[&str]) -> i32 {
    leakload(args).status.code().expect("exit code")
}

fn report(dir: &Path, vector: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("report_{vector}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn exit_codes() {
    let c17 = bench("c17.bench");
    let c17 = c17.to_str().unwrap();
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["estimate", "--netlist", c17, "--vector", "101"]), 5);
    assert_eq!(code(&["estimate", "--netlist", c17, "--preset", "D99"]), 5);
    assert_eq!(code(&["estimate", "--netlist", "missing.bench"]), 6);
    assert_eq!(code(&["estimate", "--netlist", c17, "--vector", "10101"]), 0);
    assert_eq!(code(&["estimate", "--netlist", c17, "--temp=-4"]), 5);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bench");
    std::fs::write(&bad, "INPUT(a)\nOUTPUT(y)\ny = MUX(a)\n").unwrap();
    assert_eq!(code(&["estimate", "--netlist", bad.to_str().unwrap()]), 3);
}

#[test]
fn empty_range_is_usage_error() {
    let args = ["characterize", "--preset", "D25-S", "--axis", "temp", "--from", "300", "--to", "300"];
    assert_eq!(code(&args), 2);
    let args = ["characterize", "--preset", "D25-S", "--axis", "temp", "--from", "300", "--to", "400", "--steps", "0"];
    assert_eq!(code(&args), 2);
    let out = leakload(&["characterize", "--preset", "D25-S", "--axis", "temp", "--from", "300", "--to", "400", "--steps", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("temperature,subject,"));
    assert!(text.lines().any(|l| l.starts_with("400,inv_avg,")));
}

#[test]
fn no_loading_reports_nominal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let c17 = bench("c17.bench");
    let args = ["estimate", "--netlist", c17.to_str().unwrap(), "--vector", "01110", "--no-loading", "--out", out];
    assert_eq!(code(&args), 0);
    let r = report(dir.path(), "01110");
    assert_eq!(r["loading"], Value::Bool(false));
    assert_eq!(r["nominal_total"], r["loaded_total"]);
}

#[test]
fn single_vector_sweep_matches_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let netlist = bench("nand_ladder.bench");
    let netlist = netlist.to_str().unwrap();
    assert_eq!(code(&["estimate", "--netlist", netlist, "--vector", "11011", "--out", out]), 0);
    assert_eq!(code(&["sweep", "--netlist", netlist, "--vector", "11011", "--out", out]), 0);
    let r = report(dir.path(), "11011");
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    assert_eq!(row[0], "11011");
    for (col, key) in [("nominal_itotal", "nominal_total"), ("loaded_itotal", "loaded_total")] {
        let k = header.iter().position(|h| *h == col).unwrap();
        let swept: f64 = row[k].parse().unwrap();
        let est = r[key]["itotal"].as_f64().unwrap();
        assert_eq!(swept, est, "{col}");
    }
}

#[test]
fn oracle_report_and_goldens_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let fan = bench("fanout_6x6.bench");
    assert_eq!(code(&["estimate", "--netlist", fan.to_str().unwrap(), "--vector", "0", "--oracle", "--out", out]), 0);
    let o: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle_0.json")).unwrap()).unwrap();
    assert_eq!(o["oracle"]["converged"], Value::Bool(true));

    let manifest = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus/manifest.kv");
    let o = leakload(&["goldens", "--manifest", manifest.to_str().unwrap(), "--check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn montecarlo_is_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(code(&["montecarlo", "--preset", "D25-S", "--samples", "20", "--seed", "3", "--out", out]), 0);
        std::fs::read(dir.path().join("mc_samples.csv")).unwrap()
    };
    assert_eq!(run(), run());
}
