use std::path::Path;
use std::process::{Command, Output};

use overbook::mtx::write_mtx_file;
use overbook::report::csv_body;
use overbook_core::SparseMatrix;
use serde_json::Value;

fn overbook(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overbook"))
        .args(args)
        .env_remove("OVERBOOK_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const BANDED: &str = "banded:80x60:4:0.5:0.02@3";

#[test]
fn simulate_writes_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = overbook(&[
            "simulate", "--workload", BANDED, "--capacity", "24", "--seed", "1", "--seed", "2",
            "--out", out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    let csv_a = std::fs::read_to_string(a.join("runs.csv")).unwrap();
    let csv_b = std::fs::read_to_string(b.join("runs.csv")).unwrap();
    assert!(csv_a.starts_with("# overbook"));
    assert_eq!(csv_body(&csv_a), csv_body(&csv_b));
    let body = csv_body(&csv_a);
    assert_eq!(body.lines().count(), 1 + 3 * 2);
    assert!(body.starts_with("workload,strategy,idiom,sweep_axis,sweep_value,seed,"));

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["baseline"], "uniform-shape");
    assert_eq!(summary["groups"].as_array().unwrap().len(), 3);
    assert_eq!(std::fs::read(a.join("summary.json")).unwrap(), std::fs::read(b.join("summary.json")).unwrap());
}

#[test]
fn sweep_from_spec_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"workloads": [{"name": "u", "generator": {"kind": "uniform-random", "density": 0.05,
             "rows": 50, "cols": 40, "seed": 2}}],
            "strategies": ["prescient", "swiftiles-overbook"],
            "config": {"capacity": 100},
            "sweep": {"axis": "y", "values": [0.0, 0.5]},
            "seeds": [0]}"#,
    )
    .unwrap();
    let out = overbook(&["sweep", "--config", spec.to_str().unwrap(), "--capacity", "16"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| &r[6] == "16"));
    assert_eq!(&rows[1][4], "0.5");

    let out = overbook(&["sweep", "--workload", BANDED, "--capacity", "16", "--sweep-k", "0,1,all"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 3 * 3);
}

#[test]
fn tile_stats_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let ident = dir.path().join("ident.mtx");
    write_mtx_file(&SparseMatrix::identity(6), &ident).unwrap();
    let v = stdout_json(&overbook(&["tile-stats", "--workload", ident.to_str().unwrap(), "--shape", "2x2", "--capacity", "1"]));
    assert_eq!(v["histogram"], serde_json::json!([[0, 6], [2, 3]]));
    assert_eq!(v["cdf"][1], serde_json::json!([2, 1.0]));
    assert_eq!(v["max_occupancy"], 2);

    let dense = dir.path().join("dense.mtx");
    write_mtx_file(&SparseMatrix::dense(4, 4), &dense).unwrap();
    let v = stdout_json(&overbook(&["tile-stats", "--workload", dense.to_str().unwrap(), "--size", "4", "--capacity", "4"]));
    assert_eq!(v["histogram"], serde_json::json!([[4, 4]]));
    assert_eq!(v["fraction_fitting"], 1.0);
}

#[test]
fn data_dir_resolves_relative_workloads() {
    let dir = tempfile::tempdir().unwrap();
    write_mtx_file(&SparseMatrix::identity(8), &dir.path().join("eye.mtx")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_overbook"))
        .args(["prescient", "--workload", "eye.mtx", "--capacity", "2"])
        .env("OVERBOOK_DATA_DIR", dir.path())
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    let v = stdout_json(&out);
    assert_eq!(v["max_occupancy"], 2);
    let flag = overbook(&["prescient", "--workload", "eye.mtx", "--capacity", "2", "--data-dir", dir.path().to_str().unwrap()]);
    assert_eq!(stdout_json(&flag), v);
}

#[test]
fn swiftiles_and_trace_outputs() {
    let v = stdout_json(&overbook(&["swiftiles", "--workload", BANDED, "--capacity", "16", "--y", "0.1", "--k", "all"]));
    assert!(v["samples"].as_u64().unwrap() > 0);
    assert!(v["qy"].as_u64().unwrap() > 0);

    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let out = overbook(&[
        "simulate", "--workload", BANDED, "--capacity", "8", "--strategy", "swiftiles-overbook", "--y", "1",
        "--trace", trace.to_str().unwrap(), "--out", dir.path().join("r").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> =
        std::fs::read_to_string(&trace).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(lines.iter().any(|e| e["op"] == "OwFill"));
    assert!(lines.iter().all(|e| e.get("fifo_offset").is_some() && e.get("mode").is_some()));
}

fn failure(args: &[&str]) -> (i32, String) {
    let out = overbook(args);
    assert!(!out.status.success());
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn error_paths_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad_mtx = dir.path().join("bad.mtx");
    std::fs::write(&bad_mtx, "%%MatrixMarket matrix coordinate real general\n2 2 1\n9 9 1\n").unwrap();
    let bad_spec = dir.path().join("bad.json");
    std::fs::write(&bad_spec, "{ not json").unwrap();
    let unwritable = Path::new("/proc/overbook-cannot-write/x.json");

    let cases = [
        failure(&["simulate", "--workload", "no/such/file.mtx"]),
        failure(&["simulate", "--workload", bad_mtx.to_str().unwrap()]),
        failure(&["sweep", "--config", bad_spec.to_str().unwrap()]),
        failure(&["simulate", "--workload", BANDED, "--y", "2"]),
        failure(&["simulate", "--workload", BANDED, "--strategy", "magic"]),
        failure(&["prescient", "--workload", BANDED, "--capacity", "0"]),
        failure(&["tile-stats", "--workload", BANDED, "--size", "4", "--capacity", "4", "--out", unwritable.to_str().unwrap()]),
        failure(&["simulate", "--config", dir.path().join("missing.json").to_str().unwrap()]),
        failure(&["frobnicate"]),
    ];
    let mut codes: Vec<i32> = cases.iter().map(|c| c.0).collect();
    assert_eq!(codes, vec![8, 4, 5, 6, 7, 9, 10, 3, 2]);
    codes.sort();
    codes.dedup();
    assert_eq!(codes.len(), cases.len());
    let messages: std::collections::BTreeSet<_> = cases.iter().map(|c| c.1.lines().next().unwrap().to_string()).collect();
    assert_eq!(messages.len(), cases.len());
    assert!(cases[1].1.contains("bad.mtx:3"));
}
