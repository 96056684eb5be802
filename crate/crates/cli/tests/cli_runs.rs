use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ltbound(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltbound"))
        .args(args)
        .arg("--cache-dir")
        .arg(cache)
        .output()
        .expect("spawn ltbound")
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "ltbound failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gamma0_is_reported_to_four_places() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&ltbound(&["gamma0"], dir.path()));
    assert_eq!(r["tool"], "ltbound");
    assert_eq!(r["subcommand"], "gamma0");
    assert_eq!(r["results"]["gamma0_display"], "4.5860");
    let keys = [
        "version",
        "config",
        "input_hash",
        "provenance",
        "results",
        "warnings",
        "artifacts",
        "wall_clock_seconds",
    ];
    for k in keys {
        assert!(r.get(k).is_some(), "missing {k}");
    }
}

#[test]
fn renewal_check_holds() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&ltbound(&["renewal-check", "--L0", "3", "--n-max", "8"], dir.path()));
    assert_eq!(r["results"]["all_hold"], true);
}

#[test]
fn seeded_runs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "speed",
        "--L0",
        "2",
        "--c4",
        "0.5",
        "--num-excursions",
        "5000",
        "--num-replicas",
        "3",
        "--seed",
        "11",
    ];
    let a = report(&ltbound(&[&args[..], &["--threads", "1"]].concat(), dir.path()));
    let b = report(&ltbound(&[&args[..], &["--threads", "4"]].concat(), dir.path()));
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["input_hash"], b["input_hash"]);
}

#[test]
fn enumeration_cache_hits_and_recovers_from_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["enumerate", "--L0", "2", "--n-max", "6"];
    let first = report(&ltbound(&args, &cache));
    assert_eq!(first["provenance"], "computed");
    let second = report(&ltbound(&args, &cache));
    assert_eq!(second["provenance"], "cached");
    assert_eq!(first["results"], second["results"]);

    let entries: Vec<_> = fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(entries.len(), 1);
    let text = fs::read_to_string(&entries[0]).unwrap();
    let mut entry: Value = serde_json::from_str(&text).unwrap();
    entry["payload"]["n_max"] = Value::from(99);
    fs::write(&entries[0], entry.to_string()).unwrap();

    let third = report(&ltbound(&args, &cache));
    assert_eq!(third["provenance"], "computed");
    assert_eq!(third["results"], first["results"]);
    assert!(!third["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn cache_is_keyed_by_l0() {
    let dir = tempfile::tempdir().unwrap();
    let a = report(&ltbound(&["enumerate", "--L0", "2", "--n-max", "5"], dir.path()));
    let b = report(&ltbound(&["enumerate", "--L0", "3", "--n-max", "5"], dir.path()));
    assert_eq!(b["provenance"], "computed");
    assert_ne!(a["results"], b["results"]);
    assert_eq!(b["results"]["l0"], 3);
}

#[test]
fn artifacts_are_written_to_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = report(&ltbound(
        &[
            "sample-q",
            "--L0",
            "2",
            "--c4",
            "0.5",
            "--num-excursions",
            "50",
            "--seed",
            "3",
            "--output-dir",
            out.to_str().unwrap(),
        ],
        dir.path(),
    ));
    let csv = fs::read_to_string(out.join("regen_path.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("j,nu_j,sigma_j"));
    // j = 0, the first-class excursion, then 50 more.
    assert_eq!(lines.count(), 52);
    let saved: Value = serde_json::from_str(&fs::read_to_string(out.join("sample-q.json")).unwrap()).unwrap();
    assert_eq!(saved["results"], r["results"]);
    assert_eq!(r["results"]["length_bound_holds"], true);
}

#[test]
fn failures_exit_nonzero_with_an_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = ltbound(&["reject-bm", "--a", "5", "--seed", "1"], dir.path());
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["subcommand"], "reject-bm");
    assert_eq!(err["error"]["kind"], "invalid_parameter");

    let out = ltbound(&["speed", "--L0", "2", "--seed", "1", "--confidence", "1.5"], dir.path());
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn stochastic_subcommands_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = ltbound(&["speed", "--L0", "2"], dir.path());
    assert!(!out.status.success());
}
