use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intweight"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn bounds_for_targets() {
    let out = run(&["bounds", "--N", "2", "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&out);
    assert!(report.to_string().contains("34992"));
    assert_eq!(report["config"]["command"], "bounds");
}

#[test]
fn schedule_for_sample_size() {
    let out = run(&[
        "bounds", "--n", "27", "--beta", "1", "--F", "0.5", "--K", "1", "--d", "1", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("16200000000000"));
}

#[test]
fn kron_search_finds_first_weight() {
    let out = run(&["kron-search", "--targets", "[0.5, 0.5]", "--eps", "0.2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(json(&out)["q"], "6");
}

#[test]
fn kron_search_reports_certificate_when_cap_too_small() {
    let out = run(&["kron-search", "--targets", "[0.5, 0.5]", "--eps", "0.2", "--cap", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let cert = json(&out).to_string();
    assert!(cert.contains("11"), "{cert}");
}

#[test]
fn kron_search_rejects_targets_outside_torus() {
    let out = run(&["kron-search", "--targets", "[1.5]", "--eps", "0.2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_function_is_a_validation_error() {
    let out = run(&["approximate", "--function", "nope", "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nope"));
}

#[test]
fn missing_flag_value_is_a_validation_error() {
    assert_eq!(run(&["bounds", "--N"]).status.code(), Some(3));
    assert_eq!(run(&["--workers", "0", "selftest"]).status.code(), Some(3));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn approximate_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let out = run(&[
        "approximate",
        "--function",
        "cosine:amp=0.5,freq=2",
        "--beta",
        "1",
        "--F",
        "1",
        "--K",
        "1",
        "--eps",
        "0.5",
        "--resolution",
        "256",
        "--grid-csv",
        grid.to_str().unwrap(),
        "--plot-points",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().next(), Some("x1,f,z"));
    assert_eq!(text.lines().count(), 10);
}

fn write(path: &Path, text: &str) -> String {
    fs::write(path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn fit_rejects_empty_and_malformed_data() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(&dir.path().join("empty.csv"), "");
    let out = run(&["fit", "--data", &empty, "--K", "1", "--M", "2"]);
    assert_eq!(out.status.code(), Some(3));

    let bad = write(&dir.path().join("bad.csv"), "x1,y\n0.1,0.2\n0.3,oops\n");
    let out = run(&["fit", "--data", &bad, "--K", "1", "--M", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn fit_simulated_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("data.csv");
    let saved_str = saved.to_str().unwrap();
    let first = run(&[
        "--seed", "3", "fit", "--simulate", "cosine", "--n", "40", "--d", "1", "--save-data", saved_str,
        "--K", "1", "--M", "2", "--cap", "2000",
    ]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let again = run(&["fit", "--data", saved_str, "--K", "1", "--M", "2", "--cap", "2000"]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    let (a, b) = (json(&first), json(&again));
    assert_eq!(a["q"], b["q"]);
    assert_eq!(a["risk"], b["risk"]);
}

fn small_config(dir: &Path) -> String {
    write(
        &dir.join("rate.json"),
        r#"{"function": "cosine:amp=0.5,freq=1", "d": 1, "beta": 1, "F": 0.5, "K": 1,
            "n_list": [8, 27, 64], "seeds": [1, 2], "caps": [2000], "mc_size": 2000}"#,
    )
}

#[test]
fn rate_study_table_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let table = dir.path().join("table.csv");
    let args = ["rate-study", "--config", &config, "--table", table.to_str().unwrap()];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let text = fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 5, "{text}");
    assert!(text.lines().next().unwrap().starts_with("n,M_n,q_cap"));

    let second = run(&[&["--workers", "1"][..], &args[..]].concat());
    assert!(first.stdout == second.stdout, "output depends on the worker count");
    assert_eq!(fs::read_to_string(&table).unwrap(), text);
}

#[test]
fn rate_config_lists_every_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        &dir.path().join("bad.json"),
        r#"{"function": "cosine", "n_list": [0], "mc_size": -1, "colour": "red"}"#,
    );
    let out = run(&["rate-study", "--config", &config]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    for field in ["n_list[0]", "mc_size", "colour"] {
        assert!(err.contains(field), "{field} missing from {err}");
    }
}

#[test]
fn csv_output_of_kron_search() {
    let out = run(&["--format", "csv", "kron-search", "--targets", "[0.5]", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let q = headers.iter().position(|h| h == "q").unwrap();
    assert_eq!(&row[q], "1");
}
