//! End-to-end tests of the `anonelect` binary: exit codes, JSON outputs,
//! and conformance of every emitted artifact to the schemas shipped in
//! `schema/`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anonelect"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

// Parses stdout as JSON, ignoring any trailing "wrote <path>" line.
fn stdout_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stdout);
    let json_part: String = text
        .lines()
        .take_while(|l| !l.starts_with("wrote "))
        .collect::<Vec<_>>()
        .join("\n");
    serde_json::from_str(&json_part)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"))
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema")
}

fn assert_valid(schema_file: &str, instance: &serde_json::Value) {
    let schema_text = std::fs::read_to_string(schema_dir().join(schema_file))
        .unwrap_or_else(|e| panic!("reading {schema_file}: {e}"));
    let schema: serde_json::Value = serde_json::from_str(&schema_text).expect("schema parses");
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(
        errors.is_empty(),
        "instance violates {schema_file}: {errors:#?}"
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("file exists")).expect("valid JSON")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

// --- check -------------------------------------------------------------------

#[test]
fn check_reports_conditions_and_bezout() {
    // gcd(3, 5) = 1 divides d and is within the bound, but 3 shares gcd 3
    // with group size 3, so the optional-participation row is out.
    let out = run(&["check", "--n", "5", "--m", "3", "--d", "1"]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_valid("check.v1.json", &v);
    assert_eq!(v["in_m"], false);
    assert_eq!(v["gcd_divides_d"], true);
    assert_eq!(v["gcd_le_d"], true);
    assert_eq!(v["bezout"]["u"], 2);
    assert_eq!(v["bezout"]["v"], 1);

    // The transposed cell is feasible on every row.
    let out = run(&["check", "--n", "3", "--m", "5", "--d", "1"]);
    let v = stdout_json(&out);
    assert_valid("check.v1.json", &v);
    assert_eq!(v["in_m"], true);
    assert_eq!(v["gcd_divides_d"], true);
    assert_eq!(v["gcd_le_d"], true);
    assert_eq!(v["bezout"]["u"], 2);
    assert_eq!(v["bezout"]["v"], 3);
}

#[test]
fn check_infeasible_cell() {
    let out = run(&["check", "--n", "4", "--m", "6", "--d", "1"]);
    let v = stdout_json(&out);
    assert_valid("check.v1.json", &v);
    assert_eq!(v["in_m"], false);
    assert_eq!(v["gcd_mn"], 2);
    assert_eq!(v["gcd_divides_d"], false);
    assert_eq!(v["gcd_le_d"], false);
    assert_eq!(v["bezout"], serde_json::Value::Null);
}

#[test]
fn check_mixed_cell() {
    // gcd(4, 6) = 2 divides d = 2 and is within the bound, but register
    // count 4 shares gcd 4 with group size 4, so the optional-participation
    // row is infeasible.
    let out = run(&["check", "--n", "6", "--m", "4", "--d", "2"]);
    let v = stdout_json(&out);
    assert_eq!(v["in_m"], false);
    assert_eq!(v["gcd_divides_d"], true);
    assert_eq!(v["gcd_le_d"], true);
}

#[test]
fn check_rejects_bad_params() {
    let out = run(&["check", "--n", "0", "--m", "3", "--d", "1"]);
    assert_eq!(exit_code(&out), 2);
}

// --- simulate -----------------------------------------------------------------

#[test]
fn simulate_exact_election_and_trace_schema() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("trace.json");
    let out = run(&[
        "simulate",
        "--algorithm", "alg2",
        "--n", "5", "--m", "3", "--d", "1",
        "--schedule", "seeded:1",
        "-o", trace_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["leaders"], 1);
    assert_eq!(summary["classification"]["contract"]["kind"], "exact-d-ok");

    let trace = read_json(&trace_path);
    assert_valid("trace.v1.json", &trace);
}

#[test]
fn simulate_ladder_summary() {
    let out = run(&[
        "simulate",
        "--algorithm", "alg1",
        "--n", "3", "--m", "5", "--d", "1",
        "--schedule", "seeded:9",
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["leaders"], 1);
    assert_eq!(v["classification"]["contract"]["kind"], "d-election-ok");
    assert_eq!(v["invariant_violations"], 0);
}

#[test]
fn simulate_single_register_multi_leader() {
    let out = run(&[
        "simulate",
        "--algorithm", "alg3",
        "--n", "4", "--m", "1", "--d", "2",
        "--participation", "all",
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["leaders"], 2);
}

#[test]
fn simulate_rejects_invalid_config() {
    // The single-register algorithm needs m = 1.
    let out = run(&["simulate", "--algorithm", "alg3", "--n", "4", "--m", "2", "--d", "1"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn simulate_replay_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("trace.json");
    let out = run(&[
        "simulate",
        "--algorithm", "alg1",
        "--n", "4", "--m", "5", "--d", "2",
        "--schedule", "seeded:3",
        "--perms", "seeded:8",
        "--participation", "0,2,3",
        "-o", trace_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);

    let out = run(&["simulate", "--replay", trace_path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("byte-identical"));
}

#[test]
fn simulate_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    let cfg = serde_json::json!({
        "algorithm": "alg2",
        "params": {"n": 5, "m": 3, "d": 1},
        "schedule": {"policy": "seeded-random", "seed": 4},
        "permutations": {"policy": "identity"},
        "participation": [0, 1, 2, 3, 4],
        "step_bound": 50000
    });
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();

    // Flags win: switch the schedule seed.
    let out = run(&[
        "simulate",
        "--config", cfg_path.to_str().unwrap(),
        "--schedule", "seeded:11",
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["algorithm"], "alg2");
    assert_eq!(v["leaders"], 1);
}

// --- witness -------------------------------------------------------------------

#[test]
fn witness_two_process_cell() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("witness.json");
    let out = run(&[
        "witness",
        "--n", "2", "--m", "2", "--d", "1",
        "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&path);
    assert_valid("witness.v1.json", &v);
    assert_eq!(v["ring"]["delta"], 2);
    assert_eq!(v["q_class_symmetric"], true);
    assert_eq!(v["violates_delection"], true);
}

#[test]
fn witness_six_process_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("witness.json");
    let out = run(&[
        "witness",
        "--n", "6", "--m", "9", "--d", "2",
        "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = read_json(&path);
    assert_valid("witness.v1.json", &v);
    assert_eq!(v["k"], 6);
    assert_eq!(v["ring"]["delta"], 3);
    assert_eq!(v["ring"]["p_sets"], serde_json::json!([[0, 3], [1, 4], [2, 5]]));
    assert_eq!(v["ring"]["q_sets"], serde_json::json!([[0, 1, 2], [3, 4, 5]]));
}

#[test]
fn witness_refuses_feasible_parameters() {
    let out = run(&["witness", "--n", "3", "--m", "5", "--d", "1"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("feasible"));
}

// --- sweep ----------------------------------------------------------------------

#[test]
fn sweep_small_range_schema_and_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "sweep",
        "--n", "2:3", "--m", "1:3", "--d", "1:2",
        "--seeds", "3",
        "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&path);
    assert_valid("feasibility-report.v1.json", &v);
    assert_eq!(v["all_expected"], true);
    assert!(v["cells"].as_array().unwrap().len() > 0);
}

#[test]
fn sweep_budget_exceeded_is_config_error() {
    let out = run(&["sweep", "--n", "2:6", "--m", "1:8", "--seeds", "50", "--budget", "10"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn sweep_empty_range_is_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "sweep",
        "--n", "3:2", "--m", "1:1", "--d", "1:1",
        "--seeds", "1",
        "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = read_json(&path);
    assert_eq!(v["cells"].as_array().unwrap().len(), 0);
    assert_eq!(v["total_runs"], 0);
}

// --- explore --------------------------------------------------------------------

#[test]
fn explore_single_register_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("explore.json");
    let out = run(&[
        "explore",
        "--algorithm", "alg3",
        "--n", "2", "--m", "1", "--d", "1",
        "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let v = read_json(&path);
    assert_valid("explore.v1.json", &v);
    assert_eq!(v["report"]["outcomes"], serde_json::json!([1]));
    assert_eq!(v["report"]["cycle_detected"], false);
    assert_eq!(v["expected_outcomes_ok"], true);
}

#[test]
fn explore_capture_pair_elects_both() {
    let out = run(&["explore", "--algorithm", "alg2", "--n", "2", "--m", "2", "--d", "2"]);
    assert_eq!(exit_code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["report"]["outcomes"], serde_json::json!([2]));
}

// --- symmetry -------------------------------------------------------------------

#[test]
fn symmetry_suite_separates_rw_from_cas() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("symmetry.json");
    let out = run(&["symmetry", "-o", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&path);
    assert_valid("symmetry.v1.json", &v);
    assert_eq!(v["rw_all_symmetric"], true);
    assert_eq!(v["cas_contrast"]["diverged_on_cas"], true);
    assert!(v["rw_reports"].as_array().unwrap().len() >= 15);
}

// --- output directory env --------------------------------------------------------

#[test]
fn out_dir_env_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["check", "--n", "5", "--m", "3", "--d", "1", "-o", "check.json"])
        .env("ANONELECT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    assert!(dir.path().join("check.json").exists());
}
