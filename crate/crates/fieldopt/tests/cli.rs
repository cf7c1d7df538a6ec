//! End-to-end checks of the `fieldopt` binary: exit codes, artifacts, and
//! the comparison pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fieldopt"))
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fieldopt_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_produces_artifacts_and_exit_zero() {
    let dir = work_dir("run");
    let config = write_config(
        &dir,
        "camel.json",
        r#"{
  "scenario": "benchmark",
  "function": "camel",
  "algorithm": "mcs-1",
  "budget": 120,
  "trials": 1,
  "output": "out"
}"#,
    );
    let status = bin().arg("run").arg(&config).status().unwrap();
    assert!(status.success());
    for name in ["trial_001.csv", "summary.csv", "budget_snapshots.csv", "beanplot.csv"] {
        assert!(dir.join("out").join(name).exists(), "{name}");
    }
    let trace = fs::read_to_string(dir.join("out/trial_001.csv")).unwrap();
    assert!(trace.starts_with("eval_index,value,best_so_far\n"));
    assert_eq!(trace.lines().count(), 121); // header + one row per eval
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn out_flag_overrides_config_output() {
    let dir = work_dir("outflag");
    let config = write_config(
        &dir,
        "camel.json",
        r#"{
  "scenario": "benchmark",
  "function": "camel",
  "algorithm": "gps",
  "budget": 60,
  "trials": 1,
  "output": "ignored"
}"#,
    );
    let out = dir.join("elsewhere");
    let status = bin()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("summary.csv").exists());
    assert!(!dir.join("ignored").exists());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = work_dir("badcfg");
    // Unknown algorithm.
    let bad_algo = write_config(
        &dir,
        "bad_algo.json",
        r#"{"scenario": "benchmark", "function": "camel", "algorithm": "simplex", "budget": 10}"#,
    );
    let status = bin().arg("validate").arg(&bad_algo).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // Malformed JSON gets line/column diagnostics.
    let broken = write_config(&dir, "broken.json", "{\n  \"scenario\": \n}");
    let output = bin().arg("validate").arg(&broken).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("broken.json:"), "{stderr}");

    // Deterministic algorithm with several trials.
    let multi = write_config(
        &dir,
        "multi.json",
        r#"{"scenario": "benchmark", "function": "camel", "algorithm": "mcs-2", "budget": 10, "trials": 3}"#,
    );
    let status = bin().arg("validate").arg(&multi).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn validate_accepts_bundled_scenarios() {
    let dir = work_dir("bundled");
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let config = write_config(
        &dir,
        "placement.json",
        &format!(
            r#"{{
  "scenario": "placement",
  "model": "{}",
  "algorithm": "mcs-4",
  "budget": 30,
  "trials": 1,
  "output": "out"
}}"#,
            data.join("five_spot_placement_15x15.json").display()
        ),
    );
    let status = bin().arg("validate").arg(&config).status().unwrap();
    assert!(status.success());
    let status = bin().arg("run").arg(&config).status().unwrap();
    assert!(status.success());
    let summary = fs::read_to_string(dir.join("out/summary.csv")).unwrap();
    assert!(summary.contains("mcs-4,1,"), "{summary}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn sequential_config_runs_and_compares() {
    let dir = work_dir("seq");
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let model = data.join("joint_channel_9x9.json");
    let seq = write_config(
        &dir,
        "seq.json",
        &format!(
            r#"{{
  "scenario": "joint-sequential",
  "model": "{}",
  "algorithm": "mcs-1-mcs-1",
  "budget": 200,
  "placement_stage_budget": 20,
  "control_stage_budget": 30,
  "trials": 1,
  "output": "out_seq"
}}"#,
            model.display()
        ),
    );
    let sim = write_config(
        &dir,
        "sim.json",
        &format!(
            r#"{{
  "scenario": "joint-simultaneous",
  "model": "{}",
  "algorithm": "mcs-1",
  "budget": 200,
  "trials": 1,
  "output": "out_sim"
}}"#,
            model.display()
        ),
    );
    assert!(bin().arg("run").arg(&seq).status().unwrap().success());
    assert!(bin().arg("run").arg(&sim).status().unwrap().success());
    // Sequential trace length equals the total budget.
    let trace = fs::read_to_string(dir.join("out_seq/trial_001.csv")).unwrap();
    assert_eq!(trace.lines().count(), 201);

    let cmp = dir.join("comparison.csv");
    let status = bin()
        .arg("compare")
        .arg(dir.join("out_seq"))
        .arg(dir.join("out_sim"))
        .arg("--out")
        .arg(&cmp)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&cmp).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("mcs-1-mcs-1"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn list_algorithms_names_all_ids() {
    let output = bin().arg("list-algorithms").output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    for id in [
        "mcs-1", "mcs-2", "mcs-3", "mcs-4", "mcs-5", "mcs-6", "mcs-7", "gps", "pso", "cmaes",
    ] {
        assert!(text.contains(id), "missing {id}");
    }
}

#[test]
fn compare_needs_two_directories() {
    let dir = work_dir("cmp1");
    let status = bin()
        .arg("compare")
        .arg(&dir)
        .arg("--out")
        .arg(dir.join("c.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn bundled_scenario_files_match_their_builders() {
    use fieldopt::scenario::*;
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let cases: Vec<(&str, ScenarioFile)> = vec![
        ("placement_six_well_19x28.json", placement_six_well_scenario()),
        ("five_spot_control_51x51.json", five_spot_control_scenario(8)),
        (
            "five_spot_control_51x51_single_period.json",
            five_spot_control_scenario(1),
        ),
        ("five_spot_placement_15x15.json", five_spot_placement_scenario()),
        ("joint_channel_9x9.json", joint_channel_scenario()),
        ("angled_placement_20x20x5.json", angled_placement_scenario()),
    ];
    for (name, built) in cases {
        let text = fs::read_to_string(data.join(name)).unwrap();
        let loaded: ScenarioFile = serde_json::from_str(&text).unwrap();
        assert_eq!(loaded, built, "{name} drifted from its builder");
    }
}
