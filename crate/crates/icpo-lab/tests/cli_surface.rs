//! End-to-end checks of the command-line surface: artifact layout, config
//! validation messages, environment overrides, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use icpo_lab::cli::ComparisonSummary;
use icpo_lab::grpo::TRACE_HEADER;
use icpo_lab::multiturn::MtReport;
use icpo_lab::policy::PolicyParams;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_icpo-lab"));
    cmd.env_remove("ICPO_LAB_OUT");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().unwrap();
    assert!(
        output.status.success(),
        "command failed.\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn run_err(cmd: &mut Command) -> String {
    let output = cmd.output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

const QUICK_TRAIN: &str = r#"{
  "train": {"steps": 5, "batch_size": 8, "group_size": 4},
  "eval": {"n_tasks": 50, "seeds": [7, 8, 9]}
}
"#;

#[test]
fn help_lists_all_subcommands() {
    let output = run_ok(bin().arg("--help"));
    let text = String::from_utf8_lossy(&output.stdout);
    for name in ["train", "eval-mt", "compare", "report"] {
        assert!(text.contains(name), "help is missing `{name}`");
    }
}

#[test]
fn train_writes_seeded_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUICK_TRAIN);

    let mut artifacts = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let output = run_ok(
            bin()
                .args(["train", "--config"])
                .arg(&config)
                .env("ICPO_LAB_OUT", &out),
        );
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(stdout.contains("ICPO") && stdout.contains("seed 0"));

        let seed_dir = out.join("seed_0");
        let params_text = fs::read_to_string(seed_dir.join("params.json")).unwrap();
        let params: PolicyParams = serde_json::from_str(&params_text).unwrap();
        params.validate().unwrap();

        let trace = fs::read_to_string(seed_dir.join("trace.csv")).unwrap();
        let lines: Vec<&str> = trace.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 5);
        artifacts.push((params_text, trace));
    }
    assert_eq!(artifacts[0], artifacts[1]);
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUICK_TRAIN);
    let out = dir.path().join("out");
    let output = run_ok(
        bin()
            .args(["train", "--config"])
            .arg(&config)
            .args(["--seed", "9"])
            .env("ICPO_LAB_OUT", &out),
    );
    assert!(String::from_utf8_lossy(&output.stdout).contains("seed 9"));
    assert!(out.join("seed_9").join("params.json").is_file());
    assert!(!out.join("seed_0").exists());
}

#[test]
fn output_env_var_overrides_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
  "train": {"steps": 2, "batch_size": 4, "group_size": 4},
  "output_dir": "from_config"
}
"#,
    );
    let out = dir.path().join("from_env");
    run_ok(
        bin()
            .args(["train", "--config"])
            .arg(&config)
            .env("ICPO_LAB_OUT", &out)
            .current_dir(dir.path()),
    );
    assert!(out.join("seed_0").join("params.json").is_file());
    assert!(!dir.path().join("from_config").exists());
}

#[test]
fn eval_mt_writes_report_and_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUICK_TRAIN);
    let out = dir.path().join("out");
    run_ok(
        bin()
            .args(["train", "--config"])
            .arg(&config)
            .env("ICPO_LAB_OUT", &out),
    );
    let params = out.join("seed_0").join("params.json");
    let output = run_ok(
        bin()
            .args(["eval-mt", "--params"])
            .arg(&params)
            .arg("--config")
            .arg(&config)
            .env("ICPO_LAB_OUT", &out),
    );
    assert!(String::from_utf8_lossy(&output.stdout).contains("mt_accuracy"));

    let report_text = fs::read_to_string(out.join("mt_report.json")).unwrap();
    let report: MtReport = serde_json::from_str(&report_text).unwrap();
    assert_eq!(report.n_conversations, 50);

    let transcripts = fs::read_to_string(out.join("transcripts.jsonl")).unwrap();
    let lines: Vec<&str> = transcripts.lines().collect();
    assert_eq!(lines.len(), 50);
    for line in lines {
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["task_id", "turns", "final_correct"] {
            assert!(value.get(key).is_some(), "transcript line missing {key}");
        }
    }
}

#[test]
fn rejects_unknown_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"trian": {"steps": 5}}"#);
    let stderr = run_err(bin().args(["train", "--config"]).arg(&config));
    assert!(stderr.contains("trian"), "stderr: {stderr}");
}

#[test]
fn rejects_invalid_config_values_by_field() {
    let dir = tempfile::tempdir().unwrap();
    let clip = write_config(dir.path(), r#"{"train": {"clip": 1.5}}"#);
    let stderr = run_err(bin().args(["train", "--config"]).arg(&clip));
    assert!(stderr.contains("train.clip"), "stderr: {stderr}");

    let tasks = dir.path().join("tasks.json");
    fs::write(&tasks, r#"{"eval": {"n_tasks": 0}}"#).unwrap();
    let stderr = run_err(bin().args(["train", "--config"]).arg(&tasks));
    assert!(stderr.contains("eval.n_tasks"), "stderr: {stderr}");
}

#[test]
fn rejects_missing_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let stderr = run_err(
        bin()
            .args(["train", "--config"])
            .arg(dir.path().join("absent.json")),
    );
    assert!(stderr.starts_with("error: "), "stderr: {stderr}");
}

#[test]
fn rejects_invalid_params_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), QUICK_TRAIN);
    let params = dir.path().join("params.json");
    fs::write(
        &params,
        r#"{"w": [[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]], "temperature": 0.0}
"#,
    )
    .unwrap();
    let stderr = run_err(
        bin()
            .args(["eval-mt", "--params"])
            .arg(&params)
            .arg("--config")
            .arg(&config)
            .env("ICPO_LAB_OUT", dir.path().join("out")),
    );
    assert!(stderr.contains("params.temperature"), "stderr: {stderr}");
}

#[test]
fn report_names_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let stderr = run_err(bin().arg("report").arg(dir.path()));
    for artifact in ["summary.json", "entropy_compare.csv"] {
        assert!(stderr.contains(artifact), "stderr: {stderr}");
    }
}

#[test]
fn compare_rejects_too_few_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"eval": {"seeds": [1, 2]}}"#);
    let stderr = run_err(
        bin()
            .args(["compare", "--config"])
            .arg(&config)
            .env("ICPO_LAB_OUT", dir.path().join("out")),
    );
    assert!(stderr.contains("eval.seeds"), "stderr: {stderr}");
}

#[test]
fn compare_then_report_reprints_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{
  "train": {"steps": 5, "batch_size": 8, "group_size": 4},
  "eval": {"n_tasks": 30, "seeds": [1, 2, 3]}
}
"#,
    );
    let out = dir.path().join("out");
    run_ok(
        bin()
            .args(["compare", "--config"])
            .arg(&config)
            .env("ICPO_LAB_OUT", &out),
    );
    for seed in [1, 2, 3] {
        let seed_dir = out.join(format!("seed_{seed}"));
        for mode_dir in ["standard_rlvr", "icpo", "untrained"] {
            assert!(
                seed_dir.join(mode_dir).join("mt_report.json").is_file(),
                "missing mt_report for seed {seed} {mode_dir}"
            );
        }
        for mode_dir in ["standard_rlvr", "icpo"] {
            assert!(seed_dir.join(mode_dir).join("params.json").is_file());
            assert!(seed_dir.join(mode_dir).join("trace.csv").is_file());
        }
    }

    let summary_text = fs::read_to_string(out.join("summary.json")).unwrap();
    let summary: ComparisonSummary = serde_json::from_str(&summary_text).unwrap();
    let output = run_ok(bin().arg("report").arg(&out));
    let stdout = String::from_utf8_lossy(&output.stdout);
    for mode in ["STANDARD_RLVR", "ICPO", "UNTRAINED"] {
        assert!(stdout.contains(mode), "table is missing {mode}");
        let printed_mt = format!("{:.4}", summary.modes[mode].mt_accuracy.mean);
        assert!(
            stdout.contains(&printed_mt),
            "table is missing {mode} mt value {printed_mt}"
        );
    }
}
