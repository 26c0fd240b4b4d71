//! Experiment runner: config loading, the train / eval-mt / compare / report
//! commands, and plot-ready CSV emission.
//!
//! All artifacts are plain JSON and CSV. Runs are deterministic: identical
//! config and seeds produce byte-identical files. The `ICPO_LAB_OUT`
//! environment variable overrides the configured output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grpo::{train, TrainConfig, TrainMode, TrainTrace};
use crate::multiturn::{evaluate_multiturn, ConversationTranscript, MtReport};
use crate::policy::{
    mean_probe_entropy, mean_probe_mass, probe_features, PolicyParams, ResponseType,
};
use crate::reward::EXPECTED_TYPES;

use rand::SeedableRng;

/// Evaluation settings: conversations per seed and the seed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_tasks: usize,
    pub seeds: Vec<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_tasks: 2000,
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

/// Report-level knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub exclude_missing: bool,
    pub probe_size: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            exclude_missing: true,
            probe_size: 14,
        }
    }
}

/// Top-level experiment description loaded from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
    pub report: ReportOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("out"),
            report: ReportOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.eval.n_tasks < 1 {
            return Err(Error::config("eval.n_tasks", "must be at least 1"));
        }
        if self.eval.seeds.is_empty() {
            return Err(Error::config("eval.seeds", "at least one seed is required"));
        }
        if self.report.probe_size < 1 {
            return Err(Error::config("report.probe_size", "must be at least 1"));
        }
        Ok(())
    }

    /// Loads and validates a config file, applying the `ICPO_LAB_OUT`
    /// override when present.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        if let Ok(dir) = std::env::var("ICPO_LAB_OUT") {
            config.output_dir = PathBuf::from(dir);
        }
        config.validate()?;
        Ok(config)
    }
}

/// Mean and population standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

/// Seed-aggregated statistics for one policy variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeStats {
    pub mt_accuracy: MeanStd,
    pub final_probe_entropy: MeanStd,
    pub expected_type_mass: MeanStd,
    pub answer_attempt_rate: MeanStd,
}

/// The compare command's headline artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub modes: BTreeMap<String, ModeStats>,
    pub mt_improvement_vs_standard_pct: Option<f64>,
    pub mt_improvement_vs_untrained_pct: Option<f64>,
    pub seeds: Vec<u64>,
    pub n_tasks: usize,
}

pub const MODE_STANDARD: &str = "STANDARD_RLVR";
pub const MODE_ICPO: &str = "ICPO";
pub const MODE_UNTRAINED: &str = "UNTRAINED";

/// Fixed row order for tables and CSVs.
pub const MODE_ORDER: [&str; 3] = [MODE_STANDARD, MODE_ICPO, MODE_UNTRAINED];

#[derive(Parser)]
#[command(
    name = "icpo-lab",
    about = "Desk-scale policy-optimization laboratory: routed rewards, group-relative updates, and sharded multi-turn evaluation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one policy and write params.json and trace.csv
    Train {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Override the config's training seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate saved parameters over multi-turn conversations
    EvalMt {
        /// Policy parameters (JSON)
        #[arg(long)]
        params: PathBuf,
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
    },
    /// Train both regimes per seed and compare them with the untrained policy
    Compare {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the summary table from a compare output directory
    Report {
        /// Directory previously written by compare
        dir: PathBuf,
    },
}

/// Entry point for the binary: parses arguments, runs the command, and maps
/// failures to a nonzero exit code with a message on stderr.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train { config, seed } => cmd_train(&config, seed),
        Command::EvalMt { params, config } => cmd_eval_mt(&params, &config),
        Command::Compare { config } => cmd_compare(&config),
        Command::Report { dir } => cmd_report(&dir),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_trace(path: &Path, trace: &TrainTrace) -> Result<()> {
    let file = std::fs::File::create(path)?;
    trace.write_csv(file)
}

fn write_transcripts(path: &Path, transcripts: &[ConversationTranscript]) -> Result<()> {
    use std::io::Write;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for tr in transcripts {
        writeln!(file, "{}", tr.to_jsonl()?)?;
    }
    Ok(())
}

/// Trains one policy under the config's mode and seed (optionally
/// overridden) and writes artifacts under `output_dir/seed_<seed>/`.
pub fn cmd_train(config_path: &Path, seed_override: Option<u64>) -> Result<()> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed_override {
        config.train.seed = seed;
    }
    let dir = config
        .output_dir
        .join(format!("seed_{}", config.train.seed));
    std::fs::create_dir_all(&dir)?;
    let (params, trace) = train(&config.train)?;
    write_json(&dir.join("params.json"), &params)?;
    write_trace(&dir.join("trace.csv"), &trace)?;
    println!(
        "trained {} for {} steps (seed {}) -> {}",
        config.train.mode,
        config.train.steps,
        config.train.seed,
        dir.display()
    );
    Ok(())
}

fn load_params(path: &Path) -> Result<PolicyParams> {
    let text = std::fs::read_to_string(path)?;
    let params: PolicyParams = serde_json::from_str(&text)?;
    params.validate()?;
    Ok(params)
}

/// Evaluates saved parameters over multi-turn conversations using the first
/// evaluation seed; writes `mt_report.json` and `transcripts.jsonl`.
pub fn cmd_eval_mt(params_path: &Path, config_path: &Path) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let params = load_params(params_path)?;
    let seed = config.eval.seeds[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (report, transcripts) = evaluate_multiturn(
        &params,
        config.eval.n_tasks,
        &config.train.task,
        &config.train.env,
        &config.train.judge,
        &mut rng,
    )?;
    std::fs::create_dir_all(&config.output_dir)?;
    write_json(&config.output_dir.join("mt_report.json"), &report)?;
    write_transcripts(&config.output_dir.join("transcripts.jsonl"), &transcripts)?;
    println!(
        "evaluated {} conversations (seed {}): mt_accuracy {:.4} -> {}",
        config.eval.n_tasks,
        seed,
        report.mt_accuracy,
        config.output_dir.display()
    );
    Ok(())
}

struct SeedOutcome {
    mt_accuracy: f64,
    final_probe_entropy: f64,
    expected_type_mass: f64,
    answer_attempt_rate: f64,
    type_dist_excl: [f64; 6],
    bucket_accuracy: [f64; 5],
    no_attempt_fraction: f64,
    entropy_trace: Vec<f64>,
}

fn evaluate_variant(
    params: &PolicyParams,
    config: &ExperimentConfig,
    seed: u64,
    entropy_trace: Vec<f64>,
) -> Result<(SeedOutcome, MtReport)> {
    let probes = probe_features(config.report.probe_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (report, _) = evaluate_multiturn(
        params,
        config.eval.n_tasks,
        &config.train.task,
        &config.train.env,
        &config.train.judge,
        &mut rng,
    )?;
    let outcome = SeedOutcome {
        mt_accuracy: report.mt_accuracy,
        final_probe_entropy: mean_probe_entropy(params, &probes)?,
        expected_type_mass: mean_probe_mass(params, &probes, &EXPECTED_TYPES)?,
        answer_attempt_rate: mean_probe_mass(params, &probes, &[ResponseType::AnswerAttempt])?,
        type_dist_excl: report.type_distribution_excluding_missing,
        bucket_accuracy: report.bucket_accuracy,
        no_attempt_fraction: report.no_attempt_count as f64 / report.n_conversations as f64,
        entropy_trace,
    };
    Ok((outcome, report))
}

fn aggregate(outcomes: &[SeedOutcome]) -> ModeStats {
    let collect = |f: fn(&SeedOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(f).collect() };
    ModeStats {
        mt_accuracy: mean_std(&collect(|o| o.mt_accuracy)),
        final_probe_entropy: mean_std(&collect(|o| o.final_probe_entropy)),
        expected_type_mass: mean_std(&collect(|o| o.expected_type_mass)),
        answer_attempt_rate: mean_std(&collect(|o| o.answer_attempt_rate)),
    }
}

fn relative_improvement_pct(target: f64, baseline: f64) -> Option<f64> {
    if baseline > 0.0 {
        Some(100.0 * (target - baseline) / baseline)
    } else {
        None
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(std::fs::File::create(path)?))
}

/// Trains both regimes for every seed, evaluates them alongside the
/// untrained policy on the same task sequences, and writes `summary.json`
/// plus the entropy, type-distribution, and bucket-accuracy tables.
pub fn cmd_compare(config_path: &Path) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    if config.eval.seeds.len() < 3 {
        return Err(Error::config(
            "eval.seeds",
            "compare requires at least 3 seeds",
        ));
    }

    let mut outcomes: BTreeMap<&str, Vec<SeedOutcome>> = BTreeMap::new();
    for seed in &config.eval.seeds {
        let seed_dir = config.output_dir.join(format!("seed_{seed}"));
        for (mode, key) in [
            (TrainMode::StandardRlvr, MODE_STANDARD),
            (TrainMode::Icpo, MODE_ICPO),
        ] {
            let mut train_cfg = config.train.clone();
            train_cfg.mode = mode;
            train_cfg.seed = *seed;
            let (params, trace) = train(&train_cfg)?;
            let mode_dir = seed_dir.join(key.to_lowercase());
            std::fs::create_dir_all(&mode_dir)?;
            write_json(&mode_dir.join("params.json"), &params)?;
            write_trace(&mode_dir.join("trace.csv"), &trace)?;
            let entropy_trace = trace.records.iter().map(|r| r.entropy_probe).collect();
            let (outcome, report) = evaluate_variant(&params, &config, *seed, entropy_trace)?;
            write_json(&mode_dir.join("mt_report.json"), &report)?;
            outcomes.entry(key).or_default().push(outcome);
        }
        let untrained = PolicyParams::zeros(config.train.temperature);
        let mode_dir = seed_dir.join(MODE_UNTRAINED.to_lowercase());
        std::fs::create_dir_all(&mode_dir)?;
        let (outcome, report) = evaluate_variant(&untrained, &config, *seed, Vec::new())?;
        write_json(&mode_dir.join("mt_report.json"), &report)?;
        outcomes.entry(MODE_UNTRAINED).or_default().push(outcome);
    }

    let mut modes = BTreeMap::new();
    for key in MODE_ORDER {
        modes.insert(key.to_string(), aggregate(&outcomes[key]));
    }
    let icpo_mean = modes[MODE_ICPO].mt_accuracy.mean;
    let summary = ComparisonSummary {
        mt_improvement_vs_standard_pct: relative_improvement_pct(
            icpo_mean,
            modes[MODE_STANDARD].mt_accuracy.mean,
        ),
        mt_improvement_vs_untrained_pct: relative_improvement_pct(
            icpo_mean,
            modes[MODE_UNTRAINED].mt_accuracy.mean,
        ),
        modes,
        seeds: config.eval.seeds.clone(),
        n_tasks: config.eval.n_tasks,
    };
    write_json(&config.output_dir.join("summary.json"), &summary)?;

    // Per-step probe entropy averaged over seeds, one column per trained
    // regime.
    let mut w = csv_writer(&config.output_dir.join("entropy_compare.csv"))?;
    w.write_record(["step", MODE_STANDARD, MODE_ICPO])?;
    let n_seeds = config.eval.seeds.len() as f64;
    for step in 0..config.train.steps {
        let mean_of = |key: &str| -> f64 {
            outcomes[key]
                .iter()
                .map(|o| o.entropy_trace[step])
                .sum::<f64>()
                / n_seeds
        };
        w.serialize((step + 1, mean_of(MODE_STANDARD), mean_of(MODE_ICPO)))?;
    }
    w.flush()?;

    // Judged-type frequencies with Missing excluded, averaged over seeds.
    let mut w = csv_writer(&config.output_dir.join("type_dist.csv"))?;
    let mut header = vec!["mode".to_string()];
    header.extend(
        ResponseType::ALL[..6]
            .iter()
            .map(|t| t.label().to_string()),
    );
    w.write_record(&header)?;
    for key in MODE_ORDER {
        let mut row = vec![key.to_string()];
        for i in 0..6 {
            let mean = outcomes[key]
                .iter()
                .map(|o| o.type_dist_excl[i])
                .sum::<f64>()
                / n_seeds;
            row.push(format!("{mean}"));
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    // Final accuracy by first-attempt timing bucket, averaged over seeds.
    let mut w = csv_writer(&config.output_dir.join("bucket_accuracy.csv"))?;
    w.write_record([
        "mode",
        "acc_0_20",
        "acc_20_40",
        "acc_40_60",
        "acc_60_80",
        "acc_80_100",
        "no_attempt_fraction",
    ])?;
    for key in MODE_ORDER {
        let mut row = vec![key.to_string()];
        for b in 0..5 {
            let mean = outcomes[key]
                .iter()
                .map(|o| o.bucket_accuracy[b])
                .sum::<f64>()
                / n_seeds;
            row.push(format!("{mean}"));
        }
        let no_attempt = outcomes[key]
            .iter()
            .map(|o| o.no_attempt_fraction)
            .sum::<f64>()
            / n_seeds;
        row.push(format!("{no_attempt}"));
        w.write_record(&row)?;
    }
    w.flush()?;

    println!(
        "compared {} seeds x {} conversations -> {}",
        config.eval.seeds.len(),
        config.eval.n_tasks,
        config.output_dir.display()
    );
    print_summary_table(&summary);
    Ok(())
}

const COMPARE_ARTIFACTS: [&str; 4] = [
    "summary.json",
    "entropy_compare.csv",
    "type_dist.csv",
    "bucket_accuracy.csv",
];

fn print_summary_table(summary: &ComparisonSummary) {
    println!(
        "{:<14} {:>12} {:>14} {:>14} {:>12} {:>13}",
        "mode", "mt_accuracy", "final_entropy", "expected_mass", "vs_standard", "vs_untrained"
    );
    for key in MODE_ORDER {
        let stats = &summary.modes[key];
        let (vs_std, vs_untrained) = if key == MODE_ICPO {
            let fmt = |v: Option<f64>| match v {
                Some(p) => format!("{p:+.2}%"),
                None => "n/a".to_string(),
            };
            (
                fmt(summary.mt_improvement_vs_standard_pct),
                fmt(summary.mt_improvement_vs_untrained_pct),
            )
        } else {
            ("-".to_string(), "-".to_string())
        };
        println!(
            "{:<14} {:>12.4} {:>14.4} {:>14.4} {:>12} {:>13}",
            key,
            stats.mt_accuracy.mean,
            stats.final_probe_entropy.mean,
            stats.expected_type_mass.mean,
            vs_std,
            vs_untrained
        );
    }
}

/// Reloads a compare directory's summary and prints the comparison table.
pub fn cmd_report(dir: &Path) -> Result<()> {
    let missing: Vec<&str> = COMPARE_ARTIFACTS
        .iter()
        .filter(|name| !dir.join(name).is_file())
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(Error::Argument(format!(
            "missing artifacts in {}: {}",
            dir.display(),
            missing.join(", ")
        )));
    }
    let text = std::fs::read_to_string(dir.join("summary.json"))?;
    let summary: ComparisonSummary = serde_json::from_str(&text)?;
    print_summary_table(&summary);
    Ok(())
}
