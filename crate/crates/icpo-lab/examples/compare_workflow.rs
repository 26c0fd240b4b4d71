//! Runs the full comparison workflow through the same entry points the
//! binary uses: write a config, train both regimes across seeds, and report
//! the summary table from the artifacts on disk.
//!
//! Run with: cargo run --release --example compare_workflow

use icpo_lab::cli::{cmd_compare, cmd_report, ExperimentConfig};
use icpo_lab::grpo::TrainConfig;

fn main() -> icpo_lab::Result<()> {
    let out_dir = std::env::temp_dir().join("icpo-lab-compare-demo");
    let config = ExperimentConfig {
        train: TrainConfig {
            steps: 120,
            ..TrainConfig::default()
        },
        output_dir: out_dir.clone(),
        ..ExperimentConfig::default()
    };

    std::fs::create_dir_all(&out_dir)?;
    let config_path = out_dir.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config)?)?;
    println!("config written to {}\n", config_path.display());

    cmd_compare(&config_path)?;

    println!("\nartifacts in {}:", out_dir.display());
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("  {name}");
    }

    println!("\nreloading the summary from disk:");
    cmd_report(&out_dir)?;
    Ok(())
}
