//! Evaluates policies over sharded conversations where one condition is
//! revealed per turn, and prints accuracy by first-attempt timing.
//!
//! Run with: cargo run --release --example multiturn_eval

use icpo_lab::grpo::{train, TrainConfig, TrainMode};
use icpo_lab::multiturn::{evaluate_multiturn, MtReport};
use icpo_lab::policy::{PolicyParams, ResponseType};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn print_report(label: &str, report: &MtReport) {
    println!("{label}");
    println!(
        "  final-answer accuracy {:.4} over {} conversations ({} never attempted)",
        report.mt_accuracy, report.n_conversations, report.no_attempt_count
    );
    println!("  accuracy by first-attempt timing (earliest fifth -> latest fifth):");
    print!("   ");
    for (acc, count) in report
        .bucket_accuracy
        .iter()
        .zip(report.bucket_counts.iter())
    {
        print!(" {acc:.3} (n={count})");
    }
    println!();
    println!("  response mix:");
    for (t, share) in ResponseType::ALL
        .iter()
        .zip(report.type_distribution.iter())
    {
        if *share > 0.0005 {
            println!("    {t:<14} {share:.4}");
        }
    }
}

fn main() -> icpo_lab::Result<()> {
    let config = TrainConfig {
        steps: 300,
        seed: 5,
        mode: TrainMode::Icpo,
        ..TrainConfig::default()
    };
    let n_conversations = 2_000;

    let untrained = PolicyParams::zeros(config.temperature);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (report, transcripts) = evaluate_multiturn(
        &untrained,
        n_conversations,
        &config.task,
        &config.env,
        &config.judge,
        &mut rng,
    )?;
    print_report("untrained policy:", &report);

    println!("\nfirst transcript as logged:");
    println!("  {}", transcripts[0].to_jsonl()?);

    let (trained, _) = train(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (report, _) = evaluate_multiturn(
        &trained,
        n_conversations,
        &config.task,
        &config.env,
        &config.judge,
        &mut rng,
    )?;
    println!();
    print_report("after mixed-curriculum training:", &report);
    Ok(())
}
