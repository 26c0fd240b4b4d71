//! Trains the policy under both reward regimes and prints how the probe-set
//! distribution moves: correctness-only training answers everywhere, the
//! mixed curriculum asks when conditions are missing.
//!
//! Run with: cargo run --release --example grpo_training

use icpo_lab::grpo::{train, TrainConfig, TrainMode};
use icpo_lab::policy::{
    ambiguous_probe_features, mean_probe_entropy, mean_probe_mass, PolicyParams, ResponseType,
};
use icpo_lab::reward::EXPECTED_TYPES;

fn main() -> icpo_lab::Result<()> {
    let base = TrainConfig {
        steps: 300,
        seed: 7,
        ..TrainConfig::default()
    };
    let probes = ambiguous_probe_features();
    let initial = PolicyParams::zeros(base.temperature);
    println!(
        "untrained: probe entropy {:.4}, expected-type mass {:.4}",
        mean_probe_entropy(&initial, &probes)?,
        mean_probe_mass(&initial, &probes, &EXPECTED_TYPES)?
    );

    for mode in [TrainMode::StandardRlvr, TrainMode::Icpo] {
        let config = TrainConfig {
            mode,
            ..base.clone()
        };
        let (params, trace) = train(&config)?;
        let answer_mass =
            mean_probe_mass(&params, &probes, &[ResponseType::AnswerAttempt])?;
        let expected_mass = mean_probe_mass(&params, &probes, &EXPECTED_TYPES)?;
        let entropy = mean_probe_entropy(&params, &probes)?;
        println!(
            "\n{mode}: {} steps, batch {}, groups of {}",
            config.steps, config.batch_size, config.group_size
        );
        println!(
            "  probe entropy {entropy:.4}, answer mass {answer_mass:.4}, expected-type mass {expected_mass:.4}"
        );
        println!("  trace (every 60th step):");
        println!("    step  entropy  mean_reward  objective");
        for record in trace.records.iter().step_by(60).chain(trace.records.last()) {
            println!(
                "    {:>4}  {:>7.4}  {:>11.4}  {:>9.4}",
                record.step, record.entropy_probe, record.mean_reward, record.objective
            );
        }
    }
    Ok(())
}
