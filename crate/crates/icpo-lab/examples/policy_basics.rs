//! Shows the linear-softmax policy over the seven response types: feature
//! encoding, action distributions, entropy, and seeded sampling.
//!
//! Run with: cargo run --example policy_basics

use icpo_lab::policy::{
    action_distribution, entropy, featurize, sample_type, PolicyParams, ResponseType, TYPE_COUNT,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn print_distribution(label: &str, dist: &[f64; TYPE_COUNT]) {
    println!("{label}");
    for (t, p) in ResponseType::ALL.iter().zip(dist.iter()) {
        println!("  {t:<14} {p:.4}");
    }
    println!("  entropy {:.4} nats", entropy(dist));
}

fn main() -> icpo_lab::Result<()> {
    let ambiguous = featurize(2, 5)?;
    let complete = featurize(5, 5)?;
    println!(
        "features for 2/5 visible: {:?}\nfeatures for 5/5 visible: {:?}\n",
        ambiguous.0, complete.0
    );

    let uniform = PolicyParams::zeros(0.7);
    print_distribution("untrained policy, any context:", &action_distribution(&uniform, ambiguous)?);

    // Weights that answer when the task is complete and ask otherwise.
    let mut tuned = PolicyParams::zeros(0.7);
    tuned.w[ResponseType::AnswerAttempt.index()] = [-1.4, 0.0, 2.8];
    tuned.w[ResponseType::Clarification.index()] = [0.7, 0.0, 0.0];
    println!();
    print_distribution(
        "tuned policy on an ambiguous context:",
        &action_distribution(&tuned, ambiguous)?,
    );
    println!();
    print_distribution(
        "tuned policy on a complete context:",
        &action_distribution(&tuned, complete)?,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = [0usize; TYPE_COUNT];
    let draws = 10_000;
    for _ in 0..draws {
        counts[sample_type(&tuned, complete, &mut rng)?.index()] += 1;
    }
    println!("\n{draws} seeded draws on the complete context:");
    for (t, c) in ResponseType::ALL.iter().zip(counts.iter()) {
        println!("  {t:<14} {:.4}", *c as f64 / draws as f64);
    }
    Ok(())
}
