//! Generates chained-arithmetic tasks, removes conditions to make them
//! unsolvable, and prints the JSONL records an experiment would log.
//!
//! Run with: cargo run --example task_generation

use icpo_lab::tasks::{generate_task, simulate_underspecified, solvable, TaskConfig, TaskRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> icpo_lab::Result<()> {
    let config = TaskConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    println!("fully specified tasks:");
    for _ in 0..3 {
        let task = generate_task(&mut rng, &config)?;
        println!("  {}", TaskRecord::from_task(&task).to_jsonl()?);
    }

    println!("\nafter condition removal:");
    for _ in 0..3 {
        let task = generate_task(&mut rng, &config)?;
        let ground_truth = task.ground_truth;
        let prompt = simulate_underspecified(task, &mut rng);
        println!("  {}", TaskRecord::from_prompt(&prompt).to_jsonl()?);
        println!(
            "    visible {}/{} conditions, solvable: {}, ground truth still {}",
            prompt.visible_count(),
            prompt.base().condition_count(),
            solvable(&prompt),
            ground_truth
        );
    }

    // Revealing the removed conditions restores solvability.
    let task = generate_task(&mut rng, &config)?;
    let mut prompt = simulate_underspecified(task, &mut rng);
    println!("\nrevealing removed conditions one at a time:");
    let removed: Vec<usize> = prompt.removed().iter().copied().collect();
    for index in removed {
        println!(
            "  visible {} -> solvable {}",
            prompt.visible_count(),
            solvable(&prompt)
        );
        prompt.reveal(index);
    }
    println!(
        "  visible {} -> solvable {}",
        prompt.visible_count(),
        solvable(&prompt)
    );
    Ok(())
}
