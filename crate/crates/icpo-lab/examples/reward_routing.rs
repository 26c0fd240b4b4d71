//! Routes rewards by prompt kind: correctness on fully specified prompts,
//! judged response type on underspecified ones.
//!
//! Run with: cargo run --example reward_routing

use icpo_lab::policy::{featurize, ResponseSample, ResponseType};
use icpo_lab::reward::{judge, route_reward, JudgeConfig};
use icpo_lab::tasks::{generate_task, simulate_underspecified, Prompt, TaskConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> icpo_lab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let task = generate_task(&mut rng, &TaskConfig::default())?;
    let truth = task.ground_truth;
    let k = task.condition_count();
    let standard = Prompt::standard(task.clone());
    let ambiguous = simulate_underspecified(task, &mut rng);
    let exact_judge = JudgeConfig { error_rate: 0.0 };

    let sample = |t: ResponseType, answer, visible| ResponseSample {
        response_type: t,
        answer,
        log_prob_old: 0.0,
        features: featurize(visible, k).unwrap(),
    };

    println!("ground truth: {truth}\n");
    println!("{:<14} {:>18} {:>18}", "response", "standard prompt", "underspecified");
    for t in ResponseType::ALL {
        let answer = (t == ResponseType::AnswerAttempt).then_some(truth);
        let on_standard = route_reward(&standard, &sample(t, answer, k), &exact_judge, &mut rng);
        let on_ambiguous = route_reward(
            &ambiguous,
            &sample(t, answer, ambiguous.visible_count()),
            &exact_judge,
            &mut rng,
        );
        println!("{:<14} {on_standard:>18} {on_ambiguous:>18}", t.to_string());
    }

    let wrong = sample(ResponseType::AnswerAttempt, Some(truth + 1), k);
    println!(
        "\nwrong answer on the standard prompt: {}",
        route_reward(&standard, &wrong, &exact_judge, &mut rng)
    );

    // A noisy judge sometimes mislabels the response type.
    let noisy = JudgeConfig { error_rate: 0.3 };
    let clarification = sample(ResponseType::Clarification, None, ambiguous.visible_count());
    let trials = 10_000;
    let mut kept = 0;
    for _ in 0..trials {
        if judge(&clarification, &noisy, &mut rng) == ResponseType::Clarification {
            kept += 1;
        }
    }
    println!(
        "noisy judge (error rate 0.3) kept the true label in {:.3} of {trials} trials",
        kept as f64 / trials as f64
    );
    Ok(())
}
