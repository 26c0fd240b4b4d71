//! Property-based invariants for the numeric core and the simulators.

use icpo_lab::grpo::{clipped_term, compute_advantages};
use icpo_lab::multiturn::make_schedule;
use icpo_lab::policy::{
    action_distribution, entropy, featurize, kl_categorical, log_distribution, PolicyParams,
    TYPE_COUNT,
};
use icpo_lab::tasks::{generate_task, simulate_underspecified, solvable, PromptKind, TaskConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params_strategy() -> impl Strategy<Value = PolicyParams> {
    (
        prop::collection::vec(-5.0f64..5.0, 21),
        0.2f64..3.0,
    )
        .prop_map(|(flat, temperature)| {
            let mut p = PolicyParams::zeros(temperature);
            for k in 0..TYPE_COUNT {
                for j in 0..3 {
                    p.w[k][j] = flat[k * 3 + j];
                }
            }
            p
        })
}

fn context_strategy() -> impl Strategy<Value = (usize, usize)> {
    (3usize..=6).prop_flat_map(|k| (1usize..=k).prop_map(move |v| (v, k)))
}

proptest! {
    #[test]
    fn distribution_is_normalized_and_matches_log_form(
        params in params_strategy(),
        (v, k) in context_strategy(),
    ) {
        let f = featurize(v, k).unwrap();
        let dist = action_distribution(&params, f).unwrap();
        let logd = log_distribution(&params, f).unwrap();
        let total: f64 = dist.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for (p, lp) in dist.iter().zip(logd.iter()) {
            prop_assert!(*p > 0.0);
            prop_assert!(*lp <= 0.0 + 1e-12);
            prop_assert_eq!(*p, lp.exp());
        }
    }

    #[test]
    fn adding_a_constant_logit_shift_changes_nothing(
        params in params_strategy(),
        (v, k) in context_strategy(),
        c in -4.0f64..4.0,
    ) {
        let f = featurize(v, k).unwrap();
        let base = action_distribution(&params, f).unwrap();
        let mut shifted = params.clone();
        for row in shifted.w.iter_mut() {
            // The bias feature is always 1, so this adds c to every logit.
            row[0] += c * shifted.temperature;
        }
        let moved = action_distribution(&shifted, f).unwrap();
        for (a, b) in base.iter().zip(moved.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_stays_within_categorical_bounds(
        params in params_strategy(),
        (v, k) in context_strategy(),
    ) {
        let f = featurize(v, k).unwrap();
        let dist = action_distribution(&params, f).unwrap();
        let h = entropy(&dist);
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (TYPE_COUNT as f64).ln() + 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(
        p_params in params_strategy(),
        q_params in params_strategy(),
        (v, k) in context_strategy(),
    ) {
        let f = featurize(v, k).unwrap();
        let p = action_distribution(&p_params, f).unwrap();
        let q = action_distribution(&q_params, f).unwrap();
        prop_assert!(kl_categorical(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl_categorical(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn advantages_are_standardized_or_zero(
        rewards in prop::collection::vec(0.0f64..1.0, 2..16),
    ) {
        let a = compute_advantages(&rewards).unwrap();
        let g = a.len() as f64;
        let spread = rewards
            .iter()
            .map(|r| (r - rewards.iter().sum::<f64>() / g).powi(2))
            .sum::<f64>()
            .sqrt();
        if spread < 1e-12 {
            prop_assert!(a.iter().all(|&x| x == 0.0));
        } else {
            let mean = a.iter().sum::<f64>() / g;
            let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / g;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn clipped_term_never_exceeds_either_branch(
        rho in 0.01f64..5.0,
        advantage in -3.0f64..3.0,
        alpha in 0.05f64..0.5,
    ) {
        let v = clipped_term(rho, advantage, alpha);
        let unclipped = rho * advantage;
        let clipped = rho.clamp(1.0 - alpha, 1.0 + alpha) * advantage;
        prop_assert!(v <= unclipped + 1e-15);
        prop_assert!(v <= clipped + 1e-15);
        prop_assert!(v == unclipped || v == clipped);
    }

    #[test]
    fn features_encode_visibility((v, k) in context_strategy()) {
        let f = featurize(v, k).unwrap();
        prop_assert_eq!(f.bias(), 1.0);
        prop_assert!(f.fraction_visible() > 0.0 && f.fraction_visible() <= 1.0);
        let complete = f.complete_indicator();
        prop_assert!(complete == 0.0 || complete == 1.0);
        prop_assert_eq!(complete == 1.0, v == k);
    }

    #[test]
    fn params_survive_json_round_trip(params in params_strategy()) {
        let text = serde_json::to_string(&params).unwrap();
        let back: PolicyParams = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, params);
    }

    #[test]
    fn condition_removal_leaves_unsolvable_prompts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let task = generate_task(&mut rng, &TaskConfig::default()).unwrap();
        let k = task.condition_count();
        let prompt = simulate_underspecified(task, &mut rng);
        let removed = prompt.removed().len();
        prop_assert!(removed == 1 || removed == 2);
        prop_assert_eq!(prompt.kind(), PromptKind::Underspecified);
        prop_assert_eq!(prompt.visible_count() + removed, k);
        prop_assert!(prompt.removed().iter().all(|&i| i < k));
        prop_assert!(!solvable(&prompt));
    }

    #[test]
    fn schedules_reveal_one_condition_per_turn(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let task = generate_task(&mut rng, &TaskConfig::default()).unwrap();
        let k = task.condition_count();
        let schedule = make_schedule(task, &mut rng);
        prop_assert_eq!(schedule.total_turns, k);
        let mut sorted = schedule.reveal_order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..k).collect::<Vec<_>>());
        for t in 1..=k {
            let visible = schedule.visible_at(t);
            prop_assert_eq!(visible.len(), t);
            prop_assert!(visible.iter().all(|&i| i < k));
        }
    }
}
