//! A desk-scale laboratory for illocution-calibrated policy optimization.
//!
//! The crate reproduces an entire verifiable-reward RL pipeline on a
//! 21-parameter policy so every quantity can be checked analytically:
//!
//! - [`tasks`]: synthetic arithmetic tasks with programmatic ground truth,
//!   and the condition-removal transform that makes a prompt unsolvable.
//! - [`policy`]: a linear-softmax policy over seven response types
//!   (answer, clarify, interrogate, discuss, hedge, refuse, missing) plus
//!   the skill-decay environment that realizes numeric answers.
//! - [`reward`]: response judging and the routed binary reward. Complete
//!   prompts pay for correct answers; underspecified prompts pay for
//!   clarifying-style responses.
//! - [`grpo`]: group-relative advantages, the clipped surrogate objective
//!   with a KL penalty to the frozen initial policy, its exact analytic
//!   gradient, and the training loop in both regimes.
//! - [`multiturn`]: the sharded conversation harness where conditions are
//!   revealed one turn at a time, with accuracy, response-type, and
//!   first-attempt-timing aggregations.
//! - [`cli`]: the `icpo-lab` experiment runner (train / eval-mt / compare /
//!   report) emitting deterministic JSON and CSV artifacts.
//!
//! Everything is seeded: identical configs produce byte-identical artifacts.
//!
//! ## Examples
//!
//! One runnable example per major capability:
//!
//! - **`task_generation`** - generate tasks, remove conditions, inspect the
//!   JSONL record format
//! - **`policy_basics`** - feature encoding, distributions, entropy, and
//!   seeded sampling
//! - **`reward_routing`** - the full prompt-kind x response-type reward
//!   table, with and without judge noise
//! - **`grpo_training`** - a short training run in both regimes with trace
//!   inspection
//! - **`multiturn_eval`** - sharded conversations and the multi-turn report
//! - **`compare_workflow`** - the end-to-end comparison experiment in
//!   miniature
//!
//! ```bash
//! cargo run -p icpo-lab --example task_generation
//! cargo run -p icpo-lab --example policy_basics
//! cargo run -p icpo-lab --example reward_routing
//! cargo run --release -p icpo-lab --example grpo_training
//! cargo run --release -p icpo-lab --example multiturn_eval
//! cargo run --release -p icpo-lab --example compare_workflow
//! ```

pub mod cli;
pub mod error;
pub mod grpo;
pub mod multiturn;
pub mod policy;
pub mod reward;
pub mod tasks;

pub use error::{Error, Result};
