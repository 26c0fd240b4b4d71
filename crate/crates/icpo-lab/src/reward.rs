//! Response-type judging and the routed binary reward.
//!
//! Rewards are routed by prompt kind. A standard prompt pays 1 only for a
//! correct answer attempt, checked directly against the task's ground truth
//! with no judge involved. An underspecified prompt pays 1 only when the
//! judged type falls in the expected set (clarify, interrogate, discuss,
//! hedge, or refuse); answer attempts and missing responses earn nothing.
//!
//! The judge is an error-rate knob: with probability `error_rate` it returns
//! a uniformly random wrong label, otherwise the true type. The default rate
//! of 0 makes it a deterministic identity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{ResponseSample, ResponseType};
use crate::tasks::{evaluate_answer, ConditionedTask, Prompt, PromptKind};

/// The five response types rewarded on underspecified prompts.
pub const EXPECTED_TYPES: [ResponseType; 5] = [
    ResponseType::Clarification,
    ResponseType::Interrogation,
    ResponseType::Discussion,
    ResponseType::Hedging,
    ResponseType::Refusal,
];

/// True iff `t` is rewarded on underspecified prompts.
pub fn is_expected_type(t: ResponseType) -> bool {
    EXPECTED_TYPES.contains(&t)
}

/// Judge reliability. `error_rate` is the probability of a uniformly random
/// mislabel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub error_rate: f64,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig { error_rate: 0.0 }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(Error::config("judge.error_rate", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Labels a response: the true type with probability 1 - error_rate,
/// otherwise one of the six other labels uniformly at random.
pub fn judge<R: Rng>(response: &ResponseSample, cfg: &JudgeConfig, rng: &mut R) -> ResponseType {
    let truth = response.response_type;
    let u: f64 = rng.gen();
    if u < cfg.error_rate {
        let others: Vec<ResponseType> = ResponseType::ALL
            .into_iter()
            .filter(|&t| t != truth)
            .collect();
        others[rng.gen_range(0..others.len())]
    } else {
        truth
    }
}

/// Correctness reward for a fully specified prompt: 1 iff the response is an
/// answer attempt matching the ground truth.
pub fn reward_standard(task: &ConditionedTask, response: &ResponseSample) -> f64 {
    match (response.response_type, response.answer) {
        (ResponseType::AnswerAttempt, Some(answer)) if evaluate_answer(task, answer) => 1.0,
        _ => 0.0,
    }
}

/// Type reward for an underspecified prompt: 1 iff the judged label is in
/// the expected set.
pub fn reward_ambiguous(judged: ResponseType) -> f64 {
    if is_expected_type(judged) {
        1.0
    } else {
        0.0
    }
}

/// Routes a response to the correctness reward or the judged type reward
/// according to the prompt kind. Standard prompts bypass the judge entirely.
pub fn route_reward<R: Rng>(
    prompt: &Prompt,
    response: &ResponseSample,
    cfg: &JudgeConfig,
    rng: &mut R,
) -> f64 {
    match prompt.kind() {
        PromptKind::Standard => reward_standard(prompt.base(), response),
        PromptKind::Underspecified => reward_ambiguous(judge(response, cfg, rng)),
    }
}
