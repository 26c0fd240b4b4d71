//! Linear-softmax policy over response types, plus the answer-realization
//! environment model.
//!
//! The policy is a 7 x 3 weight matrix W over a fixed encoding of the prompt
//! view: [bias, fraction of conditions visible, completeness indicator].
//! Action probabilities are softmax((W f) / temperature), computed in log
//! space with max-subtraction so that exp(log_prob) reproduces the
//! distribution entries exactly.
//!
//! Answer content is not produced by the policy. When an answer attempt is
//! sampled, the environment realizes a number: a solvable view yields the
//! ground truth with probability p_skill * decay^wrong_attempts, anything
//! else yields a uniformly random wrong integer. An unsolvable view never
//! yields the ground truth.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tasks::{solvable, Prompt};

/// Number of response categories; fixes the row count of the weight matrix.
pub const TYPE_COUNT: usize = 7;

/// Response categories a policy can emit, in the fixed row order used by
/// weight matrices, distributions, and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseType {
    AnswerAttempt,
    Clarification,
    Interrogation,
    Discussion,
    Hedging,
    Refusal,
    Missing,
}

impl ResponseType {
    pub const ALL: [ResponseType; TYPE_COUNT] = [
        ResponseType::AnswerAttempt,
        ResponseType::Clarification,
        ResponseType::Interrogation,
        ResponseType::Discussion,
        ResponseType::Hedging,
        ResponseType::Refusal,
        ResponseType::Missing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            ResponseType::AnswerAttempt => "AnswerAttempt",
            ResponseType::Clarification => "Clarification",
            ResponseType::Interrogation => "Interrogation",
            ResponseType::Discussion => "Discussion",
            ResponseType::Hedging => "Hedging",
            ResponseType::Refusal => "Refusal",
            ResponseType::Missing => "Missing",
        }
    }
}

impl std::fmt::Display for ResponseType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Context encoding of a prompt view: [1, |visible|/K, all-visible flag].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVec(pub [f64; 3]);

impl FeatureVec {
    pub fn bias(&self) -> f64 {
        self.0[0]
    }

    pub fn fraction_visible(&self) -> f64 {
        self.0[1]
    }

    pub fn complete_indicator(&self) -> f64 {
        self.0[2]
    }
}

/// Encodes how much of a task is visible. `visible_count` must lie in
/// [0, k] and k must be positive.
pub fn featurize(visible_count: usize, k: usize) -> Result<FeatureVec> {
    if k == 0 || visible_count > k {
        return Err(Error::Argument(format!(
            "featurize requires 0 <= visible_count <= K with K >= 1, got visible_count={visible_count}, K={k}"
        )));
    }
    let fraction = visible_count as f64 / k as f64;
    let complete = if visible_count == k { 1.0 } else { 0.0 };
    Ok(FeatureVec([1.0, fraction, complete]))
}

/// Policy weights and rollout temperature. Serializes as
/// `{"w": [[..3 floats..] x 7], "temperature": t}` with rows in
/// `ResponseType::ALL` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub w: [[f64; 3]; TYPE_COUNT],
    pub temperature: f64,
}

impl PolicyParams {
    /// Uniform-policy initialization: all weights zero.
    pub fn zeros(temperature: f64) -> Self {
        PolicyParams {
            w: [[0.0; 3]; TYPE_COUNT],
            temperature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::config("params.w", "weight entries must be finite"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::config(
                "params.temperature",
                "temperature must be finite and positive",
            ));
        }
        Ok(())
    }
}

fn logits(params: &PolicyParams, f: FeatureVec) -> Result<[f64; TYPE_COUNT]> {
    let mut z = [0.0; TYPE_COUNT];
    for (row, out) in params.w.iter().zip(z.iter_mut()) {
        let dot = row[0] * f.0[0] + row[1] * f.0[1] + row[2] * f.0[2];
        *out = dot / params.temperature;
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "non-finite logits in action distribution".to_string(),
        ));
    }
    Ok(z)
}

/// Log-probabilities of all seven types: log-softmax of (W f)/temperature
/// with max-subtraction for overflow safety.
pub fn log_distribution(params: &PolicyParams, f: FeatureVec) -> Result<[f64; TYPE_COUNT]> {
    let z = logits(params, f)?;
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut shifted = z;
    for v in &mut shifted {
        *v -= max;
    }
    let log_norm = shifted.iter().map(|v| v.exp()).sum::<f64>().ln();
    for v in &mut shifted {
        *v -= log_norm;
    }
    Ok(shifted)
}

/// Probability of each type; exactly `exp` of `log_distribution`.
pub fn action_distribution(params: &PolicyParams, f: FeatureVec) -> Result<[f64; TYPE_COUNT]> {
    Ok(log_distribution(params, f)?.map(f64::exp))
}

/// Natural log of the probability of one type.
pub fn log_prob(params: &PolicyParams, f: FeatureVec, t: ResponseType) -> Result<f64> {
    Ok(log_distribution(params, f)?[t.index()])
}

/// Shannon entropy in nats, with the 0 ln 0 = 0 convention.
pub fn entropy(dist: &[f64; TYPE_COUNT]) -> f64 {
    dist.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Exact categorical KL divergence sum p ln(p/q). Requires q > 0 wherever
/// p > 0.
pub fn kl_categorical(p: &[f64; TYPE_COUNT], q: &[f64; TYPE_COUNT]) -> Result<f64> {
    let mut acc = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::Numeric(
                    "KL divergence undefined: q has zero mass where p is positive".to_string(),
                ));
            }
            acc += pi * (pi.ln() - qi.ln());
        }
    }
    Ok(acc)
}

/// One sampled response: the drawn type, a realized answer for answer
/// attempts, and the log-probability under the sampling snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSample {
    pub response_type: ResponseType,
    pub answer: Option<i64>,
    pub log_prob_old: f64,
    pub features: FeatureVec,
}

/// G candidate responses drawn against one prompt under a single parameter
/// snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub prompt: Prompt,
    pub samples: Vec<ResponseSample>,
}

/// Skill-decay environment: a solvable view is answered correctly with
/// probability p_skill * decay^wrong_attempts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub p_skill: f64,
    pub decay: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            p_skill: 0.95,
            decay: 0.5,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_skill) {
            return Err(Error::config("env.p_skill", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(Error::config("env.decay", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

const WRONG_ANSWER_MIN: i64 = 1;
const WRONG_ANSWER_MAX: i64 = 500;

fn wrong_integer<R: Rng>(ground_truth: i64, rng: &mut R) -> i64 {
    if (WRONG_ANSWER_MIN..=WRONG_ANSWER_MAX).contains(&ground_truth) {
        let draw = rng.gen_range(WRONG_ANSWER_MIN..=WRONG_ANSWER_MAX - 1);
        if draw >= ground_truth {
            draw + 1
        } else {
            draw
        }
    } else {
        rng.gen_range(WRONG_ANSWER_MIN..=WRONG_ANSWER_MAX)
    }
}

/// Realizes the numeric content of an answer attempt. A solvable view is
/// correct with probability p_skill * decay^wrong_attempts; an unsolvable
/// view always yields a wrong integer in [1, 500] \ {ground_truth}.
pub fn realize_answer<R: Rng>(
    prompt: &Prompt,
    wrong_attempts: u32,
    env: &EnvConfig,
    rng: &mut R,
) -> i64 {
    let ground_truth = prompt.base().ground_truth;
    let correct_prob = if solvable(prompt) {
        env.p_skill * env.decay.powi(wrong_attempts as i32)
    } else {
        0.0
    };
    if rng.gen::<f64>() < correct_prob {
        ground_truth
    } else {
        wrong_integer(ground_truth, rng)
    }
}

fn sample_index<R: Rng>(dist: &[f64; TYPE_COUNT], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    TYPE_COUNT - 1
}

/// Draws one response type from the policy's distribution at the given
/// context.
pub fn sample_type<R: Rng>(
    params: &PolicyParams,
    features: FeatureVec,
    rng: &mut R,
) -> Result<ResponseType> {
    let dist = action_distribution(params, features)?;
    Ok(ResponseType::ALL[sample_index(&dist, rng)])
}

/// Draws one response for the prompt view, realizing an answer when the
/// drawn type is an answer attempt. `wrong_attempts` feeds the skill-decay
/// model (use 0 for single-turn rollouts).
pub fn sample_response<R: Rng>(
    params: &PolicyParams,
    prompt: &Prompt,
    wrong_attempts: u32,
    env: &EnvConfig,
    rng: &mut R,
) -> Result<ResponseSample> {
    let features = featurize(prompt.visible_count(), prompt.base().condition_count())?;
    let log_dist = log_distribution(params, features)?;
    let dist = log_dist.map(f64::exp);
    let idx = sample_index(&dist, rng);
    let response_type = ResponseType::ALL[idx];
    let answer = if response_type == ResponseType::AnswerAttempt {
        Some(realize_answer(prompt, wrong_attempts, env, rng))
    } else {
        None
    };
    Ok(ResponseSample {
        response_type,
        answer,
        log_prob_old: log_dist[idx],
        features,
    })
}

/// Draws `group_size` independent responses against one prompt, recording
/// each sample's log-probability at draw time.
pub fn sample_group<R: Rng>(
    params: &PolicyParams,
    prompt: &Prompt,
    group_size: usize,
    env: &EnvConfig,
    rng: &mut R,
) -> Result<RolloutGroup> {
    if group_size < 2 {
        return Err(Error::Argument(format!(
            "group size must be at least 2 for group-relative normalization, got {group_size}"
        )));
    }
    let samples = (0..group_size)
        .map(|_| sample_response(params, prompt, 0, env, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(RolloutGroup {
        prompt: prompt.clone(),
        samples,
    })
}

/// The canonical ambiguous probe set: every incomplete view shape the task
/// family can produce, i.e. featurize(v, k) for k in 3..=6 and v in 1..k.
pub fn ambiguous_probe_features() -> Vec<FeatureVec> {
    let mut probes = Vec::new();
    for k in 3..=6 {
        for v in 1..k {
            probes.push(featurize(v, k).expect("probe bounds are valid by construction"));
        }
    }
    probes
}

/// A probe set of exactly `count` contexts, cycling through the canonical
/// ambiguous set.
pub fn probe_features(count: usize) -> Vec<FeatureVec> {
    let canon = ambiguous_probe_features();
    (0..count).map(|i| canon[i % canon.len()]).collect()
}

/// Mean policy entropy over a probe set.
pub fn mean_probe_entropy(params: &PolicyParams, probes: &[FeatureVec]) -> Result<f64> {
    let mut total = 0.0;
    for &f in probes {
        total += entropy(&action_distribution(params, f)?);
    }
    Ok(total / probes.len() as f64)
}

/// Mean probability mass the policy places on `types`, averaged over a
/// probe set.
pub fn mean_probe_mass(
    params: &PolicyParams,
    probes: &[FeatureVec],
    types: &[ResponseType],
) -> Result<f64> {
    let mut total = 0.0;
    for &f in probes {
        let dist = action_distribution(params, f)?;
        total += types.iter().map(|t| dist[t.index()]).sum::<f64>();
    }
    Ok(total / probes.len() as f64)
}
