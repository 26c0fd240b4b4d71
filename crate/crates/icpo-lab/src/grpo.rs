//! Group-relative policy optimization on the categorical policy.
//!
//! Each training step samples G responses per prompt under the current
//! parameter snapshot, routes binary rewards, standardizes them within each
//! group (population std, degenerate groups get zero advantages), and
//! ascends the clipped importance-weighted surrogate minus a KL penalty to
//! the frozen initial policy:
//!
//!   J = mean_groups[ (1/G) sum_i min(rho_i A_i, clip(rho_i, 1-a, 1+a) A_i) ]
//!       - b * mean_groups[ KL(pi_theta || pi_ref) ]
//!
//! The gradient is analytic. For the linear-softmax policy,
//! d log p_t / dW_kj = (delta_kt - p_k) f_j / temperature; surrogate terms
//! flow gradient only where the unclipped branch attains the min (ties take
//! the unclipped branch), and the KL term differentiates exactly through the
//! softmax. The snapshot refreshes after every step, so ratios start at 1;
//! the reference policy stays fixed at initialization for the whole run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{
    ambiguous_probe_features, kl_categorical, log_distribution, mean_probe_entropy, sample_group,
    EnvConfig, PolicyParams, RolloutGroup, TYPE_COUNT,
};
use crate::reward::{route_reward, JudgeConfig};
use crate::tasks::{generate_task, simulate_underspecified, Prompt, TaskConfig};

/// Training regime: correctness-only on fully specified prompts, or the
/// mixed curriculum that adds underspecified prompts with type rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrainMode {
    StandardRlvr,
    Icpo,
}

impl TrainMode {
    pub fn label(self) -> &'static str {
        match self {
            TrainMode::StandardRlvr => "STANDARD_RLVR",
            TrainMode::Icpo => "ICPO",
        }
    }
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Full training recipe. Defaults give the reference run: 600 steps of
/// batch 64 with rollout groups of 8 at temperature 0.7.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub steps: usize,
    pub batch_size: usize,
    pub group_size: usize,
    pub learning_rate: f64,
    pub clip: f64,
    pub kl_coefficient: f64,
    pub ambiguous_fraction: f64,
    pub temperature: f64,
    pub judge: JudgeConfig,
    pub env: EnvConfig,
    pub task: TaskConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Icpo,
            steps: 600,
            batch_size: 64,
            group_size: 8,
            learning_rate: 0.05,
            clip: 0.2,
            kl_coefficient: 0.01,
            ambiguous_fraction: 0.5,
            temperature: 0.7,
            judge: JudgeConfig::default(),
            env: EnvConfig::default(),
            task: TaskConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::config("train.batch_size", "must be at least 1"));
        }
        if self.group_size < 2 {
            return Err(Error::config(
                "train.group_size",
                "group-relative normalization needs at least 2 samples",
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(
                "train.learning_rate",
                "must be finite and positive",
            ));
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::config("train.clip", "must lie in (0, 1)"));
        }
        if !(self.kl_coefficient.is_finite() && self.kl_coefficient >= 0.0) {
            return Err(Error::config(
                "train.kl_coefficient",
                "must be finite and non-negative",
            ));
        }
        if !(0.0..=1.0).contains(&self.ambiguous_fraction) {
            return Err(Error::config("train.ambiguous_fraction", "must lie in [0, 1]"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::config(
                "train.temperature",
                "must be finite and positive",
            ));
        }
        self.judge.validate()?;
        self.env.validate()?;
        self.task.validate()?;
        Ok(())
    }
}

/// Per-step trace row. Entropy and the KL column are measured after the
/// step's parameter update; entropy is averaged over the fixed ambiguous
/// probe set, the KL column over the step's own rollout contexts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub entropy_probe: f64,
    pub mean_reward: f64,
    pub objective: f64,
    pub kl_ref: f64,
}

/// Full training trace, one record per completed step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<StepRecord>,
}

pub const TRACE_HEADER: [&str; 5] = ["step", "entropy_probe", "mean_reward", "objective", "kl_ref"];

impl TrainTrace {
    /// Writes the trace as CSV with a fixed header, even when empty.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(TRACE_HEADER)?;
        for rec in &self.records {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }
}

/// A rollout group together with its routed rewards, index-aligned with the
/// group's samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredGroup {
    pub group: RolloutGroup,
    pub rewards: Vec<f64>,
}

/// Standardizes rewards within one group: (r - mean) / population std.
/// Groups with zero spread return all zeros.
pub fn compute_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    let g = rewards.len();
    if g < 2 {
        return Err(Error::Argument(format!(
            "advantage normalization needs at least 2 rewards, got {g}"
        )));
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let variance = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
    let std = variance.sqrt();
    if std < 1e-12 {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Probability ratio of one sample under `params` relative to the snapshot
/// it was drawn from.
pub fn importance_ratio(params: &PolicyParams, sample: &crate::policy::ResponseSample) -> Result<f64> {
    let lp = log_distribution(params, sample.features)?[sample.response_type.index()];
    Ok((lp - sample.log_prob_old).exp())
}

/// One clipped surrogate term: min(rho A, clip(rho, 1-alpha, 1+alpha) A).
pub fn clipped_term(rho: f64, advantage: f64, alpha: f64) -> f64 {
    let clipped = rho.clamp(1.0 - alpha, 1.0 + alpha) * advantage;
    (rho * advantage).min(clipped)
}

fn group_features(sg: &ScoredGroup) -> Result<crate::policy::FeatureVec> {
    let samples = &sg.group.samples;
    if samples.is_empty() || samples.len() != sg.rewards.len() {
        return Err(Error::Internal(format!(
            "group bookkeeping mismatch: {} samples vs {} rewards",
            samples.len(),
            sg.rewards.len()
        )));
    }
    let f = samples[0].features;
    if samples.iter().any(|s| s.features != f) {
        return Err(Error::Internal(
            "samples within a group must share features".to_string(),
        ));
    }
    Ok(f)
}

/// Exact mean KL(pi_params || pi_ref) over the groups' feature contexts.
pub fn mean_ref_kl(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    groups: &[ScoredGroup],
) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::Argument("KL average over zero groups".to_string()));
    }
    let mut total = 0.0;
    for sg in groups {
        let f = group_features(sg)?;
        let p = log_distribution(params, f)?.map(f64::exp);
        let r = log_distribution(ref_params, f)?.map(f64::exp);
        total += kl_categorical(&p, &r)?;
    }
    Ok(total / groups.len() as f64)
}

/// The ascended objective: mean clipped surrogate minus `kl_coefficient`
/// times the mean exact KL to the reference policy.
pub fn objective(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    groups: &[ScoredGroup],
    clip: f64,
    kl_coefficient: f64,
) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::Argument("objective over zero groups".to_string()));
    }
    let mut surrogate = 0.0;
    for sg in groups {
        let f = group_features(sg)?;
        let logd = log_distribution(params, f)?;
        let advantages = compute_advantages(&sg.rewards)?;
        let mut term = 0.0;
        for (s, &a) in sg.group.samples.iter().zip(&advantages) {
            let rho = (logd[s.response_type.index()] - s.log_prob_old).exp();
            term += clipped_term(rho, a, clip);
        }
        surrogate += term / sg.group.samples.len() as f64;
    }
    let mut value = surrogate / groups.len() as f64;
    if kl_coefficient != 0.0 {
        value -= kl_coefficient * mean_ref_kl(params, ref_params, groups)?;
    }
    Ok(value)
}

pub type WeightGrad = [[f64; 3]; TYPE_COUNT];

/// Analytic gradient of `objective` with respect to the weight matrix.
/// Surrogate terms contribute A rho d(log p)/dW exactly when the unclipped
/// branch attains the min (ties included); clipped terms are locally
/// constant and contribute nothing.
pub fn gradient(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    groups: &[ScoredGroup],
    clip: f64,
    kl_coefficient: f64,
) -> Result<WeightGrad> {
    if groups.is_empty() {
        return Err(Error::Argument("gradient over zero groups".to_string()));
    }
    let mut grad = [[0.0; 3]; TYPE_COUNT];
    let n = groups.len() as f64;
    let tau = params.temperature;
    for sg in groups {
        let f = group_features(sg)?;
        let logd = log_distribution(params, f)?;
        let p = logd.map(f64::exp);
        let advantages = compute_advantages(&sg.rewards)?;
        let g = sg.group.samples.len() as f64;

        // Per-type coefficient sum over active samples: sum of A_i rho_i.
        let mut coeff = [0.0; TYPE_COUNT];
        for (s, &a) in sg.group.samples.iter().zip(&advantages) {
            let t = s.response_type.index();
            let rho = (logd[t] - s.log_prob_old).exp();
            let unclipped = rho * a;
            let clipped = rho.clamp(1.0 - clip, 1.0 + clip) * a;
            if unclipped <= clipped {
                coeff[t] += a * rho;
            }
        }
        let coeff_total: f64 = coeff.iter().sum();
        for k in 0..TYPE_COUNT {
            let dz = coeff[k] - p[k] * coeff_total;
            for j in 0..3 {
                grad[k][j] += dz * f.0[j] / tau / g / n;
            }
        }

        if kl_coefficient != 0.0 {
            let logr = log_distribution(ref_params, f)?;
            let r = logr.map(f64::exp);
            let kl = kl_categorical(&p, &r)?;
            for k in 0..TYPE_COUNT {
                let dkl_dz = p[k] * ((logd[k] - logr[k]) - kl);
                for j in 0..3 {
                    grad[k][j] -= kl_coefficient * dkl_dz * f.0[j] / tau / n;
                }
            }
        }
    }
    Ok(grad)
}

/// Mutable training state: current parameters, the frozen reference
/// snapshot, the RNG stream, and the completed-step counter.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: PolicyParams,
    pub ref_params: PolicyParams,
    pub rng: ChaCha8Rng,
    pub step: usize,
}

impl TrainState {
    pub fn new(config: &TrainConfig) -> Self {
        let init = PolicyParams::zeros(config.temperature);
        TrainState {
            params: init.clone(),
            ref_params: init,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            step: 0,
        }
    }
}

/// Draws one batch of prompts. The standard regime emits fully specified
/// prompts only; the mixed regime flips a Bernoulli(ambiguous_fraction)
/// coin per prompt and removes conditions on heads.
pub fn draw_batch<R: Rng>(rng: &mut R, config: &TrainConfig) -> Result<Vec<Prompt>> {
    (0..config.batch_size)
        .map(|_| {
            let task = generate_task(rng, &config.task)?;
            let prompt = match config.mode {
                TrainMode::StandardRlvr => Prompt::standard(task),
                TrainMode::Icpo => {
                    if rng.gen::<f64>() < config.ambiguous_fraction {
                        simulate_underspecified(task, rng)
                    } else {
                        Prompt::standard(task)
                    }
                }
            };
            Ok(prompt)
        })
        .collect()
}

/// Runs one optimization step over a batch of prompts: rollout under the
/// current snapshot, reward routing, one gradient-ascent update, then trace
/// metrics at the new parameters. The sampling snapshot refreshes
/// implicitly because the next step samples under the updated parameters.
pub fn train_step(state: &mut TrainState, batch: &[Prompt], config: &TrainConfig) -> Result<StepRecord> {
    let mut groups = Vec::with_capacity(batch.len());
    let mut reward_sum = 0.0;
    let mut reward_count = 0usize;
    for prompt in batch {
        let group = sample_group(
            &state.params,
            prompt,
            config.group_size,
            &config.env,
            &mut state.rng,
        )?;
        let rewards: Vec<f64> = group
            .samples
            .iter()
            .map(|s| route_reward(prompt, s, &config.judge, &mut state.rng))
            .collect();
        reward_sum += rewards.iter().sum::<f64>();
        reward_count += rewards.len();
        groups.push(ScoredGroup { group, rewards });
    }

    let grad = gradient(
        &state.params,
        &state.ref_params,
        &groups,
        config.clip,
        config.kl_coefficient,
    )?;
    for (row, grow) in state.params.w.iter_mut().zip(grad.iter()) {
        for (w, g) in row.iter_mut().zip(grow.iter()) {
            *w += config.learning_rate * g;
        }
    }
    state.step += 1;
    if state.params.w.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Training {
            step: state.step,
            message: "parameter update produced non-finite weights".to_string(),
        });
    }

    let probes = ambiguous_probe_features();
    let kl_ref = mean_ref_kl(&state.params, &state.ref_params, &groups)?;
    let surrogate = objective(&state.params, &state.ref_params, &groups, config.clip, 0.0)?;
    Ok(StepRecord {
        step: state.step,
        entropy_probe: mean_probe_entropy(&state.params, &probes)?,
        mean_reward: reward_sum / reward_count as f64,
        objective: surrogate - config.kl_coefficient * kl_ref,
        kl_ref,
    })
}

/// Full training run from uniform initialization. Returns the final
/// parameters and the per-step trace.
pub fn train(config: &TrainConfig) -> Result<(PolicyParams, TrainTrace)> {
    config.validate()?;
    let mut state = TrainState::new(config);
    let mut trace = TrainTrace::default();
    for _ in 0..config.steps {
        let batch = draw_batch(&mut state.rng, config)?;
        let record = train_step(&mut state, &batch, config)?;
        trace.records.push(record);
    }
    Ok((state.params, trace))
}
