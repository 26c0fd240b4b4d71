//! Sharded multi-turn conversation harness and its aggregations.
//!
//! A conversation over a K-condition task lasts exactly K turns. Conditions
//! are revealed one per turn in a uniformly random order, so the view is
//! unsolvable at every turn before the last and solvable at the last. Each
//! turn the policy emits one response; answer attempts are realized by the
//! environment, with every wrong attempt so far halving (by the configured
//! decay) the chance of a later correct one. A conversation scores correct
//! iff its final turn is a correct answer attempt.
//!
//! Aggregations mirror the evaluation protocol: final-response accuracy,
//! judged-type frequencies (optionally excluding Missing), accuracy bucketed
//! by when the first answer attempt happened, and per-turn policy entropy.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{
    action_distribution, entropy, featurize, realize_answer, sample_type, EnvConfig, FeatureVec,
    PolicyParams, ResponseSample, ResponseType, TYPE_COUNT,
};
use crate::reward::{judge, JudgeConfig};
use crate::tasks::{evaluate_answer, generate_task, ConditionedTask, Prompt, TaskConfig};

/// Reveal plan for one conversation: a full permutation of the task's
/// condition indices, one revealed per turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardSchedule {
    pub task: ConditionedTask,
    pub reveal_order: Vec<usize>,
    pub total_turns: usize,
}

impl ShardSchedule {
    /// The set of condition indices visible at 1-based turn `t`.
    pub fn visible_at(&self, t: usize) -> BTreeSet<usize> {
        self.reveal_order[..t].iter().copied().collect()
    }
}

/// Draws a uniformly random reveal order; the conversation length equals
/// the task's condition count.
pub fn make_schedule<R: Rng>(task: ConditionedTask, rng: &mut R) -> ShardSchedule {
    use rand::seq::SliceRandom;
    let k = task.condition_count();
    let mut reveal_order: Vec<usize> = (0..k).collect();
    reveal_order.shuffle(rng);
    ShardSchedule {
        task,
        reveal_order,
        total_turns: k,
    }
}

/// One conversation turn as recorded in transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub t: usize,
    pub visible: usize,
    #[serde(rename = "type")]
    pub response_type: ResponseType,
    pub judged: ResponseType,
    pub answer: Option<i64>,
    pub correct: Option<bool>,
}

/// Full record of one conversation. Serializes one per JSONL line as
/// `{task_id, turns, first_attempt_turn, final_correct}`; the wrong-attempt
/// counter is bookkeeping for the environment and stays internal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationTranscript {
    pub task_id: String,
    pub turns: Vec<TurnRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_attempt_turn: Option<usize>,
    pub final_correct: bool,
    #[serde(skip)]
    pub wrong_attempt_count: usize,
}

impl ConversationTranscript {
    pub fn to_jsonl(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn drive_conversation<F>(
    schedule: &ShardSchedule,
    env: &EnvConfig,
    judge_cfg: &JudgeConfig,
    rng: &mut ChaCha8Rng,
    mut choose: F,
) -> Result<ConversationTranscript>
where
    F: FnMut(usize, FeatureVec, &mut ChaCha8Rng) -> Result<ResponseType>,
{
    let task = &schedule.task;
    let k = task.condition_count();
    let mut wrong_attempts = 0u32;
    let mut turns = Vec::with_capacity(schedule.total_turns);
    let mut first_attempt_turn = None;
    let mut final_correct = false;
    for t in 1..=schedule.total_turns {
        let prompt = Prompt::with_visible(task.clone(), schedule.visible_at(t))?;
        let features = featurize(prompt.visible_count(), k)?;
        let response_type = choose(t, features, rng)?;
        let answer = (response_type == ResponseType::AnswerAttempt)
            .then(|| realize_answer(&prompt, wrong_attempts, env, rng));
        let sample = ResponseSample {
            response_type,
            answer,
            log_prob_old: 0.0,
            features,
        };
        let judged = judge(&sample, judge_cfg, rng);
        let correct = answer.map(|a| evaluate_answer(task, a));
        if response_type == ResponseType::AnswerAttempt && first_attempt_turn.is_none() {
            first_attempt_turn = Some(t);
        }
        if correct == Some(false) {
            wrong_attempts += 1;
        }
        if t == schedule.total_turns {
            final_correct = response_type == ResponseType::AnswerAttempt && correct == Some(true);
        }
        turns.push(TurnRecord {
            t,
            visible: prompt.visible_count(),
            response_type,
            judged,
            answer,
            correct,
        });
    }
    Ok(ConversationTranscript {
        task_id: task.task_id.clone(),
        turns,
        first_attempt_turn,
        final_correct,
        wrong_attempt_count: wrong_attempts as usize,
    })
}

/// Plays one conversation with the softmax policy choosing each turn's
/// response.
pub fn run_conversation(
    params: &PolicyParams,
    schedule: &ShardSchedule,
    env: &EnvConfig,
    judge_cfg: &JudgeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ConversationTranscript> {
    drive_conversation(schedule, env, judge_cfg, rng, |_, features, rng| {
        sample_type(params, features, rng)
    })
}

/// Plays one conversation with a scripted chooser instead of the softmax
/// policy; used for environment validation with hand-designed behaviors.
pub fn run_scripted_conversation<F>(
    schedule: &ShardSchedule,
    env: &EnvConfig,
    judge_cfg: &JudgeConfig,
    rng: &mut ChaCha8Rng,
    choose: F,
) -> Result<ConversationTranscript>
where
    F: FnMut(usize, FeatureVec, &mut ChaCha8Rng) -> Result<ResponseType>,
{
    drive_conversation(schedule, env, judge_cfg, rng, choose)
}

/// Maps a transcript to its first-attempt timing bucket: five equal
/// intervals of elapsed conversation fraction. Returns None when no answer
/// was ever attempted.
pub fn first_attempt_bucket(transcript: &ConversationTranscript) -> Option<usize> {
    let t = transcript.first_attempt_turn?;
    let total = transcript.turns.len();
    Some((5 * (t - 1) / total).min(4))
}

/// Aggregated multi-turn evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtReport {
    pub mt_accuracy: f64,
    pub type_distribution: [f64; TYPE_COUNT],
    pub type_distribution_excluding_missing: [f64; TYPE_COUNT - 1],
    pub bucket_accuracy: [f64; 5],
    pub bucket_counts: [usize; 5],
    pub no_attempt_count: usize,
    pub mean_entropy_by_turn: Vec<f64>,
    pub n_conversations: usize,
}

/// Judged-type frequencies over all turns of all transcripts. With
/// `exclude_missing` the Missing turns are dropped and the remaining six
/// frequencies renormalized.
pub fn response_type_distribution(
    transcripts: &[ConversationTranscript],
    exclude_missing: bool,
) -> Result<Vec<f64>> {
    let mut counts = [0usize; TYPE_COUNT];
    for tr in transcripts {
        for turn in &tr.turns {
            counts[turn.judged.index()] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Argument(
            "type distribution over zero recorded turns".to_string(),
        ));
    }
    if exclude_missing {
        let kept: usize = counts[..TYPE_COUNT - 1].iter().sum();
        if kept == 0 {
            return Err(Error::Argument(
                "type distribution is empty after excluding Missing".to_string(),
            ));
        }
        Ok(counts[..TYPE_COUNT - 1]
            .iter()
            .map(|&c| c as f64 / kept as f64)
            .collect())
    } else {
        Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }
}

impl MtReport {
    /// Aggregates transcripts into accuracy, type, and bucket statistics.
    /// The per-turn entropy list is left empty; `evaluate_multiturn` fills
    /// it from the policy it drives.
    pub fn from_transcripts(transcripts: &[ConversationTranscript]) -> Result<Self> {
        if transcripts.is_empty() {
            return Err(Error::Argument(
                "report requires at least one conversation".to_string(),
            ));
        }
        let n = transcripts.len();
        let mt_accuracy =
            transcripts.iter().filter(|t| t.final_correct).count() as f64 / n as f64;

        let full = response_type_distribution(transcripts, false)?;
        let mut type_distribution = [0.0; TYPE_COUNT];
        type_distribution.copy_from_slice(&full);
        let excl = response_type_distribution(transcripts, true)?;
        let mut type_distribution_excluding_missing = [0.0; TYPE_COUNT - 1];
        type_distribution_excluding_missing.copy_from_slice(&excl);

        let mut bucket_counts = [0usize; 5];
        let mut bucket_correct = [0usize; 5];
        let mut no_attempt_count = 0usize;
        for tr in transcripts {
            match first_attempt_bucket(tr) {
                Some(b) => {
                    bucket_counts[b] += 1;
                    if tr.final_correct {
                        bucket_correct[b] += 1;
                    }
                }
                None => no_attempt_count += 1,
            }
        }
        let mut bucket_accuracy = [0.0; 5];
        for b in 0..5 {
            if bucket_counts[b] > 0 {
                bucket_accuracy[b] = bucket_correct[b] as f64 / bucket_counts[b] as f64;
            }
        }

        Ok(MtReport {
            mt_accuracy,
            type_distribution,
            type_distribution_excluding_missing,
            bucket_accuracy,
            bucket_counts,
            no_attempt_count,
            mean_entropy_by_turn: Vec::new(),
            n_conversations: n,
        })
    }
}

/// Evaluates a policy over freshly generated conversations.
///
/// Each conversation draws two sub-seeds from the master stream, one for
/// task generation and scheduling and one for in-conversation randomness, so
/// two policies evaluated with the same master seed face the identical task
/// sequence.
pub fn evaluate_multiturn(
    params: &PolicyParams,
    n_tasks: usize,
    task_cfg: &TaskConfig,
    env: &EnvConfig,
    judge_cfg: &JudgeConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(MtReport, Vec<ConversationTranscript>)> {
    if n_tasks == 0 {
        return Err(Error::Argument(
            "evaluation requires at least one conversation".to_string(),
        ));
    }
    task_cfg.validate()?;
    env.validate()?;
    judge_cfg.validate()?;

    let max_turns = task_cfg.max_conditions;
    let mut entropy_sums = vec![0.0; max_turns];
    let mut entropy_counts = vec![0usize; max_turns];
    let mut transcripts = Vec::with_capacity(n_tasks);
    for _ in 0..n_tasks {
        let task_seed = rng.gen::<u64>();
        let conv_seed = rng.gen::<u64>();
        let mut task_rng = ChaCha8Rng::seed_from_u64(task_seed);
        let task = generate_task(&mut task_rng, task_cfg)?;
        let k = task.condition_count();
        let schedule = make_schedule(task, &mut task_rng);
        for t in 1..=schedule.total_turns {
            let f = featurize(t, k)?;
            entropy_sums[t - 1] += entropy(&action_distribution(params, f)?);
            entropy_counts[t - 1] += 1;
        }
        let mut conv_rng = ChaCha8Rng::seed_from_u64(conv_seed);
        transcripts.push(run_conversation(
            params, &schedule, env, judge_cfg, &mut conv_rng,
        )?);
    }

    let mut report = MtReport::from_transcripts(&transcripts)?;
    report.mean_entropy_by_turn = entropy_sums
        .iter()
        .zip(&entropy_counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&s, &c)| s / c as f64)
        .collect();
    Ok((report, transcripts))
}
