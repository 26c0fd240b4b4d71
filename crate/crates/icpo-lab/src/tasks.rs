//! Synthetic verifiable tasks and the condition-removal transform.
//!
//! A task is a list of named integer conditions combined left-to-right by a
//! fixed sequence of `+`, `-`, `*` operations, so every task carries its own
//! ground truth and any answer can be checked programmatically. Removing one
//! or two conditions produces an underspecified prompt for which no correct
//! answer is derivable.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary operation applied between adjacent condition values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
}

impl BinOp {
    pub fn apply(self, lhs: i64, rhs: i64) -> i64 {
        match self {
            BinOp::Add => lhs + rhs,
            BinOp::Sub => lhs - rhs,
            BinOp::Mul => lhs * rhs,
        }
    }
}

/// Left-to-right arithmetic composition over all condition values.
///
/// An expression with `n` operations covers exactly `n + 1` conditions, so
/// each condition is referenced exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Expression(pub Vec<BinOp>);

impl Expression {
    /// Evaluates the expression over `values`, strictly left-to-right
    /// (no operator precedence). `values.len()` must equal `ops + 1`.
    pub fn evaluate(&self, values: &[i64]) -> i64 {
        assert_eq!(
            values.len(),
            self.0.len() + 1,
            "expression arity does not match value count"
        );
        let mut acc = values[0];
        for (op, v) in self.0.iter().zip(&values[1..]) {
            acc = op.apply(acc, *v);
        }
        acc
    }
}

/// A named integer quantity appearing in a task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub value: i64,
}

/// A solvable synthetic problem with verifiable ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionedTask {
    pub task_id: String,
    pub conditions: Vec<Condition>,
    pub expression: Expression,
    pub ground_truth: i64,
}

impl ConditionedTask {
    /// Number of conditions K.
    pub fn condition_count(&self) -> usize {
        self.conditions.len()
    }

    pub fn condition_values(&self) -> Vec<i64> {
        self.conditions.iter().map(|c| c.value).collect()
    }
}

/// Bounds for task generation. The family itself is constrained to
/// K in [3, 6] conditions with values in [1, 20]; a config may only
/// narrow those ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub min_conditions: usize,
    pub max_conditions: usize,
    pub min_value: i64,
    pub max_value: i64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            min_conditions: 3,
            max_conditions: 6,
            min_value: 1,
            max_value: 20,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_conditions < 3 || self.min_conditions > self.max_conditions {
            return Err(Error::config(
                "task.min_conditions",
                "condition count range must satisfy 3 <= min <= max <= 6",
            ));
        }
        if self.max_conditions > 6 {
            return Err(Error::config(
                "task.max_conditions",
                "condition count range must satisfy 3 <= min <= max <= 6",
            ));
        }
        if self.min_value < 1 || self.min_value > self.max_value {
            return Err(Error::config(
                "task.min_value",
                "value range must satisfy 1 <= min <= max <= 20",
            ));
        }
        if self.max_value > 20 {
            return Err(Error::config(
                "task.max_value",
                "value range must satisfy 1 <= min <= max <= 20",
            ));
        }
        Ok(())
    }
}

const CONDITION_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Generates a task from the given RNG state. Identical RNG state and
/// config yield the identical task.
pub fn generate_task<R: Rng>(rng: &mut R, config: &TaskConfig) -> Result<ConditionedTask> {
    config.validate()?;
    let task_id = format!("task-{:016x}", rng.gen::<u64>());
    let k = rng.gen_range(config.min_conditions..=config.max_conditions);
    let conditions: Vec<Condition> = (0..k)
        .map(|i| Condition {
            name: CONDITION_NAMES[i].to_string(),
            value: rng.gen_range(config.min_value..=config.max_value),
        })
        .collect();
    let ops: Vec<BinOp> = (0..k - 1)
        .map(|_| match rng.gen_range(0..3) {
            0 => BinOp::Add,
            1 => BinOp::Sub,
            _ => BinOp::Mul,
        })
        .collect();
    let expression = Expression(ops);
    let ground_truth = expression.evaluate(
        &conditions.iter().map(|c| c.value).collect::<Vec<_>>(),
    );
    Ok(ConditionedTask {
        task_id,
        conditions,
        expression,
        ground_truth,
    })
}

/// True iff `answer` matches the task's ground truth.
pub fn evaluate_answer(task: &ConditionedTask, answer: i64) -> bool {
    answer == task.ground_truth
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Standard,
    Underspecified,
}

/// A task as presented to the policy: either complete, or with one or two
/// conditions withheld.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    kind: PromptKind,
    base: ConditionedTask,
    removed: BTreeSet<usize>,
    visible: BTreeSet<usize>,
}

impl Prompt {
    /// The unmodified task: every condition visible.
    pub fn standard(task: ConditionedTask) -> Self {
        let visible = (0..task.condition_count()).collect();
        Prompt {
            kind: PromptKind::Standard,
            base: task,
            removed: BTreeSet::new(),
            visible,
        }
    }

    /// A view with exactly the given conditions visible, as produced by a
    /// conversation harness part-way through revelation. Indices must be
    /// valid for the task.
    pub fn with_visible(task: ConditionedTask, visible: BTreeSet<usize>) -> Result<Self> {
        let k = task.condition_count();
        if visible.iter().any(|&i| i >= k) {
            return Err(Error::Argument(format!(
                "visible index out of range for a {k}-condition task"
            )));
        }
        let removed: BTreeSet<usize> = (0..k).filter(|i| !visible.contains(i)).collect();
        let kind = if removed.is_empty() {
            PromptKind::Standard
        } else {
            PromptKind::Underspecified
        };
        Ok(Prompt {
            kind,
            base: task,
            removed,
            visible,
        })
    }

    pub fn kind(&self) -> PromptKind {
        self.kind
    }

    pub fn base(&self) -> &ConditionedTask {
        &self.base
    }

    pub fn removed(&self) -> &BTreeSet<usize> {
        &self.removed
    }

    pub fn visible(&self) -> &BTreeSet<usize> {
        &self.visible
    }

    pub fn visible_count(&self) -> usize {
        self.visible.len()
    }

    /// Reveals a previously removed condition, as a conversation harness
    /// would when the user supplies missing information. Once nothing is
    /// removed the prompt is standard again.
    pub fn reveal(&mut self, index: usize) {
        if self.removed.remove(&index) {
            self.visible.insert(index);
        }
        if self.removed.is_empty() {
            self.kind = PromptKind::Standard;
        }
    }
}

/// Deletes one or two conditions uniformly at random, producing an
/// underspecified prompt that no longer determines its ground truth.
pub fn simulate_underspecified<R: Rng>(task: ConditionedTask, rng: &mut R) -> Prompt {
    let k = task.condition_count();
    let remove_count = rng.gen_range(1..=2usize);
    let mut removed = BTreeSet::new();
    while removed.len() < remove_count {
        removed.insert(rng.gen_range(0..k));
    }
    let visible = (0..k).filter(|i| !removed.contains(i)).collect();
    Prompt {
        kind: PromptKind::Underspecified,
        base: task,
        removed,
        visible,
    }
}

/// True iff every condition of the underlying task is visible.
pub fn solvable(prompt: &Prompt) -> bool {
    prompt.visible.len() == prompt.base.condition_count()
}

/// Line-delimited JSON record for tasks and prompts. Field order is fixed
/// for diff-stable output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub conditions: Vec<Condition>,
    pub expression: Expression,
    pub ground_truth: i64,
    pub removed: Vec<usize>,
}

impl TaskRecord {
    pub fn from_task(task: &ConditionedTask) -> Self {
        TaskRecord {
            task_id: task.task_id.clone(),
            conditions: task.conditions.clone(),
            expression: task.expression.clone(),
            ground_truth: task.ground_truth,
            removed: Vec::new(),
        }
    }

    pub fn from_prompt(prompt: &Prompt) -> Self {
        TaskRecord {
            task_id: prompt.base.task_id.clone(),
            conditions: prompt.base.conditions.clone(),
            expression: prompt.base.expression.clone(),
            ground_truth: prompt.base.ground_truth,
            removed: prompt.removed.iter().copied().collect(),
        }
    }

    pub fn to_jsonl(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
