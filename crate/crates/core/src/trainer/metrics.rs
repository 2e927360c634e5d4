use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::PolicyId;
use crate::policy::PerPolicyBatch;

/// Per-policy statistics of one update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyStats {
    pub policy_id: PolicyId,
    pub groups: usize,
    pub mean_reward: f64,
    pub mean_abs_advantage: f64,
}

impl PolicyStats {
    pub fn of(batch: &PerPolicyBatch) -> Self {
        let candidates = batch.groups.iter().flat_map(|g| &g.candidates);
        let n = candidates.clone().count();
        let (mut reward, mut adv) = (0.0, 0.0);
        for c in candidates {
            reward += c.reward;
        }
        for a in batch.groups.iter().flat_map(|g| &g.advantages) {
            adv += a.abs();
        }
        let mean = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
        Self {
            policy_id: batch.policy_id,
            groups: batch.len(),
            mean_reward: mean(reward),
            mean_abs_advantage: mean(adv),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// 1-based index of the finished step.
    pub step: usize,
    pub policies: Vec<PolicyStats>,
    pub success_rate: f64,
    pub avg_turns: f64,
    /// Trajectories that ran to termination (E in tree mode, E·K in parallel mode).
    pub terminations: usize,
    pub usable_groups: usize,
    pub usable_groups_per_turn: Vec<usize>,
    pub wall_ms: u64,
}

/// Result of a greedy evaluation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub success_rate: f64,
    pub avg_turns: f64,
    pub episodes: usize,
}

impl EvalReport {
    pub fn from_episodes(episodes: &[(bool, usize)]) -> Result<Self> {
        if episodes.is_empty() {
            return Err(Error::config("eval_seeds", "evaluation needs at least one seed"));
        }
        let n = episodes.len() as f64;
        Ok(Self {
            success_rate: episodes.iter().filter(|e| e.0).count() as f64 / n,
            avg_turns: episodes.iter().map(|e| e.1 as f64).sum::<f64>() / n,
            episodes: episodes.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Train,
    Eval,
}

/// One line of the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub kind: RecordKind,
    pub step: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub policy_id: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_abs_advantage: Option<f64>,
    pub success_rate: f64,
    pub avg_turns: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub usable_groups: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub usable_groups_per_turn: Option<Vec<usize>>,
    pub wall_ms: u64,
}

impl MetricsRecord {
    /// One train record per policy.
    pub fn train(m: &StepMetrics) -> Vec<Self> {
        m.policies
            .iter()
            .map(|p| Self {
                kind: RecordKind::Train,
                step: m.step,
                policy_id: Some(p.policy_id.0),
                mean_reward: Some(p.mean_reward),
                mean_abs_advantage: Some(p.mean_abs_advantage),
                success_rate: m.success_rate,
                avg_turns: m.avg_turns,
                usable_groups: Some(m.usable_groups),
                usable_groups_per_turn: Some(m.usable_groups_per_turn.clone()),
                wall_ms: m.wall_ms,
            })
            .collect()
    }

    pub fn eval(step: usize, report: &EvalReport, wall_ms: u64) -> Self {
        Self {
            kind: RecordKind::Eval,
            step,
            policy_id: None,
            mean_reward: None,
            mean_abs_advantage: None,
            success_rate: report.success_rate,
            avg_turns: report.avg_turns,
            usable_groups: None,
            usable_groups_per_turn: None,
            wall_ms,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("metrics records serialize")
    }
}

/// Renders a log as newline-terminated JSON lines.
pub fn to_jsonl(records: &[MetricsRecord]) -> String {
    records.iter().map(|r| r.to_line() + "\n").collect()
}
