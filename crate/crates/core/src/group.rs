//! Agent- and turn-wise groups and group-relative advantages.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::CandidateMenu;
use crate::error::{Error, Result};
use crate::game::{MacroAction, Observation};

/// Identity of a group: which environment, agent, turn and training step
/// produced it. Ordering and hashing are those of the tuple, so distinct
/// tuples never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub env_id: usize,
    pub agent: usize,
    pub turn: usize,
    pub step: usize,
    /// Trajectory slot under parallel sampling; always 0 in tree mode.
    #[serde(default)]
    pub branch: usize,
}

impl GroupKey {
    pub fn with_branch(self, branch: usize) -> Self {
        Self { branch, ..self }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(e={}, i={}, t={}, s={})",
            self.env_id, self.agent, self.turn, self.step
        )?;
        if self.branch != 0 {
            write!(f, "[b={}]", self.branch)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyBounds {
    pub n_envs: usize,
    pub n_agents: usize,
    pub turn_horizon: usize,
    pub total_steps: usize,
}

pub fn group_key(env_id: usize, agent: usize, turn: usize, step: usize, bounds: &KeyBounds) -> Result<GroupKey> {
    let checks = [
        ("env", env_id, bounds.n_envs),
        ("agent", agent, bounds.n_agents),
        ("turn", turn, bounds.turn_horizon),
        ("step", step, bounds.total_steps),
    ];
    if let Some((name, v, bound)) = checks.iter().find(|(_, v, b)| v >= b) {
        return Err(Error::IndexOutOfRange(format!("{name} index {v} >= {bound}")));
    }
    Ok(GroupKey {
        env_id,
        agent,
        turn,
        step,
        branch: 0,
    })
}

/// One sampled candidate of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub observation: Arc<Observation>,
    pub action: MacroAction,
    pub reward: f64,
    pub logprob: f64,
    /// Parameter version that produced the sample.
    pub version: u64,
}

/// K candidate actions sampled against one observation, with their
/// rewards and advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub key: GroupKey,
    pub observation: Arc<Observation>,
    pub menu: Arc<CandidateMenu>,
    pub candidates: Vec<Candidate>,
    pub advantages: Vec<f64>,
}

impl Group {
    pub fn rewards(&self) -> Vec<f64> {
        self.candidates.iter().map(|c| c.reward).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn record(&self) -> GroupRecord {
        GroupRecord {
            env_id: self.key.env_id,
            agent: self.key.agent,
            turn: self.key.turn,
            step: self.key.step,
            observation_digest: self.observation.digest(),
            rewards: self.rewards(),
            advantages: self.advantages.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// K branches at every (agent, turn); the best branch is executed.
    #[default]
    Tree,
    /// K independent full trajectories from the initial state.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupStatus {
    Usable,
    /// Single-member group: no comparison is possible, excluded from training.
    Degenerate,
}

/// Checks prompt identity across candidates and, in tree mode, the group size.
pub fn assert_group_valid(group: &Group, mode: SamplingMode, branches: usize) -> Result<GroupStatus> {
    if let Some(bad) = group
        .candidates
        .iter()
        .find(|c| c.observation.encoding != group.observation.encoding)
    {
        return Err(Error::MixedPromptGroup(format!(
            "{}: candidate observation {} differs from group observation {}",
            group.key,
            bad.observation.digest(),
            group.observation.digest()
        )));
    }
    if mode == SamplingMode::Tree && group.len() != branches {
        return Err(Error::IncompleteGroup {
            key: group.key.to_string(),
            expected: branches,
            found: group.len(),
        });
    }
    if group.advantages.len() != group.len() {
        return Err(Error::contract(format!(
            "group {} has {} advantages for {} candidates",
            group.key,
            group.advantages.len(),
            group.len()
        )));
    }
    Ok(if group.len() < 2 {
        GroupStatus::Degenerate
    } else {
        GroupStatus::Usable
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneratePolicy {
    #[default]
    ZeroAdvantages,
    DropGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdDivisor {
    /// K − 1.
    #[default]
    Sample,
    /// K.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageConfig {
    pub norm_epsilon: f64,
    pub degenerate_policy: DegeneratePolicy,
    pub std_divisor: StdDivisor,
}

impl Default for AdvantageConfig {
    fn default() -> Self {
        Self {
            norm_epsilon: 1e-8,
            degenerate_policy: DegeneratePolicy::ZeroAdvantages,
            std_divisor: StdDivisor::Sample,
        }
    }
}

impl AdvantageConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.norm_epsilon > 0.0 && self.norm_epsilon.is_finite()) {
            return Err(Error::config("norm_epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// Standard deviation with the configured divisor.
pub fn std_dev(values: &[f64], divisor: StdDivisor) -> f64 {
    let n = values.len();
    let denom = match divisor {
        StdDivisor::Sample => n.saturating_sub(1),
        StdDivisor::Population => n,
    };
    if denom == 0 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / denom as f64).sqrt()
}

/// `A_k = (R_k − mean(R)) / std(R)`.
///
/// Returns `None` when the group is degenerate (K = 1 or std ≤ ε) and the
/// policy is [`DegeneratePolicy::DropGroup`]; all zeros under the default
/// policy.
pub fn compute_advantages(rewards: &[f64], cfg: &AdvantageConfig) -> Result<Option<Vec<f64>>> {
    if rewards.is_empty() {
        return Err(Error::contract("advantages need at least one reward"));
    }
    if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite(format!("reward {r}")));
    }
    let std = std_dev(rewards, cfg.std_divisor);
    if rewards.len() == 1 || std <= cfg.norm_epsilon {
        return Ok(match cfg.degenerate_policy {
            DegeneratePolicy::ZeroAdvantages => Some(vec![0.0; rewards.len()]),
            DegeneratePolicy::DropGroup => None,
        });
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    Ok(Some(rewards.iter().map(|r| (r - mean) / std).collect()))
}

/// Line-delimited dump record of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub env_id: usize,
    pub agent: usize,
    pub turn: usize,
    pub step: usize,
    pub observation_digest: String,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}
