//! Policies: the trainable linear-softmax family and scripted baselines.

pub mod checkpoint;
mod scripted;
mod softmax;

use serde::{Deserialize, Serialize};

pub use scripted::{ScriptedKind, ScriptedPolicy};
pub use softmax::{distribution, logits, logprob, loss, sample_k, update, LossReport};

use crate::env::{CandidateMenu, EnvState};
use crate::error::{Error, Result};
use crate::game::{MacroAction, Observation, PolicyId, Role};
use crate::group::Group;
use crate::rng::Rng;

/// Versioned weight vector of a menu-softmax policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub policy_id: PolicyId,
    pub version: u64,
    pub weights: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(policy_id: PolicyId, dim: usize) -> Self {
        Self {
            policy_id,
            version: 0,
            weights: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleResult {
    pub action: MacroAction,
    /// log π(action) at the sampling temperature; 0 for deterministic picks.
    pub logprob: f64,
    pub sampled_version: u64,
}

/// Everything a policy may look at when acting.
#[derive(Debug, Clone, Copy)]
pub struct Decision<'a> {
    pub state: &'a EnvState,
    pub role: Role,
    pub observation: &'a Observation,
    pub menu: &'a CandidateMenu,
}

pub trait Policy: Send + Sync {
    /// Draws `k` actions from the menu.
    fn sample(&self, decision: &Decision<'_>, temperature: f64, k: usize, rng: &mut Rng) -> Result<Vec<SampleResult>>;

    /// Version stamp attached to samples.
    fn version(&self) -> u64 {
        0
    }
}

impl Policy for PolicyParams {
    fn sample(&self, decision: &Decision<'_>, temperature: f64, k: usize, rng: &mut Rng) -> Result<Vec<SampleResult>> {
        sample_k(self, decision.observation, decision.menu, temperature, k, rng)
    }

    fn version(&self) -> u64 {
        self.version
    }
}

/// The union of groups routed to one policy for one update.
#[derive(Debug, Clone, PartialEq)]
pub struct PerPolicyBatch {
    pub policy_id: PolicyId,
    pub version: u64,
    /// Temperature the samples were drawn at.
    pub temperature: f64,
    pub groups: Vec<Group>,
}

impl PerPolicyBatch {
    pub fn empty(policy_id: PolicyId, version: u64, temperature: f64) -> Self {
        Self {
            policy_id,
            version,
            temperature,
            groups: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Rejects data not produced by `params` at its current version.
    pub fn check_on_policy(&self, params: &PolicyParams) -> Result<()> {
        if self.policy_id != params.policy_id {
            return Err(Error::Routing(format!(
                "batch for {} offered to {}",
                self.policy_id, params.policy_id
            )));
        }
        let stale = |data: u64| Error::OnPolicy {
            policy: params.policy_id.0,
            params: params.version,
            data,
        };
        if self.version != params.version {
            return Err(stale(self.version));
        }
        if let Some(c) = self
            .groups
            .iter()
            .flat_map(|g| &g.candidates)
            .find(|c| c.version != params.version)
        {
            return Err(stale(c.version));
        }
        Ok(())
    }
}
