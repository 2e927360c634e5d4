//! Abstractions shared by every environment and the trainer: roles, the
//! agent-to-policy mapping, observations, macro-actions and run
//! configuration.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::Move;
use crate::error::{Error, Result};
use crate::reward::MixerConfig;

/// Index of an agent in `0..n_agents`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub usize);

/// Index of a policy (parameter vector) in `0..n_policies`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolicyId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "agent {}", self.0)
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "policy {}", self.0)
    }
}

/// Functional role of an agent inside an environment workflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Reasoner,
    Planner,
    Tool,
}

impl Role {
    pub fn tag(self) -> u8 {
        match self {
            Role::Reasoner => b'R',
            Role::Planner => b'P',
            Role::Tool => b'T',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Reasoner => "reasoner",
            Role::Planner => "planner",
            Role::Tool => "tool",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// σ: total map from agents to policies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMapping {
    assignment: Vec<PolicyId>,
}

impl RoleMapping {
    pub fn new(assignment: Vec<PolicyId>) -> Self {
        Self { assignment }
    }

    /// Every agent served by policy 0.
    pub fn shared(n_agents: usize) -> Self {
        Self::new(vec![PolicyId(0); n_agents])
    }

    /// Agent `i` served by policy `i`.
    pub fn specialized(n_agents: usize) -> Self {
        Self::new((0..n_agents).map(PolicyId).collect())
    }

    pub fn n_agents(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[PolicyId] {
        &self.assignment
    }

    /// Agents served by `policy`, in index order.
    pub fn agents_of(&self, policy: PolicyId) -> impl Iterator<Item = AgentId> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, p)| **p == policy)
            .map(|(i, _)| AgentId(i))
    }
}

/// Looks up σ(agent).
pub fn map_role(mapping: &RoleMapping, agent: AgentId) -> Result<PolicyId> {
    mapping
        .assignment
        .get(agent.0)
        .copied()
        .ok_or(Error::AgentOutOfRange {
            agent: agent.0,
            n_agents: mapping.n_agents(),
        })
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_agents: usize,
    pub n_policies: usize,
    pub turn_horizon: usize,
    pub branches: usize,
    pub n_envs: usize,
    pub total_steps: usize,
    /// 0 selects deterministic argmax.
    pub sample_temperature: f64,
    pub mixer: MixerConfig,
    pub seed: u64,
    pub eval_seeds: Vec<u64>,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            n_agents: 2,
            n_policies: 2,
            turn_horizon: 4,
            branches: 4,
            n_envs: 64,
            total_steps: 100,
            sample_temperature: 1.0,
            mixer: MixerConfig::default(),
            seed: 0,
            eval_seeds: Vec::new(),
        }
    }
}

/// A configuration whose invariants have been checked together with its
/// role mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    config: GameConfig,
    mapping: RoleMapping,
}

impl ValidatedConfig {
    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn mapping(&self) -> &RoleMapping {
        &self.mapping
    }

    pub fn into_parts(self) -> (GameConfig, RoleMapping) {
        (self.config, self.mapping)
    }
}

pub fn validate_config(cfg: GameConfig, mapping: RoleMapping) -> Result<ValidatedConfig> {
    if cfg.n_agents == 0 {
        return Err(Error::config("n_agents", "N must be at least 1"));
    }
    if cfg.n_policies == 0 {
        return Err(Error::config("n_policies", "M must be at least 1"));
    }
    if cfg.n_policies > cfg.n_agents {
        return Err(Error::config("n_policies", "M exceeds N"));
    }
    if cfg.turn_horizon == 0 {
        return Err(Error::config("turn_horizon", "T must be at least 1"));
    }
    if cfg.branches == 0 {
        return Err(Error::config("branches", "K must be at least 1"));
    }
    if cfg.n_envs == 0 {
        return Err(Error::config("n_envs", "E must be at least 1"));
    }
    if cfg.total_steps == 0 {
        return Err(Error::config("total_steps", "S must be at least 1"));
    }
    if !(cfg.sample_temperature >= 0.0 && cfg.sample_temperature.is_finite()) {
        return Err(Error::config(
            "sample_temperature",
            "temperature must be finite and non-negative",
        ));
    }
    cfg.mixer.validate()?;
    if mapping.n_agents() != cfg.n_agents {
        return Err(Error::config(
            "role_mapping",
            format!(
                "mapping covers {} agents but N = {}",
                mapping.n_agents(),
                cfg.n_agents
            ),
        ));
    }
    if let Some((agent, policy)) = mapping
        .assignment
        .iter()
        .enumerate()
        .find(|(_, p)| p.0 >= cfg.n_policies)
    {
        return Err(Error::config(
            "role_mapping",
            format!("agent {agent} mapped to {policy}, but M = {}", cfg.n_policies),
        ));
    }
    for m in 0..cfg.n_policies {
        if mapping.agents_of(PolicyId(m)).next().is_none() {
            return Err(Error::config(
                "role_mapping",
                format!("policy {m} has no agents"),
            ));
        }
    }
    Ok(ValidatedConfig {
        config: cfg,
        mapping,
    })
}

/// What an acting agent sees: its role tag plus a canonical byte encoding
/// of the state and interaction history.
///
/// Two observations are equal iff their encodings are byte-identical.
#[derive(Debug, Clone)]
pub struct Observation {
    pub role: Role,
    pub turn: usize,
    pub encoding: Arc<[u8]>,
    /// Fixed-length state summary for the environment.
    pub features: Vec<f64>,
}

impl PartialEq for Observation {
    fn eq(&self, other: &Self) -> bool {
        self.encoding == other.encoding
    }
}

impl Eq for Observation {}

impl Observation {
    /// Hex SHA-256 prefix of the encoding, used in dumps.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(&self.encoding);
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Environment-specific content of a macro-action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payload {
    Move(Move),
    Fill { row: u8, col: u8, value: u8 },
    Submit,
    /// Only produced by fault injection; models an unparseable response.
    Malformed,
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Move(m) => write!(f, "{}", m.symbol()),
            Payload::Fill { row, col, value } => write!(f, "[{row},{col},{value}]"),
            Payload::Submit => f.write_str("submit"),
            Payload::Malformed => f.write_str("<malformed>"),
        }
    }
}

/// One policy output treated as a single atomic action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroAction {
    pub menu_index: usize,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationCause {
    Solved,
    Horizon,
    DeadEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationFlag {
    pub done: bool,
    pub cause: Option<TerminationCause>,
}

impl TerminationFlag {
    pub const RUNNING: TerminationFlag = TerminationFlag {
        done: false,
        cause: None,
    };

    pub fn done(cause: TerminationCause) -> Self {
        Self {
            done: true,
            cause: Some(cause),
        }
    }

    pub fn is_solved(&self) -> bool {
        self.cause == Some(TerminationCause::Solved)
    }
}

/// Position of a transition inside an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurnClock {
    pub turn: usize,
    pub horizon: usize,
}

impl TurnClock {
    pub fn is_last(&self) -> bool {
        self.turn + 1 >= self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, m: usize) -> GameConfig {
        GameConfig {
            n_agents: n,
            n_policies: m,
            ..GameConfig::default()
        }
    }

    #[test]
    fn presets_validate() {
        assert!(validate_config(cfg(2, 1), RoleMapping::shared(2)).is_ok());
        assert!(validate_config(cfg(2, 2), RoleMapping::specialized(2)).is_ok());
    }

    #[test]
    fn non_surjective_mapping_is_rejected() {
        let mapping = RoleMapping::new(vec![PolicyId(0), PolicyId(0)]);
        let err = validate_config(cfg(2, 2), mapping).unwrap_err();
        assert!(err.to_string().contains("policy 1 has no agents"), "{err}");
    }

    #[test]
    fn first_violation_is_named() {
        let err = validate_config(cfg(2, 3), RoleMapping::specialized(2)).unwrap_err();
        assert!(err.to_string().contains("M exceeds N"));
        let err = validate_config(
            GameConfig {
                branches: 0,
                ..cfg(2, 2)
            },
            RoleMapping::specialized(2),
        )
        .unwrap_err();
        assert!(err.to_string().contains("branches"));
        let err = validate_config(
            GameConfig {
                sample_temperature: -0.5,
                ..cfg(2, 2)
            },
            RoleMapping::specialized(2),
        )
        .unwrap_err();
        assert!(err.to_string().contains("sample_temperature"));
    }

    #[test]
    fn map_role_presets() {
        assert_eq!(map_role(&RoleMapping::shared(2), AgentId(1)).unwrap(), PolicyId(0));
        assert_eq!(
            map_role(&RoleMapping::specialized(2), AgentId(1)).unwrap(),
            PolicyId(1)
        );
        assert!(matches!(
            map_role(&RoleMapping::shared(2), AgentId(4)),
            Err(Error::AgentOutOfRange { agent: 4, n_agents: 2 })
        ));
    }

    #[test]
    fn observation_equality_is_byte_equality() {
        let a = Observation {
            role: Role::Planner,
            turn: 0,
            encoding: Arc::from(&b"abc"[..]),
            features: vec![1.0],
        };
        let mut b = a.clone();
        b.features = vec![2.0];
        assert_eq!(a, b);
        b.encoding = Arc::from(&b"abd"[..]);
        assert_ne!(a, b);
        assert_ne!(a.digest(), b.digest());
    }
}
