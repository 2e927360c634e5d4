use thiserror::Error;

/// Errors produced anywhere in the training stack.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration invariant failed. `field` names the offending field.
    #[error("invalid configuration ({field}): {reason}")]
    Config { field: &'static str, reason: String },

    #[error("agent {agent} out of range (n_agents = {n_agents})")]
    AgentOutOfRange { agent: usize, n_agents: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("empty menu: state is terminal")]
    EmptyMenu,

    /// An operation was called outside its contract (e.g. an action that
    /// was never offered by the menu).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("instance generation failed for seed {seed} after {attempts} attempts")]
    Generation { seed: u64, attempts: usize },

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("mixed-prompt group {0}")]
    MixedPromptGroup(String),

    #[error("incomplete group {key}: expected {expected} candidates, found {found}")]
    IncompleteGroup {
        key: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("on-policy violation for policy {policy}: parameters at version {params}, data from version {data}")]
    OnPolicy { policy: usize, params: u64, data: u64 },

    #[error("routing violation: {0}")]
    Routing(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
