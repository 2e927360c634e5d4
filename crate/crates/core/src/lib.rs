//! Agent- and turn-wise grouped policy optimization for small turn-based
//! multi-agent games (Sudoku, grid path planning, Sokoban).
//!
//! A rollout samples `K` candidate actions for every agent at every turn,
//! scores them with a mixed team/role reward, normalises the rewards inside
//! each group and routes the groups to whichever policy drives that agent.

pub mod env;
pub mod error;
pub mod game;
pub mod group;
pub mod policy;
pub mod reward;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use game::{
    map_role, validate_config, AgentId, GameConfig, MacroAction, Observation, Payload, PolicyId, Role,
    RoleMapping, TerminationCause, TerminationFlag, TurnClock, ValidatedConfig,
};
pub use trainer::{evaluate, swap_policies, train, RoleMode, Trainer, TrainerConfig};
