//! Deterministic two-role environments: Sudoku, Plan-Path and Sokoban.
//!
//! Every environment exposes the same surface through [`EnvState`]:
//! seeded generation, per-role observations, finite candidate menus, a
//! per-agent step and the joint `apply` transition.

mod grid;
pub mod plan_path;
pub mod sokoban;
pub mod sudoku;
pub mod text;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use grid::{bfs_distance, distance_field, sp_next, Grid, Move, Pos};
pub use plan_path::PlanPathState;
pub use sokoban::{box_goal_potential, corner_deadlock_free, SokobanState};
pub use sudoku::SudokuState;

use crate::error::{Error, Result};
use crate::game::{
    MacroAction, Observation, Payload, Role, TerminationCause, TerminationFlag, TurnClock,
};

/// Retry bound for instance generators.
pub const GENERATION_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Sudoku,
    PlanPath,
    Sokoban,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Sudoku, EnvKind::PlanPath, EnvKind::Sokoban];

    /// Roles in the fixed order in which their actions are applied.
    pub fn roles(self) -> [Role; 2] {
        match self {
            EnvKind::Sudoku => [Role::Reasoner, Role::Tool],
            EnvKind::PlanPath | EnvKind::Sokoban => [Role::Planner, Role::Tool],
        }
    }

    pub fn role_slot(self, role: Role) -> Result<usize> {
        self.roles()
            .iter()
            .position(|&r| r == role)
            .ok_or_else(|| Error::contract(format!("role {role} does not exist in {self}")))
    }

    pub fn default_size(self) -> usize {
        match self {
            EnvKind::Sudoku => 4,
            EnvKind::PlanPath => 10,
            EnvKind::Sokoban => 6,
        }
    }

    fn block_features(self) -> usize {
        match self {
            EnvKind::Sudoku => sudoku::FEATURES,
            EnvKind::PlanPath => plan_path::FEATURES,
            EnvKind::Sokoban => sokoban::FEATURES,
        }
    }

    /// Length of a menu entry's feature vector: one block per role.
    pub fn feature_dim(self) -> usize {
        self.block_features() * self.roles().len()
    }

    fn tag(self) -> u8 {
        match self {
            EnvKind::Sudoku => b'S',
            EnvKind::PlanPath => b'P',
            EnvKind::Sokoban => b'K',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Sudoku => "sudoku",
            EnvKind::PlanPath => "plan-path",
            EnvKind::Sokoban => "sokoban",
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown environment `{s}`")))
    }
}

/// Which instances to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub size: usize,
    /// 1..=3.
    pub difficulty: u8,
}

impl EnvSpec {
    pub fn new(kind: EnvKind) -> Self {
        Self {
            kind,
            size: kind.default_size(),
            difficulty: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.difficulty) {
            return Err(Error::config("difficulty", "difficulty must be in 1..=3"));
        }
        let ok = match self.kind {
            EnvKind::Sudoku => matches!(self.size, 4 | 9),
            EnvKind::PlanPath => (4..=16).contains(&self.size),
            EnvKind::Sokoban => (5..=8).contains(&self.size),
        };
        if !ok {
            return Err(Error::config(
                "grid_size",
                format!("size {} unsupported for {}", self.size, self.kind),
            ));
        }
        Ok(())
    }
}

/// Pure function of `(spec, seed)`.
pub fn generate(spec: &EnvSpec, seed: u64) -> Result<EnvState> {
    spec.validate()?;
    Ok(match spec.kind {
        EnvKind::Sudoku => EnvState::Sudoku(sudoku::generate(seed, spec.size, spec.difficulty)?),
        EnvKind::PlanPath => {
            EnvState::PlanPath(plan_path::generate(seed, spec.size, spec.difficulty)?)
        }
        EnvKind::Sokoban => EnvState::Sokoban(sokoban::generate(seed, spec.size, spec.difficulty)?),
    })
}

/// Finite set of actions offered to one role at one state, with one
/// feature row per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMenu {
    entries: Vec<Payload>,
    dim: usize,
    features: Vec<f64>,
}

impl CandidateMenu {
    pub fn new(entries: Vec<Payload>, dim: usize, features: Vec<f64>) -> Self {
        assert_eq!(features.len(), entries.len() * dim, "feature matrix shape");
        Self {
            entries,
            dim,
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Payload] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> Option<&Payload> {
        self.entries.get(index)
    }

    pub fn features(&self, index: usize) -> &[f64] {
        &self.features[index * self.dim..(index + 1) * self.dim]
    }

    pub fn action(&self, index: usize) -> MacroAction {
        MacroAction {
            menu_index: index,
            payload: self.entries[index],
        }
    }

    pub fn index_of(&self, payload: &Payload) -> Option<usize> {
        self.entries.iter().position(|p| p == payload)
    }

    /// True iff `action` names an entry of this menu.
    pub fn offers(&self, action: &MacroAction) -> bool {
        self.entries.get(action.menu_index) == Some(&action.payload)
    }

    /// Fault injection: replace an entry by an unparseable payload.
    pub fn inject_malformed(&mut self, index: usize) {
        self.entries[index] = Payload::Malformed;
        self.features[index * self.dim..(index + 1) * self.dim].fill(0.0);
    }
}

/// Full environment state.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvState {
    Sudoku(SudokuState),
    PlanPath(PlanPathState),
    Sokoban(SokobanState),
}

impl EnvState {
    pub fn kind(&self) -> EnvKind {
        match self {
            EnvState::Sudoku(_) => EnvKind::Sudoku,
            EnvState::PlanPath(_) => EnvKind::PlanPath,
            EnvState::Sokoban(_) => EnvKind::Sokoban,
        }
    }

    pub fn roles(&self) -> [Role; 2] {
        self.kind().roles()
    }

    pub fn is_solved(&self) -> bool {
        match self {
            EnvState::Sudoku(s) => s.is_solved(),
            EnvState::PlanPath(s) => s.is_solved(),
            EnvState::Sokoban(s) => s.is_solved(),
        }
    }

    /// Provably lost (Sokoban corner deadlock) or abandoned (Sudoku submit
    /// of an unsolved grid).
    pub fn is_dead_end(&self) -> bool {
        match self {
            EnvState::Sudoku(s) => s.submitted && !s.is_solved(),
            EnvState::PlanPath(_) => false,
            EnvState::Sokoban(s) => s.is_dead_end(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.is_solved() || self.is_dead_end()
    }

    /// Legality flag of the most recent step.
    pub fn last_action_legal(&self) -> bool {
        match self {
            EnvState::Sudoku(s) => s.last_fill_legal,
            EnvState::PlanPath(s) => s.last_action_legal,
            EnvState::Sokoban(s) => s.last_action_legal,
        }
    }

    fn encode_state(&self, out: &mut Vec<u8>) {
        match self {
            EnvState::Sudoku(s) => s.encode_into(out),
            EnvState::PlanPath(s) => s.encode_into(out),
            EnvState::Sokoban(s) => s.encode_into(out),
        }
    }

    /// Canonical bytes of the state alone (no role, no turn).
    pub fn state_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.kind().tag()];
        self.encode_state(&mut out);
        out
    }

    pub fn observe(&self, role: Role, turn: usize) -> Observation {
        self.observe_with_history(role, turn, None)
    }

    /// Observation whose encoding additionally carries a history tag.
    /// Distinct tags model interaction histories that never coincide.
    pub fn observe_with_history(&self, role: Role, turn: usize, history: Option<u64>) -> Observation {
        let mut out = vec![b'O', self.kind().tag(), role.tag()];
        out.extend_from_slice(&(turn as u32).to_le_bytes());
        self.encode_state(&mut out);
        if let Some(h) = history {
            out.push(b'H');
            out.extend_from_slice(&h.to_le_bytes());
        }
        let features = match self {
            EnvState::Sudoku(s) => s.state_features(),
            EnvState::PlanPath(s) => s.state_features(),
            EnvState::Sokoban(s) => s.state_features(),
        };
        Observation {
            role,
            turn,
            encoding: Arc::from(out),
            features,
        }
    }

    pub fn legal_menu(&self, role: Role) -> Result<CandidateMenu> {
        if self.is_terminal() {
            return Err(Error::EmptyMenu);
        }
        let kind = self.kind();
        let slot = kind.role_slot(role)?;
        let entries = match self {
            EnvState::Sudoku(s) => s.menu_entries(),
            EnvState::PlanPath(_) | EnvState::Sokoban(_) => {
                Move::ALL.iter().map(|&m| Payload::Move(m)).collect()
            }
        };
        let dim = kind.feature_dim();
        let block = kind.block_features();
        let mut features = vec![0.0; entries.len() * dim];
        for (i, payload) in entries.iter().enumerate() {
            let row = &mut features[i * dim + slot * block..i * dim + (slot + 1) * block];
            match self {
                EnvState::Sudoku(s) => s.entry_features(payload, row),
                EnvState::PlanPath(s) => s.entry_features(payload, row),
                EnvState::Sokoban(s) => s.entry_features(payload, row),
            }
        }
        Ok(CandidateMenu::new(entries, dim, features))
    }

    /// Applies one agent's payload without menu checks.
    pub fn step_payload(&self, role: Role, payload: &Payload) -> Result<EnvState> {
        self.kind().role_slot(role)?;
        Ok(match self {
            EnvState::Sudoku(s) => EnvState::Sudoku(s.step(role, payload)?),
            EnvState::PlanPath(s) => EnvState::PlanPath(s.step(payload)?),
            EnvState::Sokoban(s) => EnvState::Sokoban(s.step(payload)?),
        })
    }

    /// Applies one agent's action, which must come from `menu`.
    pub fn step_agent(&self, role: Role, action: &MacroAction, menu: &CandidateMenu) -> Result<EnvState> {
        if !menu.offers(action) {
            return Err(Error::contract(format!(
                "action {} (index {}) was not offered by the menu",
                action.payload, action.menu_index
            )));
        }
        self.step_payload(role, &action.payload)
    }

    pub fn termination(&self, clock: TurnClock) -> TerminationFlag {
        if self.is_solved() {
            TerminationFlag::done(TerminationCause::Solved)
        } else if self.is_dead_end() {
            TerminationFlag::done(TerminationCause::DeadEnd)
        } else if clock.is_last() {
            TerminationFlag::done(TerminationCause::Horizon)
        } else {
            TerminationFlag::RUNNING
        }
    }

    pub fn as_plan_path(&self) -> Option<&PlanPathState> {
        match self {
            EnvState::PlanPath(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_sokoban(&self) -> Option<&SokobanState> {
        match self {
            EnvState::Sokoban(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_sudoku(&self) -> Option<&SudokuState> {
        match self {
            EnvState::Sudoku(s) => Some(s),
            _ => None,
        }
    }
}

/// Joint transition: applies every agent's action in role order. Once the
/// state becomes terminal mid-turn the remaining actions are ignored.
pub fn apply(
    state: &EnvState,
    actions: &[MacroAction],
    clock: TurnClock,
) -> Result<(EnvState, TerminationFlag)> {
    let roles = state.roles();
    if actions.len() != roles.len() {
        return Err(Error::contract(format!(
            "expected {} actions, got {}",
            roles.len(),
            actions.len()
        )));
    }
    let mut current = state.clone();
    for (role, action) in roles.iter().zip(actions) {
        if current.is_terminal() {
            break;
        }
        let menu = current.legal_menu(*role)?;
        current = current.step_agent(*role, action, &menu)?;
    }
    let flag = current.termination(clock);
    Ok((current, flag))
}
