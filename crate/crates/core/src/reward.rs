//! Team rewards, per-role local component scores, convex combination and
//! team/local mixing.
//!
//! Per-agent learning reward, in the default (λ) form:
//!
//! ```text
//! r_i = λ · r_team + (1 − λ) · m_i · Σ_ℓ c_ℓ · s_ℓ
//! ```
//!
//! The α form `r_i = α · r_team + m_i · r_loc` is selectable through
//! [`MixerConfig`].

use serde::{Deserialize, Serialize};

use crate::env::{corner_deadlock_free, sudoku, EnvKind, EnvState};
use crate::error::{Error, Result};
use crate::game::{MacroAction, Payload, Role, TerminationFlag};

/// Tolerance on Σ c = 1.
pub const COEFFICIENT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixerForm {
    /// `α · team + m · local`; ignores λ.
    MainText,
    /// `λ · team + (1 − λ) · m · local`; ignores α.
    #[default]
    Appendix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixerConfig {
    pub form: MixerForm,
    pub alpha: f64,
}

impl Default for MixerConfig {
    fn default() -> Self {
        Self {
            form: MixerForm::Appendix,
            alpha: 1.0,
        }
    }
}

impl MixerConfig {
    pub fn main_text(alpha: f64) -> Self {
        Self {
            form: MixerForm::MainText,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::config("mixer.alpha", "alpha must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleCoefficients {
    pub role: Role,
    pub components: Vec<Coefficient>,
}

impl RoleCoefficients {
    fn new(role: Role, table: &[(&str, f64)]) -> Self {
        Self {
            role,
            components: table
                .iter()
                .map(|&(name, weight)| Coefficient {
                    name: name.to_owned(),
                    weight,
                })
                .collect(),
        }
    }

    pub fn weight(&self, name: &str) -> Option<f64> {
        self.components
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.weight)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.components.iter().find(|c| c.weight.is_nan() || c.weight < 0.0) {
            return Err(Error::Schedule(format!(
                "{} coefficient `{}` is negative",
                self.role, c.name
            )));
        }
        let sum: f64 = self.components.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > COEFFICIENT_SUM_TOL {
            return Err(Error::Schedule(format!(
                "{} coefficients sum to {sum}, expected 1",
                self.role
            )));
        }
        Ok(())
    }
}

/// Mixing weight plus per-role coefficient tables for one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSchedule {
    pub env: EnvKind,
    pub lambda: f64,
    pub roles: Vec<RoleCoefficients>,
}

impl RewardSchedule {
    /// Fixed coefficient tables shipped for each environment.
    pub fn preset(env: EnvKind) -> Self {
        let (lambda, roles) = match env {
            EnvKind::Sudoku => (
                0.60,
                vec![
                    RoleCoefficients::new(
                        Role::Reasoner,
                        &[("fmt", 0.15), ("legal", 0.55), ("prog", 0.30)],
                    ),
                    RoleCoefficients::new(Role::Tool, &[("fmt", 0.10), ("exec", 0.20), ("san", 0.70)]),
                ],
            ),
            EnvKind::PlanPath => (
                0.50,
                vec![
                    RoleCoefficients::new(Role::Planner, &[("fmt", 0.20), ("leg", 0.40), ("sp", 0.40)]),
                    RoleCoefficients::new(
                        Role::Tool,
                        &[("fmt", 0.10), ("exec", 0.40), ("shape", 0.50)],
                    ),
                ],
            ),
            EnvKind::Sokoban => (
                0.40,
                vec![
                    RoleCoefficients::new(
                        Role::Planner,
                        &[("fmt", 0.10), ("leg", 0.45), ("dlk", 0.45)],
                    ),
                    RoleCoefficients::new(Role::Tool, &[("fmt", 0.10), ("exec", 0.30), ("pot", 0.60)]),
                ],
            ),
        };
        Self { env, lambda, roles }
    }

    pub fn coefficients(&self, role: Role) -> Result<&RoleCoefficients> {
        self.roles
            .iter()
            .find(|r| r.role == role)
            .ok_or_else(|| Error::Schedule(format!("no coefficient table for {role} in {}", self.env)))
    }

    /// Replaces the table of `role`, keeping component names fixed.
    pub fn set_coefficients(&mut self, role: Role, weights: &[(String, f64)]) -> Result<()> {
        let table = self
            .roles
            .iter_mut()
            .find(|r| r.role == role)
            .ok_or_else(|| Error::Schedule(format!("no coefficient table for {role}")))?;
        for (name, w) in weights {
            let c = table
                .components
                .iter_mut()
                .find(|c| &c.name == name)
                .ok_or_else(|| Error::Schedule(format!("{role} has no component `{name}`")))?;
            c.weight = *w;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Schedule(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        let roles = self.env.roles();
        if self.roles.len() != roles.len() || roles.iter().any(|r| self.coefficients(*r).is_err()) {
            return Err(Error::Schedule(format!(
                "schedule must cover exactly the roles of {}",
                self.env
            )));
        }
        self.roles.iter().try_for_each(RoleCoefficients::validate)
    }

    /// Human-readable dump of the active tables.
    pub fn render(&self) -> String {
        let mut out = format!("{} lambda={:.2}\n", self.env, self.lambda);
        for table in &self.roles {
            out.push_str(&format!("  {}:", table.role));
            for c in &table.components {
                out.push_str(&format!(" {}={:.2}", c.name, c.weight));
            }
            out.push('\n');
        }
        out
    }
}

/// Named component scores in `[0, 1]` and the verifiability mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalComponents {
    pub scores: Vec<(String, f64)>,
    pub mask: u8,
}

impl LocalComponents {
    fn new(scores: [(&str, bool); 3]) -> Self {
        Self {
            scores: scores
                .iter()
                .map(|&(n, s)| (n.to_owned(), f64::from(u8::from(s))))
                .collect(),
            mask: 1,
        }
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.scores.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }
}

fn mismatch(expected: EnvKind, state: &EnvState) -> Error {
    Error::Schedule(format!(
        "expected a {expected} transition, got a {} state",
        state.kind()
    ))
}

/// Global task-level reward for a transition, in `[0, 1]`.
pub fn team_reward(env: EnvKind, prev: &EnvState, next: &EnvState, term: TerminationFlag) -> Result<f64> {
    match (env, prev, next) {
        (EnvKind::PlanPath, EnvState::PlanPath(p), EnvState::PlanPath(n)) => {
            if n.is_solved() {
                return Ok(1.0);
            }
            let gain = f64::from(p.d_now) - f64::from(n.d_now);
            Ok((gain / f64::from(n.d_init)).max(0.0))
        }
        (EnvKind::Sokoban, EnvState::Sokoban(_), EnvState::Sokoban(n)) => {
            if n.n_boxes() == 0 {
                return Err(Error::Schedule("sokoban instance has no boxes".into()));
            }
            if n.is_solved() {
                return Ok(1.0);
            }
            Ok(n.boxes_on_goal as f64 / n.n_boxes() as f64)
        }
        (EnvKind::Sudoku, EnvState::Sudoku(_), EnvState::Sudoku(_)) => {
            Ok(f64::from(u8::from(term.done && term.is_solved())))
        }
        _ => Err(mismatch(env, next)),
    }
}

/// Per-role component scores for one agent's transition `prev → next`.
pub fn component_scores(
    env: EnvKind,
    role: Role,
    prev: &EnvState,
    action: &MacroAction,
    next: &EnvState,
) -> Result<LocalComponents> {
    for state in [prev, next] {
        if state.kind() != env {
            return Err(mismatch(env, state));
        }
    }
    let well_formed = action.payload != Payload::Malformed;
    let comps = match (env, role, prev, next) {
        (EnvKind::Sudoku, Role::Reasoner, EnvState::Sudoku(p), EnvState::Sudoku(n)) => {
            let proposed = p.proposed(&action.payload);
            let legal = n.last_fill_legal && !sudoku::has_duplicates(&proposed, p.size, p.subgrid);
            let newly_filled = p
                .grid_now
                .iter()
                .zip(&n.grid_now)
                .filter(|(&a, &b)| a == 0 && b != 0)
                .count();
            let mut c = LocalComponents::new([("fmt", well_formed), ("legal", legal), ("prog", false)]);
            c.scores[2].1 = newly_filled as f64 / (p.size * p.size) as f64;
            c
        }
        (EnvKind::Sudoku, Role::Tool, EnvState::Sudoku(_), EnvState::Sudoku(n)) => {
            LocalComponents::new([
                ("fmt", well_formed),
                ("exec", well_formed),
                ("san", n.last_fill_legal),
            ])
        }
        (EnvKind::PlanPath, Role::Planner, EnvState::PlanPath(p), EnvState::PlanPath(n)) => {
            let sp = match action.payload {
                Payload::Move(mv) => p.on_shortest_path(mv),
                _ => false,
            };
            LocalComponents::new([("fmt", well_formed), ("leg", n.last_action_legal), ("sp", sp)])
        }
        (EnvKind::PlanPath, Role::Tool, EnvState::PlanPath(p), EnvState::PlanPath(n)) => {
            LocalComponents::new([
                ("fmt", well_formed),
                ("exec", n.last_action_legal),
                ("shape", n.potential() >= p.potential()),
            ])
        }
        (EnvKind::Sokoban, Role::Planner, EnvState::Sokoban(p), EnvState::Sokoban(n)) => {
            let free = match action.payload {
                Payload::Move(mv) => corner_deadlock_free(p, mv) == 1,
                _ => true,
            };
            LocalComponents::new([("fmt", well_formed), ("leg", n.last_action_legal), ("dlk", free)])
        }
        (EnvKind::Sokoban, Role::Tool, EnvState::Sokoban(p), EnvState::Sokoban(n)) => {
            LocalComponents::new([
                ("fmt", well_formed),
                ("exec", n.last_action_legal),
                ("pot", n.potential() >= p.potential()),
            ])
        }
        _ => {
            return Err(Error::Schedule(format!("role {role} has no reward design in {env}")))
        }
    };
    Ok(comps)
}

/// Σ_ℓ c_ℓ · s_ℓ, with names and Σ c = 1 checked.
pub fn combine_local(components: &LocalComponents, coefficients: &RoleCoefficients) -> Result<f64> {
    coefficients.validate()?;
    if components.scores.len() != coefficients.components.len() {
        return Err(Error::Schedule(format!(
            "{} scores for {} coefficients",
            components.scores.len(),
            coefficients.components.len()
        )));
    }
    let mut total = 0.0;
    for (name, score) in &components.scores {
        let w = coefficients
            .weight(name)
            .ok_or_else(|| Error::Schedule(format!("no coefficient named `{name}`")))?;
        total += w * score;
    }
    Ok(total)
}

pub fn mix(team: f64, local: f64, mask: u8, mixer: &MixerConfig, schedule: &RewardSchedule) -> f64 {
    let gated = f64::from(mask) * local;
    match mixer.form {
        MixerForm::MainText => mixer.alpha * team + gated,
        MixerForm::Appendix => schedule.lambda * team + (1.0 - schedule.lambda) * gated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub team: f64,
    pub components: LocalComponents,
    pub local: f64,
    pub mixed: f64,
}

/// Everything needed to score a candidate action.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardKernel {
    pub schedule: RewardSchedule,
    pub mixer: MixerConfig,
    /// Fault injection: report every oracle as unavailable (m = 0).
    pub mask_fault: bool,
}

impl RewardKernel {
    pub fn new(schedule: RewardSchedule, mixer: MixerConfig) -> Result<Self> {
        schedule.validate()?;
        mixer.validate()?;
        Ok(Self {
            schedule,
            mixer,
            mask_fault: false,
        })
    }

    pub fn preset(env: EnvKind) -> Self {
        Self::new(RewardSchedule::preset(env), MixerConfig::default()).expect("presets are valid")
    }

    pub fn evaluate(
        &self,
        role: Role,
        prev: &EnvState,
        action: &MacroAction,
        next: &EnvState,
        term: TerminationFlag,
    ) -> Result<RewardBreakdown> {
        let env = self.schedule.env;
        let team = team_reward(env, prev, next, term)?;
        let mut components = component_scores(env, role, prev, action, next)?;
        if self.mask_fault {
            components.mask = 0;
        }
        let local = combine_local(&components, self.schedule.coefficients(role)?)?;
        let mixed = mix(team, local, components.mask, &self.mixer, &self.schedule);
        Ok(RewardBreakdown {
            team,
            components,
            local,
            mixed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{text, Move};
    use crate::game::TerminationCause;

    fn scores(pairs: &[(&str, f64)]) -> LocalComponents {
        LocalComponents {
            scores: pairs.iter().map(|&(n, s)| (n.to_owned(), s)).collect(),
            mask: 1,
        }
    }

    #[test]
    fn presets_are_valid() {
        for env in EnvKind::ALL {
            RewardSchedule::preset(env).validate().unwrap();
        }
    }

    #[test]
    fn combine_examples() {
        let planner = RewardSchedule::preset(EnvKind::PlanPath).roles[0].clone();
        let v = combine_local(&scores(&[("fmt", 1.0), ("leg", 1.0), ("sp", 0.0)]), &planner).unwrap();
        assert!((v - 0.60).abs() < 1e-12);
        let v = combine_local(&scores(&[("fmt", 1.0), ("leg", 1.0), ("sp", 1.0)]), &planner).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let bad = RoleCoefficients::new(Role::Planner, &[("fmt", 0.5), ("leg", 0.5), ("sp", 0.5)]);
        assert!(matches!(
            combine_local(&scores(&[("fmt", 1.0), ("leg", 1.0), ("sp", 1.0)]), &bad),
            Err(Error::Schedule(_))
        ));
        assert!(combine_local(&scores(&[("fmt", 1.0), ("legal", 1.0), ("sp", 1.0)]), &planner).is_err());
    }

    #[test]
    fn mix_examples() {
        let plan = RewardSchedule::preset(EnvKind::PlanPath);
        let appendix = MixerConfig::default();
        assert!((mix(1.0, 0.6, 1, &appendix, &plan) - 0.80).abs() < 1e-12);
        assert_eq!(mix(0.7, 0.6, 0, &appendix, &plan), 0.5 * 0.7);
        let main = MixerConfig::main_text(1.0);
        assert!((mix(0.25, 0.6, 1, &main, &plan) - 0.85).abs() < 1e-12);
    }

    #[test]
    fn plan_path_team_reward() {
        let s = text::load(EnvKind::PlanPath, "P....\n.....\n.....\n....G\n").unwrap();
        // d0 = 7
        let east = s.step_payload(Role::Planner, &Payload::Move(Move::Right)).unwrap();
        let r = team_reward(EnvKind::PlanPath, &s, &east, TerminationFlag::RUNNING).unwrap();
        assert!((r - 1.0 / 7.0).abs() < 1e-12);
        let back = east.step_payload(Role::Tool, &Payload::Move(Move::Left)).unwrap();
        assert_eq!(team_reward(EnvKind::PlanPath, &east, &back, TerminationFlag::RUNNING).unwrap(), 0.0);
    }

    #[test]
    fn sudoku_team_reward_is_terminal_only() {
        let s = text::load(EnvKind::Sudoku, ".234\n3412\n2143\n4321\n").unwrap();
        let done = s.step_payload(Role::Reasoner, &Payload::Fill { row: 0, col: 0, value: 1 }).unwrap();
        let solved = TerminationFlag::done(TerminationCause::Solved);
        assert_eq!(team_reward(EnvKind::Sudoku, &s, &done, solved).unwrap(), 1.0);
        assert_eq!(team_reward(EnvKind::Sudoku, &s, &done, TerminationFlag::RUNNING).unwrap(), 0.0);
    }

    #[test]
    fn env_mismatch_is_an_error() {
        let s = text::load(EnvKind::Sudoku, ".234\n3412\n2143\n4321\n").unwrap();
        assert!(team_reward(EnvKind::PlanPath, &s, &s, TerminationFlag::RUNNING).is_err());
        let a = MacroAction {
            menu_index: 0,
            payload: Payload::Submit,
        };
        assert!(component_scores(EnvKind::Sudoku, Role::Planner, &s, &a, &s).is_err());
    }

    #[test]
    fn mask_fault_zeroes_local_part() {
        let s = text::load(EnvKind::PlanPath, "P....\n.....\n.....\n....G\n").unwrap();
        let mut kernel = RewardKernel::preset(EnvKind::PlanPath);
        kernel.mask_fault = true;
        let a = MacroAction {
            menu_index: 3,
            payload: Payload::Move(Move::Right),
        };
        let n = s.step_payload(Role::Planner, &a.payload).unwrap();
        let b = kernel.evaluate(Role::Planner, &s, &a, &n, TerminationFlag::RUNNING).unwrap();
        assert_eq!(b.components.mask, 0);
        assert_eq!(b.mixed, 0.5 * b.team);
    }
}
