//! Per-environment rollouts: tree sampling, the parallel-trajectory ablation
//! and greedy evaluation episodes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{EnvState, CandidateMenu};
use crate::error::{Error, Result};
use crate::game::{MacroAction, Observation, Role, RoleMapping, TerminationFlag, TurnClock};
use crate::group::{
    assert_group_valid, compute_advantages, AdvantageConfig, Candidate, Group, GroupKey, GroupStatus,
    SamplingMode,
};
use crate::policy::{Decision, Policy};
use crate::reward::RewardKernel;
use crate::rng::Rng;

/// One agent's decision inside a [`RolloutRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub agent: usize,
    pub role: Role,
    pub observation_digest: String,
    pub actions: Vec<String>,
    pub rewards: Vec<f64>,
    pub chosen: usize,
}

/// Everything that happened in one environment at one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub step: usize,
    pub env_id: usize,
    /// Trajectory index under parallel sampling.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trajectory: Option<usize>,
    pub turn: usize,
    pub agents: Vec<AgentRecord>,
    pub termination: TerminationFlag,
}

/// Output of one environment's rollout.
#[derive(Debug, Clone)]
pub struct EnvRollout {
    /// Usable groups per agent, in production order.
    pub datasets: Vec<Vec<Group>>,
    pub records: Vec<RolloutRecord>,
    /// (solved, turns) per executed trajectory.
    pub episodes: Vec<(bool, usize)>,
    pub usable_per_turn: Vec<usize>,
}

/// Shared inputs of a rollout.
pub struct RolloutContext<'a> {
    pub policies: &'a [&'a dyn Policy],
    pub mapping: &'a RoleMapping,
    pub kernel: &'a RewardKernel,
    pub advantage: &'a AdvantageConfig,
    pub mode: SamplingMode,
    pub branches: usize,
    pub turn_horizon: usize,
    pub temperature: f64,
    pub step: usize,
}

/// Index of the largest reward; the smallest index wins ties.
pub fn greedy_index(rewards: &[f64]) -> usize {
    let mut best = 0;
    for (i, &r) in rewards.iter().enumerate().skip(1) {
        if r > rewards[best] {
            best = i;
        }
    }
    best
}

struct Scored {
    action: MacroAction,
    logprob: f64,
    version: u64,
    reward: f64,
    next: EnvState,
}

impl RolloutContext<'_> {
    fn policy_for(&self, agent: usize) -> Result<&dyn Policy> {
        let m = self
            .mapping
            .assignment()
            .get(agent)
            .ok_or(Error::AgentOutOfRange {
                agent,
                n_agents: self.mapping.n_agents(),
            })?;
        self.policies
            .get(m.0)
            .copied()
            .ok_or_else(|| Error::Routing(format!("no snapshot for {m}")))
    }

    /// Samples `k` candidates for one agent and scores each on a one-step
    /// simulation of that candidate alone.
    #[allow(clippy::too_many_arguments)]
    fn sample_scored(
        &self,
        state: &EnvState,
        agent: usize,
        role: Role,
        obs: &Observation,
        menu: &CandidateMenu,
        clock: TurnClock,
        k: usize,
        rng: &mut Rng,
    ) -> Result<Vec<Scored>> {
        let policy = self.policy_for(agent)?;
        let decision = Decision {
            state,
            role,
            observation: obs,
            menu,
        };
        let draws = policy.sample(&decision, self.temperature, k, rng)?;
        draws
            .into_iter()
            .map(|d| {
                let next = state.step_agent(role, &d.action, menu)?;
                let term = next.termination(clock);
                let reward = self.kernel.evaluate(role, state, &d.action, &next, term)?.mixed;
                Ok(Scored {
                    action: d.action,
                    logprob: d.logprob,
                    version: d.sampled_version,
                    reward,
                    next,
                })
            })
            .collect()
    }

    /// Builds a group, attaches advantages and reports whether it is usable.
    fn finish_group(&self, key: GroupKey, obs: Arc<Observation>, menu: CandidateMenu, scored: &[Scored]) -> Result<Option<Group>> {
        let rewards: Vec<f64> = scored.iter().map(|s| s.reward).collect();
        let Some(advantages) = compute_advantages(&rewards, self.advantage)? else {
            return Ok(None);
        };
        let group = Group {
            key,
            observation: obs.clone(),
            menu: Arc::new(menu),
            candidates: scored
                .iter()
                .map(|s| Candidate {
                    observation: obs.clone(),
                    action: s.action,
                    reward: s.reward,
                    logprob: s.logprob,
                    version: s.version,
                })
                .collect(),
            advantages,
        };
        let expected = match self.mode {
            SamplingMode::Tree => self.branches,
            SamplingMode::Parallel => group.len(),
        };
        Ok(match assert_group_valid(&group, self.mode, expected)? {
            GroupStatus::Usable => Some(group),
            GroupStatus::Degenerate => None,
        })
    }

    fn key(&self, env_id: usize, agent: usize, turn: usize) -> GroupKey {
        GroupKey {
            env_id,
            agent,
            turn,
            step: self.step,
            branch: 0,
        }
    }

    fn agent_record(agent: usize, role: Role, obs: &Observation, scored: &[Scored], chosen: usize) -> AgentRecord {
        AgentRecord {
            agent,
            role,
            observation_digest: obs.digest(),
            actions: scored.iter().map(|s| s.action.payload.to_string()).collect(),
            rewards: scored.iter().map(|s| s.reward).collect(),
            chosen,
        }
    }

    /// K candidates at every (agent, turn); the best one is executed.
    pub fn rollout_tree(&self, env_id: usize, initial: EnvState, rng: &mut Rng) -> Result<EnvRollout> {
        let roles = initial.roles();
        let n = self.mapping.n_agents();
        let mut out = EnvRollout {
            datasets: vec![Vec::new(); n],
            records: Vec::new(),
            episodes: Vec::new(),
            usable_per_turn: vec![0; self.turn_horizon],
        };
        let mut state = initial;
        let mut turns = 0;
        for t in 0..self.turn_horizon {
            let clock = TurnClock {
                turn: t,
                horizon: self.turn_horizon,
            };
            let mut agents = Vec::with_capacity(n);
            for (i, &role) in roles.iter().enumerate().take(n) {
                if state.is_terminal() {
                    break;
                }
                let obs = Arc::new(state.observe(role, t));
                let menu = state.legal_menu(role)?;
                let mut scored = self.sample_scored(&state, i, role, &obs, &menu, clock, self.branches, rng)?;
                let rewards: Vec<f64> = scored.iter().map(|s| s.reward).collect();
                let chosen = greedy_index(&rewards);
                agents.push(Self::agent_record(i, role, &obs, &scored, chosen));
                if let Some(g) = self.finish_group(self.key(env_id, i, t), obs, menu, &scored)? {
                    out.usable_per_turn[t] += 1;
                    out.datasets[i].push(g);
                }
                state = scored.swap_remove(chosen).next;
            }
            turns = t + 1;
            let flag = state.termination(clock);
            out.records.push(RolloutRecord {
                step: self.step,
                env_id,
                trajectory: None,
                turn: t,
                agents,
                termination: flag,
            });
            if flag.done {
                break;
            }
        }
        out.episodes.push((state.is_solved(), turns));
        Ok(out)
    }

    /// K independent trajectories from the initial state. Only the very
    /// first decision has a shared prompt; after that every observation
    /// carries its own trajectory's history.
    pub fn rollout_parallel(&self, env_id: usize, initial: EnvState, rng: &mut Rng) -> Result<EnvRollout> {
        let roles = initial.roles();
        let n = self.mapping.n_agents();
        let k = self.branches;
        let mut out = EnvRollout {
            datasets: vec![Vec::new(); n],
            records: Vec::new(),
            episodes: Vec::new(),
            usable_per_turn: vec![0; self.turn_horizon],
        };
        let clock0 = TurnClock {
            turn: 0,
            horizon: self.turn_horizon,
        };
        let first_role = roles[0];
        let obs0 = Arc::new(initial.observe(first_role, 0));
        let menu0 = initial.legal_menu(first_role)?;
        let first = self.sample_scored(&initial, 0, first_role, &obs0, &menu0, clock0, k, rng)?;
        if let Some(g) = self.finish_group(self.key(env_id, 0, 0), obs0.clone(), menu0, &first)? {
            out.usable_per_turn[0] += 1;
            out.datasets[0].push(g);
        }
        for (b, opening) in first.iter().enumerate() {
            let tag = Some(b as u64);
            let mut state = opening.next.clone();
            let mut turns = 0;
            for t in 0..self.turn_horizon {
                let clock = TurnClock {
                    turn: t,
                    horizon: self.turn_horizon,
                };
                let mut agents = Vec::with_capacity(n);
                if t == 0 {
                    agents.push(Self::agent_record(0, first_role, &obs0, std::slice::from_ref(opening), 0));
                }
                let start = usize::from(t == 0);
                for (i, &role) in roles.iter().enumerate().take(n).skip(start) {
                    if state.is_terminal() {
                        break;
                    }
                    let obs = Arc::new(state.observe_with_history(role, t, tag));
                    let menu = state.legal_menu(role)?;
                    let mut scored = self.sample_scored(&state, i, role, &obs, &menu, clock, 1, rng)?;
                    agents.push(Self::agent_record(i, role, &obs, &scored, 0));
                    let key = self.key(env_id, i, t).with_branch(b);
                    if let Some(g) = self.finish_group(key, obs, menu, &scored)? {
                        out.usable_per_turn[t] += 1;
                        out.datasets[i].push(g);
                    }
                    state = scored.swap_remove(0).next;
                }
                turns = t + 1;
                let flag = state.termination(clock);
                out.records.push(RolloutRecord {
                    step: self.step,
                    env_id,
                    trajectory: Some(b),
                    turn: t,
                    agents,
                    termination: flag,
                });
                if flag.done {
                    break;
                }
            }
            out.episodes.push((state.is_solved(), turns));
        }
        Ok(out)
    }

    pub fn rollout(&self, env_id: usize, initial: EnvState, rng: &mut Rng) -> Result<EnvRollout> {
        match self.mode {
            SamplingMode::Tree => self.rollout_tree(env_id, initial, rng),
            SamplingMode::Parallel => self.rollout_parallel(env_id, initial, rng),
        }
    }
}

/// One greedy episode: every agent takes its temperature-0 choice.
pub fn greedy_episode(
    policies: &[&dyn Policy],
    mapping: &RoleMapping,
    initial: EnvState,
    turn_horizon: usize,
    rng: &mut Rng,
) -> Result<(bool, usize)> {
    let roles = initial.roles();
    let mut state = initial;
    for t in 0..turn_horizon {
        let clock = TurnClock {
            turn: t,
            horizon: turn_horizon,
        };
        for (i, &role) in roles.iter().enumerate().take(mapping.n_agents()) {
            if state.is_terminal() {
                break;
            }
            let m = mapping.assignment()[i];
            let policy = policies
                .get(m.0)
                .ok_or_else(|| Error::Routing(format!("no snapshot for {m}")))?;
            let obs = state.observe(role, t);
            let menu = state.legal_menu(role)?;
            let decision = Decision {
                state: &state,
                role,
                observation: &obs,
                menu: &menu,
            };
            let pick = policy
                .sample(&decision, 0.0, 1, rng)?
                .pop()
                .ok_or_else(|| Error::contract("policy returned no sample"))?;
            state = state.step_agent(role, &pick.action, &menu)?;
        }
        if state.termination(clock).done {
            return Ok((state.is_solved(), t + 1));
        }
    }
    Ok((state.is_solved(), turn_horizon))
}
