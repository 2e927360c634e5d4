//! The training loop: rollouts against frozen snapshots, grouping, routing
//! to per-policy batches, one update per policy, periodic evaluation.

mod exec;
mod metrics;
mod rollout;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use exec::Executor;
pub use metrics::{to_jsonl, EvalReport, MetricsRecord, PolicyStats, RecordKind, StepMetrics};
pub use rollout::{greedy_episode, greedy_index, AgentRecord, EnvRollout, RolloutContext, RolloutRecord};

use crate::env::{generate, EnvSpec};
use crate::error::{Error, Result};
use crate::game::{map_role, validate_config, AgentId, GameConfig, PolicyId, RoleMapping};
use crate::group::{AdvantageConfig, Group, GroupKey, GroupRecord, SamplingMode};
use crate::policy::{update, PerPolicyBatch, Policy, PolicyParams};
use crate::reward::{RewardKernel, RewardSchedule};
use crate::rng::{derive, stream};

const TAG_INSTANCE: u64 = 1;
const TAG_ROLLOUT: u64 = 2;
const TAG_EVAL_SEEDS: u64 = 3;
const TAG_EVAL_RNG: u64 = 4;

/// Default number of held-out evaluation instances.
pub const DEFAULT_EVAL_SEEDS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoleMode {
    /// One policy drives every agent.
    Shared,
    /// One policy per agent.
    #[default]
    Specialized,
}

impl RoleMode {
    pub fn mapping(self, n_agents: usize) -> RoleMapping {
        match self {
            RoleMode::Shared => RoleMapping::shared(n_agents),
            RoleMode::Specialized => RoleMapping::specialized(n_agents),
        }
    }

    pub fn n_policies(self, n_agents: usize) -> usize {
        match self {
            RoleMode::Shared => 1,
            RoleMode::Specialized => n_agents,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RoleMode::Shared => "shared",
            RoleMode::Specialized => "specialized",
        }
    }
}

impl fmt::Display for RoleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RoleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(RoleMode::Shared),
            "specialized" => Ok(RoleMode::Specialized),
            _ => Err(Error::Parse(format!("unknown role mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub game: GameConfig,
    pub env: EnvSpec,
    pub role_mode: RoleMode,
    pub schedule: RewardSchedule,
    pub learning_rate: f64,
    /// Evaluate every this many steps; 0 evaluates only at the start and end.
    pub eval_every: usize,
    pub advantage: AdvantageConfig,
    pub sampling: SamplingMode,
    /// 0 uses every available core.
    pub workers: usize,
    pub wall_clock: bool,
    pub keep_rollouts: bool,
}

impl TrainerConfig {
    pub fn new(env: EnvSpec, role_mode: RoleMode) -> Self {
        let game = GameConfig {
            n_policies: role_mode.n_policies(2),
            ..GameConfig::default()
        };
        Self {
            game,
            env,
            role_mode,
            schedule: RewardSchedule::preset(env.kind),
            learning_rate: 0.05,
            eval_every: 10,
            advantage: AdvantageConfig::default(),
            sampling: SamplingMode::Tree,
            workers: 0,
            wall_clock: false,
            keep_rollouts: false,
        }
    }

    pub fn mapping(&self) -> RoleMapping {
        self.role_mode.mapping(self.game.n_agents)
    }

    /// Explicit seeds if given, otherwise a default held-out set derived
    /// from the master seed.
    pub fn eval_seeds(&self) -> Vec<u64> {
        if !self.game.eval_seeds.is_empty() {
            return self.game.eval_seeds.clone();
        }
        (0..DEFAULT_EVAL_SEEDS as u64)
            .map(|i| derive(self.game.seed, &[TAG_EVAL_SEEDS, i]))
            .collect()
    }

    pub fn kernel(&self) -> Result<RewardKernel> {
        if self.schedule.env != self.env.kind {
            return Err(Error::config(
                "schedule",
                format!("schedule is for {}, environment is {}", self.schedule.env, self.env.kind),
            ));
        }
        RewardKernel::new(self.schedule.clone(), self.game.mixer)
    }

    pub fn validate(&self) -> Result<RoleMapping> {
        self.env.validate()?;
        let roles = self.env.kind.roles().len();
        if self.game.n_agents != roles {
            return Err(Error::config(
                "n_agents",
                format!("{} has {roles} roles, N = {}", self.env.kind, self.game.n_agents),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive and finite"));
        }
        self.advantage.validate()?;
        self.kernel()?;
        let validated = validate_config(self.game.clone(), self.mapping())?;
        Ok(validated.into_parts().1)
    }
}

/// Merges every agent's dataset into the batch of the policy that drives it.
pub fn route(
    datasets: Vec<Vec<Group>>,
    mapping: &RoleMapping,
    snapshots: &[PolicyParams],
    temperature: f64,
) -> Result<Vec<PerPolicyBatch>> {
    let mut batches: Vec<PerPolicyBatch> = snapshots
        .iter()
        .map(|p| PerPolicyBatch::empty(p.policy_id, p.version, temperature))
        .collect();
    for (i, dataset) in datasets.into_iter().enumerate() {
        let m = map_role(mapping, AgentId(i))?;
        let batch = batches
            .get_mut(m.0)
            .ok_or_else(|| Error::Routing(format!("agent {i} maps to missing {m}")))?;
        for group in dataset {
            if group.key.agent != i {
                return Err(Error::Routing(format!(
                    "group {} filed under agent {i}",
                    group.key
                )));
            }
            batch.groups.push(group);
        }
    }
    Ok(batches)
}

/// Checks that the batches partition the produced groups and that each
/// group sits in the batch of the policy driving its agent.
pub fn verify_routing(produced: &BTreeSet<GroupKey>, batches: &[PerPolicyBatch], mapping: &RoleMapping) -> Result<()> {
    let mut routed = BTreeSet::new();
    for batch in batches {
        for group in &batch.groups {
            let owner = map_role(mapping, AgentId(group.key.agent))?;
            if owner != batch.policy_id {
                return Err(Error::Routing(format!(
                    "group {} from {} found in batch of {}, expected {}",
                    group.key,
                    AgentId(group.key.agent),
                    batch.policy_id,
                    owner
                )));
            }
            if !routed.insert(group.key) {
                return Err(Error::Routing(format!("group {} routed twice", group.key)));
            }
        }
    }
    if &routed != produced {
        let missing = produced.difference(&routed).count();
        let extra = routed.difference(produced).count();
        return Err(Error::Routing(format!(
            "{missing} groups dropped and {extra} groups invented by routing"
        )));
    }
    Ok(())
}

/// Greedy (temperature 0) success rate and mean turns over `seeds`.
pub fn evaluate(
    policies: &[&dyn Policy],
    mapping: &RoleMapping,
    spec: &EnvSpec,
    turn_horizon: usize,
    seeds: &[u64],
    executor: &Executor,
) -> Result<EvalReport> {
    if seeds.is_empty() {
        return Err(Error::config("eval_seeds", "evaluation needs at least one seed"));
    }
    let episodes = executor.map(seeds.len(), |j| {
        let instance = generate(spec, seeds[j])?;
        let mut rng = stream(seeds[j], &[TAG_EVAL_RNG]);
        greedy_episode(policies, mapping, instance, turn_horizon, &mut rng)
    })?;
    EvalReport::from_episodes(&episodes)
}

/// Rebinds policies to roles: slot `m` receives the weights of
/// `policies[permutation[m]]`. Only meaningful with one policy per role.
pub fn swap_policies(policies: &[PolicyParams], permutation: &[usize]) -> Result<Vec<PolicyParams>> {
    if policies.len() < 2 {
        return Err(Error::config(
            "swap",
            "swapping needs role-specialized policies (M >= 2)",
        ));
    }
    let mut seen = vec![false; policies.len()];
    if permutation.len() != policies.len()
        || permutation
            .iter()
            .any(|&p| p >= policies.len() || std::mem::replace(&mut seen[p], true))
    {
        return Err(Error::config(
            "swap",
            format!("{permutation:?} is not a permutation of {} policies", policies.len()),
        ));
    }
    Ok(permutation
        .iter()
        .enumerate()
        .map(|(m, &src)| PolicyParams {
            policy_id: PolicyId(m),
            ..policies[src].clone()
        })
        .collect())
}

/// The transposition used for swap evaluation: (0 1 … M−1) → (1 0 2 … ).
pub fn transposition(m: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..m).collect();
    if m >= 2 {
        p.swap(0, 1);
    }
    p
}

/// Output of a whole run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policies: Vec<PolicyParams>,
    pub steps: Vec<StepMetrics>,
    pub evals: Vec<(usize, EvalReport)>,
    pub log: Vec<MetricsRecord>,
}

impl TrainOutcome {
    pub fn first_eval(&self) -> Option<&EvalReport> {
        self.evals.first().map(|e| &e.1)
    }

    pub fn final_eval(&self) -> Option<&EvalReport> {
        self.evals.last().map(|e| &e.1)
    }
}

/// Mutable run state between steps.
#[derive(Debug)]
pub struct Trainer {
    cfg: TrainerConfig,
    mapping: RoleMapping,
    kernel: RewardKernel,
    executor: Executor,
    policies: Vec<PolicyParams>,
    eval_seeds: Vec<u64>,
    eval_set: BTreeSet<u64>,
    step: usize,
    rollouts: Vec<RolloutRecord>,
    groups: Vec<GroupRecord>,
}

impl Trainer {
    pub fn new(cfg: TrainerConfig) -> Result<Self> {
        let mapping = cfg.validate()?;
        let kernel = cfg.kernel()?;
        let executor = Executor::new(cfg.workers)?;
        let dim = cfg.env.kind.feature_dim();
        let policies = (0..cfg.game.n_policies)
            .map(|m| PolicyParams::zeros(PolicyId(m), dim))
            .collect();
        let eval_seeds = cfg.eval_seeds();
        let eval_set = eval_seeds.iter().copied().collect();
        Ok(Self {
            cfg,
            mapping,
            kernel,
            executor,
            policies,
            eval_seeds,
            eval_set,
            step: 0,
            rollouts: Vec::new(),
            groups: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    pub fn mapping(&self) -> &RoleMapping {
        &self.mapping
    }

    pub fn policies(&self) -> &[PolicyParams] {
        &self.policies
    }

    pub fn set_policies(&mut self, policies: Vec<PolicyParams>) -> Result<()> {
        if policies.len() != self.policies.len()
            || policies.iter().any(|p| p.dim() != self.cfg.env.kind.feature_dim())
        {
            return Err(Error::contract("replacement policies do not fit this run"));
        }
        self.policies = policies;
        Ok(())
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    /// Rollout records and group dumps kept since the last call (only
    /// collected when `keep_rollouts` is set).
    pub fn take_dumps(&mut self) -> (Vec<RolloutRecord>, Vec<GroupRecord>) {
        (std::mem::take(&mut self.rollouts), std::mem::take(&mut self.groups))
    }

    /// Seed of environment `e` at step `s`, kept clear of the evaluation set.
    pub fn instance_seed(&self, step: usize, env_id: usize) -> u64 {
        let mut seed = derive(self.cfg.game.seed, &[TAG_INSTANCE, step as u64, env_id as u64]);
        while self.eval_set.contains(&seed) {
            seed = derive(seed, &[TAG_INSTANCE]);
        }
        seed
    }

    pub fn evaluate(&self) -> Result<EvalReport> {
        let refs: Vec<&dyn Policy> = self.policies.iter().map(|p| p as &dyn Policy).collect();
        evaluate(
            &refs,
            &self.mapping,
            &self.cfg.env,
            self.cfg.game.turn_horizon,
            &self.eval_seeds,
            &self.executor,
        )
    }

    /// Evaluates with a permuted policy-to-role binding; the run itself is
    /// untouched.
    pub fn evaluate_swapped(&self, permutation: &[usize]) -> Result<EvalReport> {
        let swapped = swap_policies(&self.policies, permutation)?;
        let refs: Vec<&dyn Policy> = swapped.iter().map(|p| p as &dyn Policy).collect();
        evaluate(
            &refs,
            &self.mapping,
            &self.cfg.env,
            self.cfg.game.turn_horizon,
            &self.eval_seeds,
            &self.executor,
        )
    }

    /// Runs E rollouts against the current snapshots, returning each
    /// agent's dataset and the rollout outputs.
    pub fn collect(&self) -> Result<Vec<EnvRollout>> {
        let g = &self.cfg.game;
        let refs: Vec<&dyn Policy> = self.policies.iter().map(|p| p as &dyn Policy).collect();
        let ctx = RolloutContext {
            policies: &refs,
            mapping: &self.mapping,
            kernel: &self.kernel,
            advantage: &self.cfg.advantage,
            mode: self.cfg.sampling,
            branches: g.branches,
            turn_horizon: g.turn_horizon,
            temperature: g.sample_temperature,
            step: self.step,
        };
        self.executor.map(g.n_envs, |e| {
            let instance = generate(&self.cfg.env, self.instance_seed(self.step, e))?;
            let mut rng = stream(g.seed, &[TAG_ROLLOUT, self.step as u64, e as u64]);
            ctx.rollout(e, instance, &mut rng)
        })
    }

    /// One full step: rollouts, routing, one update per policy.
    pub fn train_step(&mut self) -> Result<StepMetrics> {
        let started = Instant::now();
        let rollouts = self.collect()?;
        let n = self.mapping.n_agents();
        let horizon = self.cfg.game.turn_horizon;
        let mut datasets: Vec<Vec<Group>> = vec![Vec::new(); n];
        let mut episodes = Vec::new();
        let mut usable_per_turn = vec![0; horizon];
        for r in rollouts {
            for (d, groups) in datasets.iter_mut().zip(r.datasets) {
                d.extend(groups);
            }
            episodes.extend(r.episodes);
            for (u, x) in usable_per_turn.iter_mut().zip(r.usable_per_turn) {
                *u += x;
            }
            if self.cfg.keep_rollouts {
                self.rollouts.extend(r.records);
            }
        }
        if self.cfg.keep_rollouts {
            self.groups
                .extend(datasets.iter().flatten().map(Group::record));
        }
        let produced: BTreeSet<GroupKey> = datasets.iter().flatten().map(|g| g.key).collect();
        let usable = produced.len();
        let batches = route(datasets, &self.mapping, &self.policies, self.cfg.game.sample_temperature)?;
        verify_routing(&produced, &batches, &self.mapping)?;
        let stats: Vec<PolicyStats> = batches.iter().map(PolicyStats::of).collect();
        let updated = self
            .policies
            .iter()
            .zip(&batches)
            .map(|(p, b)| update(p, b, self.cfg.learning_rate))
            .collect::<Result<Vec<_>>>()?;
        self.policies = updated;
        self.step += 1;
        let report = EvalReport::from_episodes(&episodes)?;
        Ok(StepMetrics {
            step: self.step,
            policies: stats,
            success_rate: report.success_rate,
            avg_turns: report.avg_turns,
            terminations: episodes.len(),
            usable_groups: usable,
            usable_groups_per_turn: usable_per_turn,
            wall_ms: if self.cfg.wall_clock {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        })
    }

    fn eval_record(&self) -> Result<(EvalReport, MetricsRecord)> {
        let started = Instant::now();
        let report = self.evaluate()?;
        let wall = if self.cfg.wall_clock {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        Ok((report, MetricsRecord::eval(self.step, &report, wall)))
    }

    /// Runs the remaining steps, evaluating at step 0, every `eval_every`
    /// steps and after the last step. `sink` sees every log line as it is
    /// produced.
    pub fn run_with(mut self, mut sink: impl FnMut(&MetricsRecord, &mut Self) -> Result<()>) -> Result<TrainOutcome> {
        let total = self.cfg.game.total_steps;
        let mut out = TrainOutcome {
            policies: Vec::new(),
            steps: Vec::new(),
            evals: Vec::new(),
            log: Vec::new(),
        };
        let (report, rec) = self.eval_record()?;
        sink(&rec, &mut self)?;
        out.evals.push((self.step, report));
        out.log.push(rec);
        while self.step < total {
            let m = self.train_step()?;
            for rec in MetricsRecord::train(&m) {
                sink(&rec, &mut self)?;
                out.log.push(rec);
            }
            out.steps.push(m);
            let due = self.cfg.eval_every > 0 && self.step.is_multiple_of(self.cfg.eval_every);
            if due || self.step == total {
                let (report, rec) = self.eval_record()?;
                sink(&rec, &mut self)?;
                out.evals.push((self.step, report));
                out.log.push(rec);
            }
        }
        out.policies = self.policies;
        Ok(out)
    }

    pub fn run(self) -> Result<TrainOutcome> {
        self.run_with(|_, _| Ok(()))
    }
}

/// Trains from scratch with `cfg`.
pub fn train(cfg: TrainerConfig) -> Result<TrainOutcome> {
    Trainer::new(cfg)?.run()
}
