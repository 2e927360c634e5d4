//! Run configuration: a TOML file, then command-line overrides on top.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use mas_grpo::env::{EnvKind, EnvSpec};
use mas_grpo::game::GameConfig;
use mas_grpo::group::{AdvantageConfig, DegeneratePolicy, SamplingMode};
use mas_grpo::reward::{MixerConfig, MixerForm, RewardSchedule};
use mas_grpo::trainer::{RoleMode, TrainerConfig};
use mas_grpo::{Error, Result};

/// Every knob of a run. Missing keys take the defaults below; the resolved
/// value of every key is echoed to `config.resolved.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvKind,
    /// Board side (Sudoku: 4 or 9). Defaults per environment when absent.
    pub grid_size: Option<usize>,
    pub difficulty: u8,
    pub role_mode: RoleMode,
    pub branches: usize,
    pub turns: usize,
    pub n_envs: usize,
    pub steps: usize,
    pub seed: u64,
    pub temperature: f64,
    pub mixer: MixerForm,
    /// Team weight of the main-text mixer.
    pub alpha: f64,
    /// Overrides the preset team weight of the appendix mixer.
    pub lambda: Option<f64>,
    pub learning_rate: f64,
    pub eval_every: usize,
    /// Empty selects a default held-out set derived from `seed`.
    pub eval_seeds: Vec<u64>,
    pub sampling: SamplingMode,
    pub degenerate: DegeneratePolicy,
    /// 0 uses every available core.
    pub workers: usize,
    pub out: PathBuf,
    pub dump_rollouts: bool,
    pub wall_clock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let game = GameConfig::default();
        Self {
            env: EnvKind::PlanPath,
            grid_size: None,
            difficulty: 1,
            role_mode: RoleMode::Specialized,
            branches: game.branches,
            turns: game.turn_horizon,
            n_envs: game.n_envs,
            steps: game.total_steps,
            seed: game.seed,
            temperature: game.sample_temperature,
            mixer: MixerForm::Appendix,
            alpha: MixerConfig::default().alpha,
            lambda: None,
            learning_rate: 0.05,
            eval_every: 10,
            eval_seeds: Vec::new(),
            sampling: SamplingMode::Tree,
            degenerate: DegeneratePolicy::ZeroAdvantages,
            workers: 0,
            out: PathBuf::from("runs/latest"),
            dump_rollouts: false,
            wall_clock: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {}", e.message())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn env_spec(&self) -> EnvSpec {
        EnvSpec {
            kind: self.env,
            size: self.grid_size.unwrap_or(self.env.default_size()),
            difficulty: self.difficulty,
        }
    }

    pub fn schedule(&self) -> Result<RewardSchedule> {
        let mut schedule = RewardSchedule::preset(self.env);
        if let Some(lambda) = self.lambda {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::config("lambda", "must lie in [0, 1]"));
            }
            schedule.lambda = lambda;
        }
        Ok(schedule)
    }

    /// Fills in the defaults that depend on other keys so the echo is
    /// complete.
    pub fn resolved(mut self) -> Self {
        self.grid_size.get_or_insert(self.env.default_size());
        if self.lambda.is_none() && self.mixer == MixerForm::Appendix {
            self.lambda = Some(RewardSchedule::preset(self.env).lambda);
        }
        self
    }

    pub fn trainer_config(&self) -> Result<TrainerConfig> {
        let mut cfg = TrainerConfig::new(self.env_spec(), self.role_mode);
        cfg.game = GameConfig {
            n_agents: 2,
            n_policies: self.role_mode.n_policies(2),
            turn_horizon: self.turns,
            branches: self.branches,
            n_envs: self.n_envs,
            total_steps: self.steps,
            sample_temperature: self.temperature,
            mixer: MixerConfig {
                form: self.mixer,
                alpha: self.alpha,
            },
            seed: self.seed,
            eval_seeds: self.eval_seeds.clone(),
        };
        cfg.schedule = self.schedule()?;
        cfg.learning_rate = self.learning_rate;
        cfg.eval_every = self.eval_every;
        cfg.advantage = AdvantageConfig {
            degenerate_policy: self.degenerate,
            ..AdvantageConfig::default()
        };
        cfg.sampling = self.sampling;
        cfg.workers = self.workers;
        cfg.wall_clock = self.wall_clock;
        cfg.keep_rollouts = self.dump_rollouts;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Flags that override file values.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// plan-path, sokoban or sudoku.
    #[arg(long)]
    pub env: Option<EnvKind>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub difficulty: Option<u8>,
    /// Training steps S.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Candidates per (agent, turn) group.
    #[arg(long)]
    pub k: Option<usize>,
    /// Turn horizon T.
    #[arg(long)]
    pub turns: Option<usize>,
    #[arg(long)]
    pub n_envs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// shared or specialized.
    #[arg(long)]
    pub role_mode: Option<RoleMode>,
    /// appendix or main-text.
    #[arg(long, value_parser = parse_mixer)]
    pub mixer: Option<MixerForm>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Comma-separated evaluation seeds.
    #[arg(long, value_delimiter = ',')]
    pub eval_seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write rollouts.jsonl and groups.jsonl.
    #[arg(long)]
    pub dump_rollouts: bool,
    /// Record wall-clock durations (makes logs non-reproducible).
    #[arg(long)]
    pub wall_clock: bool,
}

fn parse_mixer(s: &str) -> std::result::Result<MixerForm, String> {
    match s {
        "appendix" => Ok(MixerForm::Appendix),
        "main-text" => Ok(MixerForm::MainText),
        _ => Err(format!("unknown mixer `{s}` (expected appendix or main-text)")),
    }
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($flag:ident => $field:ident) => {
                if let Some(v) = self.$flag.clone() {
                    cfg.$field = v;
                }
            };
        }
        set!(env => env);
        set!(difficulty => difficulty);
        set!(steps => steps);
        set!(k => branches);
        set!(turns => turns);
        set!(n_envs => n_envs);
        set!(seed => seed);
        set!(role_mode => role_mode);
        set!(mixer => mixer);
        set!(alpha => alpha);
        set!(lr => learning_rate);
        set!(temperature => temperature);
        set!(eval_every => eval_every);
        set!(eval_seeds => eval_seeds);
        set!(workers => workers);
        set!(out => out);
        if self.env.is_some() && self.grid_size.is_none() {
            // a size from the file belongs to the file's environment
            cfg.grid_size = None;
            cfg.lambda = None;
        }
        if self.grid_size.is_some() {
            cfg.grid_size = self.grid_size;
        }
        if self.lambda.is_some() {
            cfg.lambda = self.lambda;
        }
        cfg.dump_rollouts |= self.dump_rollouts;
        cfg.wall_clock |= self.wall_clock;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let mut cfg = RunConfig::from_toml("steps = 7\nbranches = 3\nseed = 1\n").unwrap();
        let flags = Overrides {
            k: Some(5),
            seed: Some(9),
            ..Overrides::default()
        };
        flags.apply(&mut cfg);
        assert_eq!((cfg.steps, cfg.branches, cfg.seed), (7, 5, 9));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::from_toml("env = \"sokoban\"\nmixer = \"main-text\"\nalpha = 0.7\n")
            .unwrap()
            .resolved();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.grid_size, Some(6));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("brnaches = 3\n").is_err());
    }

    #[test]
    fn zero_branches_names_the_field() {
        let cfg = RunConfig {
            branches: 0,
            ..RunConfig::default()
        };
        let err = cfg.trainer_config().unwrap_err().to_string();
        assert!(err.contains("branches"), "{err}");
    }
}
