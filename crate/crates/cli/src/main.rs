//! Command-line driver: train, evaluate and run ablations.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for
//! contract violations at run time.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mas_grpo::env::{generate, text};
use mas_grpo::group::{DegeneratePolicy, SamplingMode};
use mas_grpo::policy::{checkpoint, Policy, PolicyParams, ScriptedKind, ScriptedPolicy};
use mas_grpo::trainer::{evaluate, swap_policies, transposition, Executor, RoleMode, Trainer};
use mas_grpo::{Error, Result, RoleMapping};

use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "mas-grpo", version, about = "Grouped policy optimization for small multi-agent games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train policies and write metrics and checkpoints.
    Train(RunArgs),
    /// Greedy evaluation of checkpoints or a scripted policy.
    Eval(EvalArgs),
    /// Train under an ablation.
    Ablate {
        mode: Ablation,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Ablation {
    /// K independent trajectories instead of per-turn branching.
    ParallelSampling,
    /// Drop zero-variance groups instead of zeroing their advantages.
    DropDegenerate,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    inspect: Inspect,
}

#[derive(Debug, Args)]
struct Inspect {
    /// Print the instance generated from this seed and exit.
    #[arg(long, value_name = "SEED")]
    dump_instance: Option<u64>,
    /// Print the resolved reward schedule and exit.
    #[arg(long)]
    print_schedule: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Checkpoint per policy, in policy order. One checkpoint drives every
    /// agent; two give one policy per role.
    #[arg(long = "checkpoint")]
    checkpoints: Vec<PathBuf>,
    /// Evaluate a scripted policy instead of checkpoints.
    #[arg(long, conflicts_with = "checkpoints")]
    scripted: Option<ScriptedKind>,
    /// Swap the two role policies before evaluating.
    #[arg(long)]
    swap: bool,
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    args.overrides.apply(&mut cfg);
    Ok(cfg.resolved())
}

/// Handles `--dump-instance` and `--print-schedule`; true if one ran.
fn inspect(cfg: &RunConfig, inspect: &Inspect) -> Result<bool> {
    if let Some(seed) = inspect.dump_instance {
        let spec = cfg.env_spec();
        print!("{}", text::dump(&generate(&spec, seed)?));
        return Ok(true);
    }
    if inspect.print_schedule {
        print!("{}", cfg.schedule()?.render());
        return Ok(true);
    }
    Ok(false)
}

fn jsonl_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_line<T: serde::Serialize>(w: &mut impl Write, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::contract(e.to_string()))?;
    writeln!(w, "{line}")?;
    Ok(())
}

fn run_train(cfg: RunConfig) -> Result<()> {
    let trainer_cfg = cfg.trainer_config()?;
    let out = cfg.out.clone();
    fs::create_dir_all(&out)?;
    fs::write(out.join("config.resolved.toml"), cfg.to_toml())?;
    let trainer = Trainer::new(trainer_cfg)?;
    let mut metrics = jsonl_writer(&out.join("metrics.jsonl"))?;
    let mut dumps = if cfg.dump_rollouts {
        Some((
            jsonl_writer(&out.join("rollouts.jsonl"))?,
            jsonl_writer(&out.join("groups.jsonl"))?,
        ))
    } else {
        None
    };
    let outcome = trainer.run_with(|record, trainer| {
        write_line(&mut metrics, record)?;
        if let Some((rollouts, groups)) = dumps.as_mut() {
            let (r, g) = trainer.take_dumps();
            for rec in &r {
                write_line(rollouts, rec)?;
            }
            for rec in &g {
                write_line(groups, rec)?;
            }
        }
        Ok(())
    })?;
    metrics.flush()?;
    if let Some((mut r, mut g)) = dumps {
        r.flush()?;
        g.flush()?;
    }
    for p in &outcome.policies {
        checkpoint::save(p, &out.join(format!("policy-{}.bin", p.policy_id.0)))?;
        fs::write(out.join(format!("policy-{}.txt", p.policy_id.0)), checkpoint::to_text(p))?;
    }
    if let Some(last) = outcome.final_eval() {
        println!(
            "{{\"steps\":{},\"success_rate\":{},\"avg_turns\":{},\"out\":{:?}}}",
            outcome.steps.len(),
            last.success_rate,
            last.avg_turns,
            out.display().to_string()
        );
    }
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let cfg = load_config(&args.run)?;
    if inspect(&cfg, &args.run.inspect)? {
        return Ok(());
    }
    let spec = cfg.env_spec();
    spec.validate()?;
    let seeds = cfg.trainer_config()?.eval_seeds();
    let executor = Executor::new(cfg.workers)?;
    let scripted;
    let params: Vec<PolicyParams>;
    let (refs, mapping): (Vec<&dyn Policy>, RoleMapping) = match args.scripted {
        Some(kind) => {
            if args.swap {
                return Err(Error::config("swap", "a scripted policy drives both roles; nothing to swap"));
            }
            scripted = ScriptedPolicy::new(kind, spec.kind)?;
            (vec![&scripted], RoleMode::Shared.mapping(2))
        }
        None => {
            if args.checkpoints.is_empty() {
                return Err(Error::config("checkpoint", "give --checkpoint or --scripted"));
            }
            let loaded = args
                .checkpoints
                .iter()
                .map(|p| checkpoint::load(p))
                .collect::<Result<Vec<_>>>()?;
            if let Some(p) = loaded.iter().find(|p| p.dim() != spec.kind.feature_dim()) {
                return Err(Error::Checkpoint(format!(
                    "checkpoint for {} has dimension {}, {} needs {}",
                    p.policy_id,
                    p.dim(),
                    spec.kind,
                    spec.kind.feature_dim()
                )));
            }
            let mode = match loaded.len() {
                1 => RoleMode::Shared,
                2 => RoleMode::Specialized,
                n => return Err(Error::config("checkpoint", format!("expected 1 or 2 checkpoints, got {n}"))),
            };
            params = if args.swap {
                swap_policies(&loaded, &transposition(loaded.len()))?
            } else {
                loaded
            };
            (params.iter().map(|p| p as &dyn Policy).collect(), mode.mapping(2))
        }
    };
    let report = evaluate(&refs, &mapping, &spec, cfg.turns, &seeds, &executor)?;
    let line = serde_json::to_string(&report).map_err(|e| Error::contract(e.to_string()))?;
    println!("{line}");
    if args.run.overrides.out.is_some() {
        fs::create_dir_all(&cfg.out)?;
        let mut log = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(cfg.out.join("eval.jsonl"))?;
        writeln!(log, "{line}")?;
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Parse(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = load_config(&args)?;
            if inspect(&cfg, &args.inspect)? {
                return Ok(());
            }
            run_train(cfg)
        }
        Command::Ablate { mode, run } => {
            let mut cfg = load_config(&run)?;
            if inspect(&cfg, &run.inspect)? {
                return Ok(());
            }
            match mode {
                Ablation::ParallelSampling => cfg.sampling = SamplingMode::Parallel,
                Ablation::DropDegenerate => cfg.degenerate = DegeneratePolicy::DropGroup,
            }
            run_train(cfg)
        }
        Command::Eval(args) => run_eval(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
