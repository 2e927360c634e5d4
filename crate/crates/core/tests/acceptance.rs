//! Acceptance suite. Runs as a plain binary (`harness = false`) so each
//! criterion reports exactly one PASS/FAIL line.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Deserialize;

use mas_grpo::env::{
    self, bfs_distance, box_goal_potential, generate, sudoku, text, EnvKind, EnvSpec, EnvState, Grid, Move, Pos,
};
use mas_grpo::game::{MacroAction, Payload, PolicyId, Role, RoleMapping, TurnClock};
use mas_grpo::group::{compute_advantages, AdvantageConfig, Candidate, Group, GroupKey, SamplingMode};
use mas_grpo::policy::{loss, PerPolicyBatch, PolicyParams};
use mas_grpo::reward::{MixerConfig, RewardKernel, RewardSchedule};
use mas_grpo::rng::stream;
use mas_grpo::trainer::{route, transposition, verify_routing, RoleMode, TrainOutcome, Trainer, TrainerConfig};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(label: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("{label} took {elapsed:?}, limit {limit:?}"))
}

// ------------------------------------------------------------------ 1

#[derive(Deserialize)]
struct FixtureFile {
    alpha: f64,
    fixtures: Vec<Fixture>,
}

#[derive(Deserialize)]
struct Fixture {
    env: String,
    role: String,
    board: String,
    action: serde_json::Value,
    team: f64,
    components: serde_json::Map<String, serde_json::Value>,
    local: f64,
    mixed: f64,
    mixed_main_text: f64,
}

#[derive(Deserialize)]
struct PresetEntry {
    lambda: f64,
    roles: std::collections::BTreeMap<String, Vec<(String, f64)>>,
}

fn role_of(name: &str) -> Role {
    match name {
        "planner" => Role::Planner,
        "reasoner" => Role::Reasoner,
        "tool" => Role::Tool,
        other => panic!("unknown role {other}"),
    }
}

fn payload_of(v: &serde_json::Value) -> Payload {
    match v {
        serde_json::Value::String(s) => match s.as_str() {
            "U" => Payload::Move(Move::Up),
            "D" => Payload::Move(Move::Down),
            "L" => Payload::Move(Move::Left),
            "R" => Payload::Move(Move::Right),
            "submit" => Payload::Submit,
            "malformed" => Payload::Malformed,
            other => panic!("unknown action {other}"),
        },
        serde_json::Value::Object(o) => {
            let f: Vec<u8> = serde_json::from_value(o["fill"].clone()).unwrap();
            Payload::Fill {
                row: f[0],
                col: f[1],
                value: f[2],
            }
        }
        other => panic!("unknown action {other}"),
    }
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let presets: std::collections::BTreeMap<String, PresetEntry> =
        serde_json::from_str(include_str!("data/reward_presets.json")).map_err(|e| e.to_string())?;
    for kind in EnvKind::ALL {
        let want = &presets[kind.name()];
        let have = RewardSchedule::preset(kind);
        ensure((have.lambda - want.lambda).abs() < 1e-12, || {
            format!("{kind}: lambda {} != {}", have.lambda, want.lambda)
        })?;
        for (role, comps) in &want.roles {
            let coeffs = have.coefficients(role_of(role)).map_err(|e| e.to_string())?;
            let got: Vec<(String, f64)> = coeffs.components.iter().map(|c| (c.name.clone(), c.weight)).collect();
            ensure(&got == comps, || format!("{kind}/{role}: {got:?} != {comps:?}"))?;
        }
    }

    let file: FixtureFile =
        serde_json::from_str(include_str!("data/reward_fixtures.json")).map_err(|e| e.to_string())?;
    let mut per_env = std::collections::BTreeMap::new();
    let mut worst: f64 = 0.0;
    for (n, fx) in file.fixtures.iter().enumerate() {
        let kind: EnvKind = fx.env.parse().map_err(|e: mas_grpo::Error| e.to_string())?;
        let role = role_of(&fx.role);
        let prev = text::load(kind, &fx.board).map_err(|e| format!("fixture {n}: {e}"))?;
        let payload = payload_of(&fx.action);
        let action = MacroAction {
            menu_index: 0,
            payload,
        };
        let next = prev.step_payload(role, &payload).map_err(|e| format!("fixture {n}: {e}"))?;
        let term = next.termination(TurnClock { turn: 0, horizon: 4 });
        let appendix = RewardKernel::preset(kind);
        let main = RewardKernel::new(RewardSchedule::preset(kind), MixerConfig::main_text(file.alpha))
            .map_err(|e| e.to_string())?;
        let a = appendix.evaluate(role, &prev, &action, &next, term).map_err(|e| e.to_string())?;
        let b = main.evaluate(role, &prev, &action, &next, term).map_err(|e| e.to_string())?;
        let mut diffs = vec![
            ("team", a.team, fx.team),
            ("local", a.local, fx.local),
            ("mixed", a.mixed, fx.mixed),
            ("mixed_main_text", b.mixed, fx.mixed_main_text),
        ];
        for (name, want) in &fx.components {
            let got = a
                .components
                .score(name)
                .ok_or_else(|| format!("fixture {n}: missing component {name}"))?;
            diffs.push(("component", got, want.as_f64().unwrap()));
        }
        for (what, got, want) in diffs {
            let err = (got - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || {
                format!("fixture {n} ({} {} {}): {what} = {got}, expected {want}", fx.env, fx.role, fx.action)
            })?;
        }
        *per_env.entry(kind.name()).or_insert(0usize) += 1;
    }
    ensure(per_env.len() == 3 && per_env.values().all(|&c| c >= 30), || {
        format!("too few fixtures: {per_env:?}")
    })?;
    within("reward suite", started.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "{} fixtures ({per_env:?}), max error {worst:.1e}",
        file.fixtures.len()
    ))
}

// ------------------------------------------------------------------ 2

fn criterion_2() -> Check {
    let started = Instant::now();
    let cfg = AdvantageConfig::default();
    let fixture = compute_advantages(&[1.0, 0.0, 0.0, 1.0], &cfg)
        .map_err(|e| e.to_string())?
        .unwrap();
    let half_root3 = 3f64.sqrt() / 2.0;
    for (a, sign) in fixture.iter().zip([1.0, -1.0, -1.0, 1.0]) {
        ensure((a - sign * 0.866_025_403_784_438_6).abs() <= 1e-9, || format!("fixture gave {fixture:?}"))?;
        ensure((a - sign * half_root3).abs() <= 1e-12, || format!("fixture gave {fixture:?}"))?;
    }
    let mut rng = stream(2, &[]);
    let (mut checked, mut degenerate) = (0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=16);
        let discrete = rng.gen_bool(0.3);
        let rewards: Vec<f64> = (0..k)
            .map(|_| {
                if discrete {
                    f64::from(rng.gen_range(0..3u8)) / 2.0
                } else {
                    rng.gen_range(-5.0..5.0)
                }
            })
            .collect();
        let adv = compute_advantages(&rewards, &cfg).map_err(|e| e.to_string())?.unwrap();
        let mean_r = rewards.iter().sum::<f64>() / k as f64;
        let spread = rewards.iter().map(|r| (r - mean_r).abs()).fold(0.0, f64::max);
        if k < 2 || spread == 0.0 {
            degenerate += 1;
            ensure(adv.iter().all(|&a| a == 0.0), || format!("degenerate {rewards:?} gave {adv:?}"))?;
            continue;
        }
        let mean = adv.iter().sum::<f64>() / k as f64;
        let sd = (adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt();
        worst = worst.max(mean.abs()).max((sd - 1.0).abs());
        ensure(mean.abs() <= 1e-9 && (sd - 1.0).abs() <= 1e-9, || {
            format!("{rewards:?}: mean {mean}, std {sd}")
        })?;
        checked += 1;
    }
    within("advantage suite", started.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "{checked} non-degenerate vectors, {degenerate} degenerate, max deviation {worst:.1e}"
    ))
}

// ------------------------------------------------------------------ 3

fn random_group(kind: EnvKind, rng: &mut mas_grpo::rng::Rng, version: u64, idx: usize) -> Result<Group, String> {
    let spec = EnvSpec::new(kind);
    let state = generate(&spec, rng.gen()).map_err(|e| e.to_string())?;
    let role = kind.roles()[rng.gen_range(0..2)];
    let obs = Arc::new(state.observe(role, 0));
    let menu = Arc::new(state.legal_menu(role).map_err(|e| e.to_string())?);
    let k = rng.gen_range(1..=6);
    let candidates: Vec<Candidate> = (0..k)
        .map(|_| Candidate {
            observation: obs.clone(),
            action: menu.action(rng.gen_range(0..menu.len())),
            reward: 0.0,
            logprob: 0.0,
            version,
        })
        .collect();
    Ok(Group {
        key: GroupKey {
            env_id: idx,
            agent: 0,
            turn: 0,
            step: 0,
            branch: 0,
        },
        observation: obs,
        menu,
        advantages: (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        candidates,
    })
}

fn criterion_3() -> Check {
    let started = Instant::now();
    let mut rng = stream(3, &[]);
    let mut worst: f64 = 0.0;
    let h = 1e-5;
    for b in 0..100 {
        let kind = EnvKind::ALL[b % 3];
        let dim = kind.feature_dim();
        let version = rng.gen_range(0..5);
        let mut params = PolicyParams::zeros(PolicyId(0), dim);
        params.version = version;
        for w in &mut params.weights {
            *w = rng.gen_range(-1.5..1.5);
        }
        let n_groups = rng.gen_range(1..=4);
        let groups = (0..n_groups)
            .map(|i| random_group(kind, &mut rng, version, i))
            .collect::<Result<Vec<_>, _>>()?;
        let batch = PerPolicyBatch {
            policy_id: PolicyId(0),
            version,
            temperature: rng.gen_range(0.3..2.0),
            groups,
        };
        let analytic = loss(&params, &batch).map_err(|e| e.to_string())?.gradient;
        for (j, &exact) in analytic.iter().enumerate() {
            let mut plus = params.clone();
            plus.weights[j] += h;
            let mut minus = params.clone();
            minus.weights[j] -= h;
            let fd = (loss(&plus, &batch).unwrap().loss - loss(&minus, &batch).unwrap().loss) / (2.0 * h);
            let err = (fd - exact).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("batch {b} ({kind}) coordinate {j}: fd {fd}, analytic {exact}"))?;
        }
    }
    within("gradient suite", started.elapsed(), Duration::from_secs(10))?;
    Ok(format!("100 batches, max |fd - analytic| {worst:.1e}"))
}

// ------------------------------------------------------------------ 4

fn criterion_4() -> Check {
    let started = Instant::now();
    let mut rng = stream(4, &[]);
    let spec = EnvSpec::new(EnvKind::PlanPath);
    let state = generate(&spec, 1).map_err(|e| e.to_string())?;
    let obs = Arc::new(state.observe(Role::Planner, 0));
    let menu = Arc::new(state.legal_menu(Role::Planner).map_err(|e| e.to_string())?);
    let mut shared_steps = 0;
    for step in 0..100 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=n);
        // surjective random mapping: first m agents cover every policy
        let mut assignment: Vec<PolicyId> = (0..n).map(|i| PolicyId(if i < m { i } else { rng.gen_range(0..m) })).collect();
        assignment.shuffle(&mut rng);
        let mapping = RoleMapping::new(assignment);
        let datasets: Vec<Vec<Group>> = (0..n)
            .map(|i| {
                (0..rng.gen_range(0..10))
                    .map(|e| Group {
                        key: GroupKey {
                            env_id: e,
                            agent: i,
                            turn: rng.gen_range(0..4),
                            step,
                            branch: 0,
                        },
                        observation: obs.clone(),
                        menu: menu.clone(),
                        candidates: vec![],
                        advantages: vec![],
                    })
                    .collect()
            })
            .collect();
        let produced: BTreeSet<GroupKey> = datasets.iter().flatten().map(|g| g.key).collect();
        let total: usize = datasets.iter().map(Vec::len).sum();
        let snapshots: Vec<PolicyParams> = (0..m).map(|p| PolicyParams::zeros(PolicyId(p), menu.dim())).collect();
        let batches = route(datasets, &mapping, &snapshots, 1.0).map_err(|e| e.to_string())?;
        verify_routing(&produced, &batches, &mapping).map_err(|e| format!("step {step}: {e}"))?;
        let routed: BTreeSet<GroupKey> = batches.iter().flat_map(|b| b.groups.iter().map(|g| g.key)).collect();
        ensure(routed == produced, || format!("step {step}: key sets differ"))?;
        ensure(batches.iter().map(|b| b.len()).sum::<usize>() == total, || format!("step {step}: count drift"))?;
        if m == 1 {
            shared_steps += 1;
            ensure(batches[0].len() == total, || format!("step {step}: |B_1| != sum |D_i|"))?;
        }
        // a misfiled group must be caught
        if m >= 2 && total > 0 {
            let mut bad = batches.clone();
            let from = bad.iter().position(|b| !b.is_empty()).unwrap();
            let g = bad[from].groups.pop().unwrap();
            bad[(from + 1) % m].groups.push(g);
            ensure(verify_routing(&produced, &bad, &mapping).is_err(), || {
                format!("step {step}: misrouted group accepted")
            })?;
        }
    }
    within("routing suite", started.elapsed(), Duration::from_secs(5))?;
    Ok(format!("100 random steps ({shared_steps} role-sharing), key sets conserved"))
}

// ---------------------------------------------------------------- 5-8

const EVAL_SEEDS: std::ops::Range<u64> = 1_000_000..1_000_200;

fn efficacy_config(sampling: SamplingMode) -> TrainerConfig {
    let spec = EnvSpec {
        kind: EnvKind::PlanPath,
        size: 5,
        difficulty: 1,
    };
    let mut cfg = TrainerConfig::new(spec, RoleMode::Specialized);
    cfg.game.branches = 4;
    cfg.game.turn_horizon = 4;
    cfg.game.n_envs = 64;
    cfg.game.total_steps = 150;
    cfg.game.seed = 7;
    cfg.game.eval_seeds = EVAL_SEEDS.collect();
    cfg.eval_every = 25;
    cfg.sampling = sampling;
    cfg
}

struct EfficacyRun {
    outcome: TrainOutcome,
    swapped: f64,
}

fn efficacy_run(sampling: SamplingMode) -> Result<EfficacyRun, String> {
    let cfg = efficacy_config(sampling);
    let trainer = Trainer::new(cfg.clone()).map_err(|e| e.to_string())?;
    let outcome = trainer.run().map_err(|e| e.to_string())?;
    let mut probe = Trainer::new(cfg).map_err(|e| e.to_string())?;
    probe.set_policies(outcome.policies.clone()).map_err(|e| e.to_string())?;
    let swapped = probe
        .evaluate_swapped(&transposition(2))
        .map_err(|e| e.to_string())?
        .success_rate;
    Ok(EfficacyRun { outcome, swapped })
}

fn criterion_5(run: &EfficacyRun) -> Check {
    let first = run.outcome.first_eval().unwrap();
    let last = run.outcome.final_eval().unwrap();
    ensure(first.success_rate < last.success_rate, || {
        format!("no improvement over step-0 baseline {}", first.success_rate)
    })?;
    ensure(last.success_rate >= 0.90, || {
        format!("final success {} < 0.90 (baseline {})", last.success_rate, first.success_rate)
    })?;
    Ok(format!(
        "success {:.3} after {} steps on {} held-out seeds (step-0 baseline {:.3})",
        last.success_rate,
        run.outcome.steps.len(),
        last.episodes,
        first.success_rate
    ))
}

fn criterion_6(run: &EfficacyRun) -> Check {
    let unswapped = run.outcome.final_eval().unwrap().success_rate;
    ensure(run.swapped <= 0.5 * unswapped, || {
        format!("swapped {} vs unswapped {unswapped}", run.swapped)
    })?;
    Ok(format!("swapped {:.3} vs unswapped {unswapped:.3}", run.swapped))
}

fn criterion_7(run: &EfficacyRun) -> Check {
    let first = run.outcome.first_eval().unwrap().avg_turns;
    let last = run.outcome.final_eval().unwrap().avg_turns;
    ensure(last <= first, || format!("avg turns rose from {first} to {last}"))?;
    Ok(format!("avg turns {first:.3} -> {last:.3}"))
}

fn criterion_8(tree: &EfficacyRun) -> Check {
    let par = efficacy_run(SamplingMode::Parallel)?;
    let e = efficacy_config(SamplingMode::Parallel).game.n_envs;
    for m in &par.outcome.steps {
        ensure(m.usable_groups_per_turn[0] == e, || {
            format!("step {}: {} usable groups at the first turn, expected {e}", m.step, m.usable_groups_per_turn[0])
        })?;
        ensure(m.usable_groups_per_turn[1..].iter().all(|&u| u == 0), || {
            format!("step {}: usable groups after the first turn: {:?}", m.step, m.usable_groups_per_turn)
        })?;
    }
    let t = tree.outcome.final_eval().unwrap().success_rate;
    let p = par.outcome.final_eval().unwrap().success_rate;
    ensure(p < t, || format!("parallel {p} not below tree {t}"))?;
    Ok(format!("usable groups per turn [{e}, 0, 0, 0]; final success parallel {p:.3} < tree {t:.3}"))
}

// ------------------------------------------------------------------ 9

fn criterion_9() -> Check {
    let log_for = |workers: usize| -> Result<String, String> {
        let mut cfg = efficacy_config(SamplingMode::Tree);
        cfg.game.total_steps = 12;
        cfg.game.n_envs = 32;
        cfg.game.eval_seeds = (0..40).collect();
        cfg.eval_every = 4;
        cfg.workers = workers;
        let out = Trainer::new(cfg).and_then(Trainer::run).map_err(|e| e.to_string())?;
        Ok(mas_grpo::trainer::to_jsonl(&out.log))
    };
    let logs = [log_for(1)?, log_for(1)?, log_for(8)?, log_for(8)?];
    ensure(logs.iter().all(|l| l == &logs[0]), || "metrics logs differ across runs".into())?;
    Ok(format!(
        "4 runs (workers 1,1,8,8) byte-identical, {} bytes",
        logs[0].len()
    ))
}

// ----------------------------------------------------------------- 10

fn brute_distances(grid: &Grid, to: Pos) -> Vec<Option<u32>> {
    // Bellman-Ford style relaxation until nothing changes.
    let mut d: Vec<Option<u32>> = vec![None; grid.len()];
    d[grid.index(to)] = Some(0);
    loop {
        let mut changed = false;
        for i in 0..grid.len() {
            let p = grid.pos(i);
            if grid.is_wall(p) {
                continue;
            }
            for mv in Move::ALL {
                if let Some(q) = grid.neighbor(p, mv) {
                    if let Some(dq) = d[grid.index(q)].filter(|_| grid.passable(q)) {
                        if d[i].is_none_or(|di| dq + 1 < di) {
                            d[i] = Some(dq + 1);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

fn duplicate_scan(grid: &[u8], n: usize) -> bool {
    let sub = (n as f64).sqrt() as usize;
    let unit_ok = |cells: Vec<usize>| {
        let mut seen = vec![false; n + 1];
        cells.into_iter().all(|i| {
            let v = grid[i] as usize;
            v != 0 && v <= n && !std::mem::replace(&mut seen[v], true)
        })
    };
    (0..n).all(|r| unit_ok((0..n).map(|c| r * n + c).collect()))
        && (0..n).all(|c| unit_ok((0..n).map(|r| r * n + c).collect()))
        && (0..n).all(|b| {
            let (br, bc) = ((b / sub) * sub, (b % sub) * sub);
            unit_ok((0..n).map(|k| (br + k / sub) * n + bc + k % sub).collect())
        })
}

fn criterion_10() -> Check {
    let started = Instant::now();
    let mut rng = stream(10, &[]);
    // bfs_distance against relaxation, every cell of 100 grids
    let mut pairs = 0;
    for g in 0..100 {
        let n = if g % 2 == 0 { 5 } else { 10 };
        let walls: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(0.25)).collect();
        let grid = Grid::from_walls(n, n, walls);
        let open: Vec<Pos> = grid.passable_cells().collect();
        let Some(&target) = open.choose(&mut rng) else { continue };
        let brute = brute_distances(&grid, target);
        for (i, &want) in brute.iter().enumerate() {
            let p = grid.pos(i);
            let got = bfs_distance(&grid, p, target);
            if grid.is_wall(p) {
                ensure(got.is_err(), || format!("grid {g}: wall source {p:?} accepted"))?;
            } else {
                let got = got.map_err(|e| e.to_string())?;
                ensure(got == want, || format!("grid {g}: {p:?} -> {target:?}: {got:?} vs {want:?}"))?;
                pairs += 1;
            }
        }
    }
    // Sudoku solved check against a duplicate scan
    let mut solved = 0;
    for j in 0..1000 {
        let size = if j % 4 == 0 { 9 } else { 4 };
        let puzzle = sudoku::generate(rng.gen(), size, 1).map_err(|e| e.to_string())?;
        let mut grid = sudoku::solve(&puzzle.grid_now, puzzle.size, puzzle.subgrid).ok_or("unsolvable puzzle")?;
        match rng.gen_range(0..4) {
            0 => {}
            1 => {
                let i = rng.gen_range(0..grid.len());
                grid[i] = rng.gen_range(1..=size as u8);
            }
            2 => {
                let (a, b) = (rng.gen_range(0..grid.len()), rng.gen_range(0..grid.len()));
                grid.swap(a, b);
            }
            _ => {
                let i = rng.gen_range(0..grid.len());
                grid[i] = 0;
            }
        }
        let state = env::SudokuState::new(size, grid.clone()).map_err(|e| e.to_string())?;
        let want = duplicate_scan(&grid, size);
        ensure(state.is_solved() == want, || format!("grid {j}: is_solved {} vs scan {want}", state.is_solved()))?;
        solved += usize::from(want);
    }
    // Sokoban incremental potential against recomputation
    let mut visited = 0;
    for s in 0..6 {
        let spec = EnvSpec::new(EnvKind::Sokoban);
        let EnvState::Sokoban(root) = generate(&spec, 500 + s).map_err(|e| e.to_string())? else {
            unreachable!()
        };
        let mut frontier = VecDeque::from([(root, 0usize)]);
        while let Some((state, depth)) = frontier.pop_front() {
            visited += 1;
            let fresh = box_goal_potential(&state).map_err(|e| e.to_string())?;
            ensure(state.potential() == fresh, || format!("potential {} vs {fresh}", state.potential()))?;
            let on_goal = state.boxes.iter().filter(|&&b| state.board().is_goal(b)).count();
            ensure(state.boxes_on_goal == on_goal, || "boxes-on-goal count drifted".into())?;
            if depth < 6 {
                for mv in Move::ALL {
                    let next = state.step(&Payload::Move(mv)).map_err(|e| e.to_string())?;
                    frontier.push_back((next, depth + 1));
                }
            }
        }
    }
    within("oracle suite", started.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "{pairs} bfs pairs, 1000 sudoku grids ({solved} solved), {visited} sokoban states"
    ))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, result: Check| match result {
        Ok(detail) => println!("criterion {n:>2}: PASS  {detail}"),
        Err(detail) => {
            failures += 1;
            println!("criterion {n:>2}: FAIL  {detail}");
        }
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    match efficacy_run(SamplingMode::Tree) {
        Ok(run) => {
            report(5, criterion_5(&run));
            report(6, criterion_6(&run));
            report(7, criterion_7(&run));
            report(8, criterion_8(&run));
        }
        Err(e) => {
            for n in 5..=8 {
                report(n, Err(format!("training run failed: {e}")));
            }
        }
    }
    report(9, criterion_9());
    report(10, criterion_10());
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
