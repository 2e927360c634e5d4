use mas_grpo::env::{EnvKind, EnvSpec};
use mas_grpo::group::{compute_advantages, AdvantageConfig, DegeneratePolicy, SamplingMode};
use mas_grpo::trainer::{greedy_index, Executor};
use mas_grpo::{evaluate, RoleMode, Trainer, TrainerConfig};
use proptest::prelude::*;

fn small(kind: EnvKind, mode: RoleMode) -> TrainerConfig {
    let mut cfg = TrainerConfig::new(EnvSpec { size: 5, ..EnvSpec::new(kind) }, mode);
    if kind == EnvKind::Sudoku {
        cfg.env.size = 4;
    }
    cfg.game.n_envs = 4;
    cfg.game.total_steps = 3;
    cfg.game.eval_seeds = vec![101, 102, 103];
    cfg.workers = 1;
    cfg
}

#[test]
fn three_steps_give_three_metric_rows() {
    for kind in [EnvKind::PlanPath, EnvKind::Sokoban, EnvKind::Sudoku] {
        let out = Trainer::new(small(kind, RoleMode::Specialized)).unwrap().run().unwrap();
        assert_eq!(out.steps.len(), 3, "{kind}");
        assert_eq!(out.steps.iter().map(|m| m.step).collect::<Vec<_>>(), [1, 2, 3]);
        assert!(out.policies.iter().all(|p| p.version == 3));
    }
}

#[test]
fn single_branch_trees_produce_no_usable_groups() {
    let mut cfg = small(EnvKind::PlanPath, RoleMode::Shared);
    cfg.game.branches = 1;
    let mut trainer = Trainer::new(cfg).unwrap();
    let before = trainer.policies().to_vec();
    let m = trainer.train_step().unwrap();
    assert_eq!(m.usable_groups, 0);
    // an empty batch still bumps the version and leaves the weights alone
    for (old, new) in before.iter().zip(trainer.policies()) {
        assert_eq!(new.version, old.version + 1);
        assert_eq!(new.weights, old.weights);
    }
}

#[test]
fn dropping_degenerate_groups_never_adds_groups() {
    let base = small(EnvKind::Sokoban, RoleMode::Specialized);
    let mut dropped = base.clone();
    dropped.advantage.degenerate_policy = DegeneratePolicy::DropGroup;
    let a = Trainer::new(base).unwrap().train_step().unwrap();
    let b = Trainer::new(dropped).unwrap().train_step().unwrap();
    assert!(b.usable_groups <= a.usable_groups);
}

#[test]
fn parallel_sampling_only_groups_the_first_decision() {
    let mut cfg = small(EnvKind::PlanPath, RoleMode::Specialized);
    cfg.sampling = SamplingMode::Parallel;
    let m = Trainer::new(cfg).unwrap().train_step().unwrap();
    assert_eq!(m.usable_groups_per_turn[0], m.usable_groups);
    assert!(m.usable_groups_per_turn[1..].iter().all(|&u| u == 0));
    assert_eq!(m.terminations, 4 * 4);
}

#[test]
fn evaluation_needs_seeds() {
    let trainer = Trainer::new(small(EnvKind::PlanPath, RoleMode::Shared)).unwrap();
    let refs: Vec<&dyn mas_grpo::policy::Policy> =
        trainer.policies().iter().map(|p| p as &dyn mas_grpo::policy::Policy).collect();
    let cfg = trainer.config();
    let err = evaluate(&refs, trainer.mapping(), &cfg.env, cfg.game.turn_horizon, &[], &Executor::new(1).unwrap());
    assert!(err.is_err());
}

#[test]
fn worker_count_does_not_change_results() {
    let mut one = small(EnvKind::Sokoban, RoleMode::Specialized);
    one.game.n_envs = 8;
    let mut many = one.clone();
    many.workers = 4;
    let a = Trainer::new(one).unwrap().run().unwrap();
    let b = Trainer::new(many).unwrap().run().unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.policies, b.policies);
}

proptest! {
    #[test]
    fn advantages_are_centred_and_scaled(rewards in prop::collection::vec(-10.0f64..10.0, 2..12)) {
        let adv = compute_advantages(&rewards, &AdvantageConfig::default()).unwrap().unwrap();
        let sum: f64 = adv.iter().sum();
        prop_assert!(sum.abs() < 1e-9);
        let spread = rewards.iter().cloned().fold(f64::MIN, f64::max) - rewards.iter().cloned().fold(f64::MAX, f64::min);
        if spread > 1e-6 {
            let var = adv.iter().map(|a| a * a).sum::<f64>() / (adv.len() - 1) as f64;
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn advantages_keep_reward_order(rewards in prop::collection::vec(-5.0f64..5.0, 2..10)) {
        let adv = compute_advantages(&rewards, &AdvantageConfig::default()).unwrap().unwrap();
        for i in 0..rewards.len() {
            for j in 0..rewards.len() {
                if rewards[i] < rewards[j] {
                    prop_assert!(adv[i] <= adv[j]);
                }
            }
        }
    }

    #[test]
    fn greedy_pick_is_the_first_maximum(rewards in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0]), 1..10)) {
        let i = greedy_index(&rewards);
        prop_assert!(rewards.iter().all(|&r| r <= rewards[i]));
        prop_assert!(rewards[..i].iter().all(|&r| r < rewards[i]));
    }
}
