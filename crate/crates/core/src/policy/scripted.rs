//! Hand-written baselines used as oracles and reference points.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Decision, Policy, SampleResult};
use crate::env::{sudoku, EnvKind, EnvState, Move};
use crate::error::{Error, Result};
use crate::game::Payload;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScriptedKind {
    Random,
    PlanPathOptimal,
    SokobanGreedy,
    SudokuBacktrack,
}

impl ScriptedKind {
    pub const ALL: [ScriptedKind; 4] = [
        ScriptedKind::Random,
        ScriptedKind::PlanPathOptimal,
        ScriptedKind::SokobanGreedy,
        ScriptedKind::SudokuBacktrack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScriptedKind::Random => "random",
            ScriptedKind::PlanPathOptimal => "plan-path-optimal",
            ScriptedKind::SokobanGreedy => "sokoban-greedy",
            ScriptedKind::SudokuBacktrack => "sudoku-backtrack",
        }
    }

    pub fn supports(self, env: EnvKind) -> bool {
        match self {
            ScriptedKind::Random => true,
            ScriptedKind::PlanPathOptimal => env == EnvKind::PlanPath,
            ScriptedKind::SokobanGreedy => env == EnvKind::Sokoban,
            ScriptedKind::SudokuBacktrack => env == EnvKind::Sudoku,
        }
    }
}

impl fmt::Display for ScriptedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScriptedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScriptedKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scripted policy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScriptedPolicy {
    kind: ScriptedKind,
    env: EnvKind,
}

impl ScriptedPolicy {
    pub fn new(kind: ScriptedKind, env: EnvKind) -> Result<Self> {
        if !kind.supports(env) {
            return Err(Error::config(
                "scripted_policy",
                format!("{kind} cannot play {env}"),
            ));
        }
        Ok(Self { kind, env })
    }

    pub fn kind(&self) -> ScriptedKind {
        self.kind
    }

    fn choose(&self, d: &Decision<'_>) -> Result<usize> {
        let menu = d.menu;
        let pick_move = |mv: Move| menu.index_of(&Payload::Move(mv));
        match (self.kind, d.state) {
            (ScriptedKind::PlanPathOptimal, EnvState::PlanPath(s)) => {
                let best = Move::ALL
                    .into_iter()
                    .find(|&m| s.on_shortest_path(m))
                    .or_else(|| Move::ALL.into_iter().find(|&m| s.target(m).is_some()))
                    .unwrap_or(Move::Up);
                pick_move(best).ok_or_else(|| Error::contract("move missing from menu"))
            }
            (ScriptedKind::SokobanGreedy, EnvState::Sokoban(s)) => {
                let score = |mv: Move| -> i64 {
                    if !s.is_legal(mv) {
                        return -10_000;
                    }
                    let next = s.step(&Payload::Move(mv)).expect("move payload");
                    if next.is_solved() {
                        return 10_000;
                    }
                    if s.push_destination(mv).is_some_and(|p| s.board().is_dead_corner(p)) {
                        return -5_000;
                    }
                    let pot = ((next.potential() - s.potential()) * 100.0) as i64;
                    let approach = nearest_box(&next) as i64;
                    pot - approach
                };
                let best = Move::ALL
                    .into_iter()
                    .max_by_key(|&m| (score(m), std::cmp::Reverse(m.index())))
                    .unwrap();
                pick_move(best).ok_or_else(|| Error::contract("move missing from menu"))
            }
            (ScriptedKind::SudokuBacktrack, EnvState::Sudoku(s)) => {
                let payload = sudoku::solve(&s.grid_now, s.size, s.subgrid)
                    .and_then(|sol| {
                        s.grid_now.iter().position(|&v| v == 0).map(|i| Payload::Fill {
                            row: (i / s.size) as u8,
                            col: (i % s.size) as u8,
                            value: sol[i],
                        })
                    })
                    .unwrap_or(Payload::Submit);
                menu.index_of(&payload)
                    .ok_or_else(|| Error::contract(format!("{payload} missing from menu")))
            }
            _ => Err(Error::contract(format!(
                "{} policy handed a {} state",
                self.kind,
                d.state.kind()
            ))),
        }
    }
}

fn nearest_box(s: &crate::env::SokobanState) -> usize {
    s.boxes
        .iter()
        .filter(|&&b| !s.board().is_goal(b))
        .map(|b| s.player.manhattan(*b))
        .min()
        .unwrap_or(0)
}

impl Policy for ScriptedPolicy {
    fn sample(&self, d: &Decision<'_>, _temperature: f64, k: usize, rng: &mut Rng) -> Result<Vec<SampleResult>> {
        if d.menu.is_empty() {
            return Err(Error::EmptyMenu);
        }
        if d.state.kind() != self.env {
            return Err(Error::contract(format!(
                "{} policy built for {} handed a {} state",
                self.kind,
                self.env,
                d.state.kind()
            )));
        }
        if self.kind == ScriptedKind::Random {
            let n = d.menu.len();
            let lp = -(n as f64).ln();
            return Ok((0..k)
                .map(|_| SampleResult {
                    action: d.menu.action(rng.gen_range(0..n)),
                    logprob: lp,
                    sampled_version: 0,
                })
                .collect());
        }
        let index = self.choose(d)?;
        Ok(vec![
            SampleResult {
                action: d.menu.action(index),
                logprob: 0.0,
                sampled_version: 0,
            };
            k
        ])
    }
}
