//! Grid path planning: reach the goal cell under four-neighbourhood moves.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grid::{distance_field, Grid, Move, Pos};
use super::GENERATION_ATTEMPTS;
use crate::error::{Error, Result};
use crate::game::Payload;

/// Per-entry feature block width.
pub const FEATURES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanPathState {
    grid: Arc<Grid>,
    /// Shortest-path distance of every cell to `goal`.
    dist: Arc<Vec<Option<u32>>>,
    pub position: Pos,
    pub goal: Pos,
    pub d_now: u32,
    /// max(1, initial distance).
    pub d_init: u32,
    pub last_action_legal: bool,
}

impl PlanPathState {
    pub fn new(grid: Grid, position: Pos, goal: Pos) -> Result<Self> {
        if grid.is_wall(position) || grid.is_wall(goal) {
            return Err(Error::contract("player and goal must be on passable cells"));
        }
        let dist = distance_field(&grid, goal);
        let Some(d0) = dist[grid.index(position)] else {
            return Err(Error::contract(format!(
                "goal {goal} unreachable from {position}"
            )));
        };
        Ok(Self {
            grid: Arc::new(grid),
            dist: Arc::new(dist),
            position,
            goal,
            d_now: d0,
            d_init: d0.max(1),
            last_action_legal: true,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// φ = −d.
    pub fn potential(&self) -> f64 {
        -f64::from(self.d_now)
    }

    pub fn distance_from(&self, p: Pos) -> Option<u32> {
        self.dist[self.grid.index(p)]
    }

    pub fn is_solved(&self) -> bool {
        self.position == self.goal
    }

    /// Target cell of `mv` if it is in-bounds and not a wall.
    pub fn target(&self, mv: Move) -> Option<Pos> {
        self.grid
            .neighbor(self.position, mv)
            .filter(|&q| self.grid.passable(q))
    }

    /// Shortest-path indicator computed from the cached distance field.
    pub fn on_shortest_path(&self, mv: Move) -> bool {
        self.target(mv)
            .and_then(|q| self.distance_from(q))
            .is_some_and(|d| d + 1 == self.d_now)
    }

    pub fn step(&self, payload: &Payload) -> Result<Self> {
        let mut next = self.clone();
        match payload {
            Payload::Move(mv) => match self.target(*mv) {
                Some(q) => {
                    next.position = q;
                    next.d_now = self.distance_from(q).expect("connected component");
                    next.last_action_legal = true;
                }
                None => next.last_action_legal = false,
            },
            Payload::Malformed => next.last_action_legal = false,
            other => {
                return Err(Error::contract(format!(
                    "payload {other} is not a plan-path move"
                )))
            }
        }
        Ok(next)
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.grid.height() as u8);
        out.push(self.grid.width() as u8);
        out.extend(self.grid.walls().iter().map(|&w| u8::from(w)));
        for p in [self.position, self.goal] {
            out.push(p.row as u8);
            out.push(p.col as u8);
        }
    }

    pub fn state_features(&self) -> Vec<f64> {
        let h = self.grid.height() as f64;
        let w = self.grid.width() as f64;
        vec![
            f64::from(self.d_now) / f64::from(self.d_init),
            self.position.row as f64 / h,
            self.position.col as f64 / w,
            self.goal.row as f64 / h,
            self.goal.col as f64 / w,
        ]
    }

    pub fn entry_features(&self, payload: &Payload, out: &mut [f64]) {
        let Payload::Move(mv) = payload else { return };
        out[mv.index()] = 1.0;
        let Some(q) = self.target(*mv) else { return };
        out[4] = 1.0;
        let m_before = self.position.manhattan(self.goal);
        let m_after = q.manhattan(self.goal);
        out[5] = f64::from(u8::from(m_after < m_before));
        out[6] = f64::from(u8::from(m_after > m_before));
        let d_after = self.distance_from(q).expect("connected component");
        out[7] = f64::from(u8::from(d_after < self.d_now));
        out[8] = f64::from(u8::from(d_after > self.d_now));
        out[9] = f64::from(u8::from(q == self.goal));
    }
}

/// `(wall density, max start-goal distance)` for a difficulty level.
fn difficulty_params(difficulty: u8) -> (f64, u32) {
    let d = u32::from(difficulty);
    (0.10 + 0.05 * f64::from(d), 4 + 4 * d)
}

pub fn generate(seed: u64, size: usize, difficulty: u8) -> Result<PlanPathState> {
    let (density, max_dist) = difficulty_params(difficulty);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATION_ATTEMPTS {
        let walls = (0..size * size).map(|_| rng.gen_bool(density)).collect();
        let grid = Grid::from_walls(size, size, walls);
        let open: Vec<Pos> = grid.passable_cells().collect();
        if open.len() < 2 {
            continue;
        }
        let start = open[rng.gen_range(0..open.len())];
        let field = distance_field(&grid, start);
        let goals: Vec<Pos> = open
            .iter()
            .copied()
            .filter(|&p| matches!(field[grid.index(p)], Some(d) if d >= 2 && d <= max_dist))
            .collect();
        if goals.is_empty() {
            continue;
        }
        let goal = goals[rng.gen_range(0..goals.len())];
        return PlanPathState::new(grid, start, goal);
    }
    Err(Error::Generation {
        seed,
        attempts: GENERATION_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::grid::bfs_distance;

    #[test]
    fn wall_bump_keeps_position() {
        let mut grid = Grid::open(3, 3);
        grid.set_wall(Pos::new(0, 1), true);
        let s = PlanPathState::new(grid, Pos::new(0, 0), Pos::new(2, 2)).unwrap();
        let next = s.step(&Payload::Move(Move::Right)).unwrap();
        assert_eq!(next.position, s.position);
        assert!(!next.last_action_legal);
        let next = s.step(&Payload::Move(Move::Up)).unwrap();
        assert!(!next.last_action_legal);
        let next = s.step(&Payload::Move(Move::Down)).unwrap();
        assert!(next.last_action_legal);
        assert_eq!(next.d_now, 3);
        assert_eq!(next.potential(), -3.0);
    }

    #[test]
    fn generated_instances_are_reachable_and_deterministic() {
        for seed in 0..50 {
            let a = generate(seed, 10, 1).unwrap();
            let b = generate(seed, 10, 1).unwrap();
            assert_eq!(a, b);
            let d = bfs_distance(a.grid(), a.position, a.goal).unwrap().unwrap();
            assert_eq!(d, a.d_now);
            assert!((2..=8).contains(&d));
        }
    }
}
