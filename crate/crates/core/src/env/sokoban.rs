//! Box pushing on a small walled board.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::grid::{Grid, Move, Pos};
use super::GENERATION_ATTEMPTS;
use crate::error::{Error, Result};
use crate::game::Payload;

pub const FEATURES: usize = 13;

/// Cap on explored push-states when checking solvability.
pub const SEARCH_LIMIT: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Board {
    pub grid: Grid,
    pub goals: Vec<Pos>,
    goal_mask: Vec<bool>,
}

impl Board {
    pub fn new(grid: Grid, mut goals: Vec<Pos>) -> Self {
        goals.sort();
        goals.dedup();
        let mut goal_mask = vec![false; grid.len()];
        for g in &goals {
            goal_mask[grid.index(*g)] = true;
        }
        Self {
            grid,
            goals,
            goal_mask,
        }
    }

    pub fn is_goal(&self, p: Pos) -> bool {
        self.grid.in_bounds(p) && self.goal_mask[self.grid.index(p)]
    }

    /// A non-goal cell with a wall both vertically and horizontally adjacent.
    pub fn is_dead_corner(&self, p: Pos) -> bool {
        !self.is_goal(p) && self.is_corner(p)
    }

    pub fn is_corner(&self, p: Pos) -> bool {
        let wall = |mv| {
            self.grid
                .neighbor(p, mv)
                .is_none_or(|q| self.grid.is_wall(q))
        };
        (wall(Move::Up) || wall(Move::Down)) && (wall(Move::Left) || wall(Move::Right))
    }

    fn nearest_goal_distance(&self, p: Pos) -> usize {
        self.goals
            .iter()
            .map(|g| p.manhattan(*g))
            .min()
            .expect("board has goals")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SokobanState {
    board: Arc<Board>,
    pub player: Pos,
    /// Sorted box positions.
    pub boxes: Vec<Pos>,
    pub boxes_on_goal: usize,
    /// ψ, maintained incrementally on every push.
    potential: i64,
    pub last_action_legal: bool,
    pub last_push: bool,
}

/// Outcome of attempting a move, before it is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MoveKind {
    Blocked,
    Walk(Pos),
    Push { to: Pos, box_from: Pos, box_to: Pos },
}

impl SokobanState {
    pub fn new(board: Board, player: Pos, mut boxes: Vec<Pos>) -> Result<Self> {
        if board.goals.is_empty() {
            return Err(Error::Schedule("sokoban board has no goals".into()));
        }
        if boxes.is_empty() {
            return Err(Error::contract("sokoban instance needs at least one box"));
        }
        boxes.sort();
        let n = boxes.len();
        boxes.dedup();
        if boxes.len() != n {
            return Err(Error::contract("boxes must be pairwise distinct"));
        }
        if board.goals.len() < boxes.len() {
            return Err(Error::contract("fewer goals than boxes"));
        }
        if boxes.iter().chain([&player]).any(|&p| board.grid.is_wall(p)) || boxes.contains(&player) {
            return Err(Error::contract("player and boxes must occupy distinct floor cells"));
        }
        let boxes_on_goal = boxes.iter().filter(|&&b| board.is_goal(b)).count();
        let potential = -(boxes
            .iter()
            .map(|&b| board.nearest_goal_distance(b))
            .sum::<usize>() as i64);
        Ok(Self {
            board: Arc::new(board),
            player,
            boxes,
            boxes_on_goal,
            potential,
            last_action_legal: true,
            last_push: false,
        })
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn n_boxes(&self) -> usize {
        self.boxes.len()
    }

    /// ψ as maintained by `step`.
    pub fn potential(&self) -> f64 {
        self.potential as f64
    }

    pub fn has_box(&self, p: Pos) -> bool {
        self.boxes.binary_search(&p).is_ok()
    }

    pub fn is_solved(&self) -> bool {
        self.boxes_on_goal == self.boxes.len()
    }

    /// Every box not on a goal sits in a static corner deadlock.
    pub fn is_dead_end(&self) -> bool {
        let mut off_goal = self
            .boxes
            .iter()
            .filter(|&&b| !self.board.is_goal(b))
            .peekable();
        off_goal.peek().is_some() && off_goal.all(|&b| self.board.is_dead_corner(b))
    }

    fn classify(&self, mv: Move) -> MoveKind {
        let grid = &self.board.grid;
        let Some(to) = grid.neighbor(self.player, mv).filter(|&q| grid.passable(q)) else {
            return MoveKind::Blocked;
        };
        if !self.has_box(to) {
            return MoveKind::Walk(to);
        }
        match grid.neighbor(to, mv) {
            Some(beyond) if grid.passable(beyond) && !self.has_box(beyond) => MoveKind::Push {
                to,
                box_from: to,
                box_to: beyond,
            },
            _ => MoveKind::Blocked,
        }
    }

    pub fn is_push(&self, mv: Move) -> bool {
        matches!(self.classify(mv), MoveKind::Push { .. })
    }

    pub fn is_legal(&self, mv: Move) -> bool {
        !matches!(self.classify(mv), MoveKind::Blocked)
    }

    /// Destination of the pushed box, if `mv` is a legal push.
    pub fn push_destination(&self, mv: Move) -> Option<Pos> {
        match self.classify(mv) {
            MoveKind::Push { box_to, .. } => Some(box_to),
            _ => None,
        }
    }

    pub fn step(&self, payload: &Payload) -> Result<Self> {
        let mut next = self.clone();
        next.last_push = false;
        let mv = match payload {
            Payload::Move(mv) => *mv,
            Payload::Malformed => {
                next.last_action_legal = false;
                return Ok(next);
            }
            other => {
                return Err(Error::contract(format!(
                    "payload {other} is not a sokoban move"
                )))
            }
        };
        match self.classify(mv) {
            MoveKind::Blocked => next.last_action_legal = false,
            MoveKind::Walk(to) => {
                next.player = to;
                next.last_action_legal = true;
            }
            MoveKind::Push {
                to,
                box_from,
                box_to,
            } => {
                let board = &self.board;
                next.player = to;
                next.last_action_legal = true;
                next.last_push = true;
                let i = next.boxes.binary_search(&box_from).expect("box present");
                next.boxes[i] = box_to;
                next.boxes.sort();
                next.potential += board.nearest_goal_distance(box_from) as i64
                    - board.nearest_goal_distance(box_to) as i64;
                if board.is_goal(box_from) {
                    next.boxes_on_goal -= 1;
                }
                if board.is_goal(box_to) {
                    next.boxes_on_goal += 1;
                }
            }
        }
        Ok(next)
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        let grid = &self.board.grid;
        out.push(grid.height() as u8);
        out.push(grid.width() as u8);
        out.extend(grid.walls().iter().map(|&w| u8::from(w)));
        out.push(self.board.goals.len() as u8);
        for p in self.board.goals.iter().chain([&self.player]).chain(&self.boxes) {
            out.push(p.row as u8);
            out.push(p.col as u8);
        }
    }

    pub fn state_features(&self) -> Vec<f64> {
        let n = self.board.grid.height().max(1) as f64;
        vec![
            self.boxes_on_goal as f64 / self.n_boxes() as f64,
            self.potential as f64 / (2.0 * n * self.n_boxes() as f64),
            self.player.row as f64 / n,
            self.player.col as f64 / n,
        ]
    }

    fn nearest_open_box(&self, p: Pos) -> Option<usize> {
        self.boxes
            .iter()
            .filter(|&&b| !self.board.is_goal(b))
            .map(|b| p.manhattan(*b))
            .min()
    }

    pub fn entry_features(&self, payload: &Payload, out: &mut [f64]) {
        let Payload::Move(mv) = payload else { return };
        out[mv.index()] = 1.0;
        let kind = self.classify(*mv);
        if kind == MoveKind::Blocked {
            return;
        }
        out[4] = 1.0;
        let next = self.step(payload).expect("move payload");
        if let MoveKind::Push { box_from, box_to, .. } = kind {
            let board = &self.board;
            out[5] = 1.0;
            out[6] = f64::from(u8::from(board.is_goal(box_to) && !board.is_goal(box_from)));
            out[7] = f64::from(u8::from(board.is_goal(box_from) && !board.is_goal(box_to)));
            out[8] = f64::from(u8::from(board.is_dead_corner(box_to)));
        }
        out[9] = f64::from(u8::from(next.potential > self.potential));
        out[10] = f64::from(u8::from(next.potential < self.potential));
        if let (Some(before), Some(after)) =
            (self.nearest_open_box(self.player), self.nearest_open_box(next.player))
        {
            out[11] = f64::from(u8::from(after < before));
        }
        out[12] = f64::from(u8::from(next.is_solved()));
    }
}

/// ψ recomputed from scratch: −Σ over boxes of the Manhattan distance to
/// the nearest goal.
pub fn box_goal_potential(state: &SokobanState) -> Result<f64> {
    let board = state.board();
    if board.goals.is_empty() {
        return Err(Error::Schedule("sokoban board has no goals".into()));
    }
    let total: usize = state
        .boxes
        .iter()
        .map(|b| board.goals.iter().map(|g| b.manhattan(*g)).min().unwrap())
        .sum();
    Ok(-(total as f64))
}

/// 0 iff `mv` pushes a box onto a non-goal cell with two orthogonally
/// adjacent walls.
pub fn corner_deadlock_free(state: &SokobanState, mv: Move) -> u8 {
    match state.push_destination(mv) {
        Some(dest) if state.board().is_dead_corner(dest) => 0,
        _ => 1,
    }
}

/// Minimum number of moves to solve, by breadth-first search over
/// (player, boxes) states. `None` when unsolvable within [`SEARCH_LIMIT`].
pub fn solve_moves(state: &SokobanState) -> Option<usize> {
    if state.is_solved() {
        return Some(0);
    }
    let key = |s: &SokobanState| (s.player, s.boxes.clone());
    let mut seen = HashSet::from([key(state)]);
    let mut queue = VecDeque::from([(state.clone(), 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        for mv in Move::ALL {
            if !s.is_legal(mv) {
                continue;
            }
            let next = s.step(&Payload::Move(mv)).expect("move payload");
            if next.is_solved() {
                return Some(d + 1);
            }
            if next.last_push && next.board().is_dead_corner(s.push_destination(mv).unwrap()) {
                continue;
            }
            if seen.len() >= SEARCH_LIMIT {
                return None;
            }
            if seen.insert(key(&next)) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

fn difficulty_params(difficulty: u8, rng: &mut ChaCha8Rng) -> (usize, usize) {
    match difficulty {
        1 => (rng.gen_range(1..=2), rng.gen_range(0..=2)),
        2 => (2, rng.gen_range(1..=3)),
        _ => (3, rng.gen_range(1..=3)),
    }
}

pub fn generate(seed: u64, size: usize, difficulty: u8) -> Result<SokobanState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATION_ATTEMPTS {
        let (n_boxes, n_walls) = difficulty_params(difficulty, &mut rng);
        let mut grid = Grid::open(size, size);
        for i in 0..size {
            for p in [Pos::new(0, i), Pos::new(size - 1, i), Pos::new(i, 0), Pos::new(i, size - 1)] {
                grid.set_wall(p, true);
            }
        }
        let mut interior: Vec<Pos> = grid.passable_cells().collect();
        interior.shuffle(&mut rng);
        for p in interior.drain(..n_walls.min(interior.len())) {
            grid.set_wall(p, true);
        }
        if interior.len() < 2 * n_boxes + 1 {
            continue;
        }
        let goals: Vec<Pos> = interior.drain(..n_boxes).collect();
        let board = Board::new(grid, goals);
        let mut rest: Vec<Pos> = interior
            .iter()
            .copied()
            .filter(|&p| !board.is_corner(p))
            .collect();
        if rest.len() < n_boxes + 1 {
            continue;
        }
        rest.shuffle(&mut rng);
        let boxes: Vec<Pos> = rest.drain(..n_boxes).collect();
        let players: Vec<Pos> = interior
            .iter()
            .copied()
            .filter(|p| !boxes.contains(p))
            .collect();
        let player = players[rng.gen_range(0..players.len())];
        let state = SokobanState::new(board, player, boxes)?;
        if solve_moves(&state).is_some_and(|d| d > 0) {
            return Ok(state);
        }
    }
    Err(Error::Generation {
        seed,
        attempts: GENERATION_ATTEMPTS,
    })
}
