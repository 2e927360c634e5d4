use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four-neighbourhood move. Menu order is always `U, D, L, R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    #[serde(rename = "U")]
    Up,
    #[serde(rename = "D")]
    Down,
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn symbol(self) -> char {
        match self {
            Move::Up => 'U',
            Move::Down => 'D',
            Move::Left => 'L',
            Move::Right => 'R',
        }
    }

    pub fn index(self) -> usize {
        match self {
            Move::Up => 0,
            Move::Down => 1,
            Move::Left => 2,
            Move::Right => 3,
        }
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Move::Up => (-1, 0),
            Move::Down => (1, 0),
            Move::Left => (0, -1),
            Move::Right => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Pos) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Wall/passable occupancy matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    height: usize,
    width: usize,
    walls: Vec<bool>,
}

impl Grid {
    pub fn open(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            walls: vec![false; height * width],
        }
    }

    pub fn from_walls(height: usize, width: usize, walls: Vec<bool>) -> Self {
        assert_eq!(walls.len(), height * width, "wall mask has wrong length");
        Self {
            height,
            width,
            walls,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.walls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walls.is_empty()
    }

    pub fn index(&self, p: Pos) -> usize {
        p.row * self.width + p.col
    }

    pub fn pos(&self, index: usize) -> Pos {
        Pos::new(index / self.width, index % self.width)
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.row < self.height && p.col < self.width
    }

    /// Out-of-bounds cells count as walls.
    pub fn is_wall(&self, p: Pos) -> bool {
        !self.in_bounds(p) || self.walls[self.index(p)]
    }

    pub fn passable(&self, p: Pos) -> bool {
        !self.is_wall(p)
    }

    pub fn set_wall(&mut self, p: Pos, wall: bool) {
        let i = self.index(p);
        self.walls[i] = wall;
    }

    /// The in-bounds neighbour of `p` in direction `mv`, wall or not.
    pub fn neighbor(&self, p: Pos, mv: Move) -> Option<Pos> {
        let (dr, dc) = mv.delta();
        let row = p.row.checked_add_signed(dr)?;
        let col = p.col.checked_add_signed(dc)?;
        let q = Pos::new(row, col);
        self.in_bounds(q).then_some(q)
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.len())
            .filter(|&i| !self.walls[i])
            .map(|i| self.pos(i))
    }

    pub fn walls(&self) -> &[bool] {
        &self.walls
    }
}

/// Breadth-first distances from `target` to every cell (`None` when
/// unreachable or a wall).
pub fn distance_field(grid: &Grid, target: Pos) -> Vec<Option<u32>> {
    let mut dist = vec![None; grid.len()];
    if grid.is_wall(target) {
        return dist;
    }
    let mut queue = VecDeque::new();
    dist[grid.index(target)] = Some(0);
    queue.push_back(target);
    while let Some(p) = queue.pop_front() {
        let d = dist[grid.index(p)].unwrap();
        for mv in Move::ALL {
            if let Some(q) = grid.neighbor(p, mv) {
                let qi = grid.index(q);
                if grid.passable(q) && dist[qi].is_none() {
                    dist[qi] = Some(d + 1);
                    queue.push_back(q);
                }
            }
        }
    }
    dist
}

/// Exact shortest-path length between two passable cells under
/// four-neighbourhood moves; `Ok(None)` when unreachable.
pub fn bfs_distance(grid: &Grid, from: Pos, to: Pos) -> Result<Option<u32>> {
    for (name, p) in [("from", from), ("to", to)] {
        if grid.is_wall(p) {
            return Err(Error::contract(format!(
                "bfs endpoint `{name}` {p} is not a passable in-bounds cell"
            )));
        }
    }
    if from == to {
        return Ok(Some(0));
    }
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::from([(from, 0u32)]);
    seen[grid.index(from)] = true;
    while let Some((p, d)) = queue.pop_front() {
        for mv in Move::ALL {
            let Some(q) = grid.neighbor(p, mv) else { continue };
            if grid.is_wall(q) || seen[grid.index(q)] {
                continue;
            }
            if q == to {
                return Ok(Some(d + 1));
            }
            seen[grid.index(q)] = true;
            queue.push_back((q, d + 1));
        }
    }
    Ok(None)
}

/// 1 iff `mv` is legal from `position` and strictly shortens the remaining
/// shortest-path distance to `goal` by one.
pub fn sp_next(grid: &Grid, position: Pos, goal: Pos, mv: Move) -> Result<u8> {
    let Some(before) = bfs_distance(grid, position, goal)? else {
        return Err(Error::contract(format!(
            "sp_next requires {goal} reachable from {position}"
        )));
    };
    let Some(next) = grid.neighbor(position, mv).filter(|&q| grid.passable(q)) else {
        return Ok(0);
    };
    let after = bfs_distance(grid, next, goal)?;
    Ok(u8::from(after.is_some_and(|a| a + 1 == before)))
}
