//! N×N Sudoku with single-cell fill steps and an explicit submit.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GENERATION_ATTEMPTS;
use crate::error::{Error, Result};
use crate::game::{Payload, Role};

pub const FEATURES: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SudokuState {
    pub size: usize,
    pub subgrid: usize,
    /// Grid before the most recent step (G_{k-1}); 0 is empty.
    pub grid_prev: Vec<u8>,
    /// Current grid (G_k).
    pub grid_now: Vec<u8>,
    pub givens: Arc<Vec<bool>>,
    pub last_fill_legal: bool,
    /// Set once the reasoner submits; ends the episode.
    pub submitted: bool,
}

pub fn subgrid_side(size: usize) -> Option<usize> {
    let s = (size as f64).sqrt().round() as usize;
    (s >= 2 && s * s == size).then_some(s)
}

/// True iff `value` already appears in the row, column or box of
/// `(row, col)`, ignoring that cell itself.
pub fn conflicts(grid: &[u8], size: usize, sub: usize, row: usize, col: usize, value: u8) -> bool {
    let (br, bc) = (row / sub * sub, col / sub * sub);
    (0..size).any(|i| {
        (i != col && grid[row * size + i] == value)
            || (i != row && grid[i * size + col] == value)
            || {
                let (r, c) = (br + i / sub, bc + i % sub);
                (r, c) != (row, col) && grid[r * size + c] == value
            }
    })
}

/// Any repeated non-zero value in a row, column or box.
pub fn has_duplicates(grid: &[u8], size: usize, sub: usize) -> bool {
    (0..size * size).any(|i| {
        let v = grid[i];
        v != 0 && conflicts(grid, size, sub, i / size, i % size, v)
    })
}

pub fn grid_solved(grid: &[u8], size: usize, sub: usize) -> bool {
    grid.iter().all(|&v| v != 0) && !has_duplicates(grid, size, sub)
}

/// Depth-first backtracking; returns the first completion found.
pub fn solve(grid: &[u8], size: usize, sub: usize) -> Option<Vec<u8>> {
    if has_duplicates(grid, size, sub) {
        return None;
    }
    let mut work = grid.to_vec();
    backtrack(&mut work, size, sub, None).then_some(work)
}

fn backtrack(grid: &mut [u8], size: usize, sub: usize, mut rng: Option<&mut ChaCha8Rng>) -> bool {
    let Some(cell) = grid.iter().position(|&v| v == 0) else {
        return true;
    };
    let (row, col) = (cell / size, cell % size);
    let mut values: Vec<u8> = (1..=size as u8).collect();
    if let Some(rng) = rng.as_deref_mut() {
        values.shuffle(rng);
    }
    for v in values {
        if !conflicts(grid, size, sub, row, col, v) {
            grid[cell] = v;
            if backtrack(grid, size, sub, rng.as_deref_mut()) {
                return true;
            }
            grid[cell] = 0;
        }
    }
    false
}

impl SudokuState {
    pub fn new(size: usize, grid: Vec<u8>) -> Result<Self> {
        let sub = subgrid_side(size)
            .ok_or_else(|| Error::contract(format!("sudoku size {size} is not a square")))?;
        if grid.len() != size * size || grid.iter().any(|&v| usize::from(v) > size) {
            return Err(Error::contract("sudoku grid has wrong shape or values"));
        }
        let givens = grid.iter().map(|&v| v != 0).collect();
        Ok(Self {
            size,
            subgrid: sub,
            grid_prev: grid.clone(),
            grid_now: grid,
            givens: Arc::new(givens),
            last_fill_legal: true,
            submitted: false,
        })
    }

    pub fn is_solved(&self) -> bool {
        grid_solved(&self.grid_now, self.size, self.subgrid)
    }

    pub fn empty_cells(&self) -> usize {
        self.grid_now.iter().filter(|&&v| v == 0).count()
    }

    pub fn conflicts(&self, row: usize, col: usize, value: u8) -> bool {
        conflicts(&self.grid_now, self.size, self.subgrid, row, col, value)
    }

    /// Values that can be placed in an empty cell without a direct conflict.
    pub fn candidates(&self, row: usize, col: usize) -> Vec<u8> {
        (1..=self.size as u8)
            .filter(|&v| !self.conflicts(row, col, v))
            .collect()
    }

    /// Grid that results from writing `value` at `(row, col)`
    /// unconditionally (what the agent proposed).
    pub fn proposed(&self, payload: &Payload) -> Vec<u8> {
        let mut g = self.grid_now.clone();
        if let Payload::Fill { row, col, value } = *payload {
            let i = usize::from(row) * self.size + usize::from(col);
            if i < g.len() {
                g[i] = value;
            }
        }
        g
    }

    pub fn step(&self, role: Role, payload: &Payload) -> Result<Self> {
        let mut next = self.clone();
        next.grid_prev = self.grid_now.clone();
        next.last_fill_legal = true;
        match *payload {
            Payload::Fill { row, col, value } => {
                let (r, c) = (usize::from(row), usize::from(col));
                if r >= self.size || c >= self.size || value == 0 || usize::from(value) > self.size {
                    return Err(Error::contract(format!("fill {payload} out of bounds")));
                }
                let i = r * self.size + c;
                if self.givens[i] || self.grid_now[i] != 0 {
                    return Err(Error::contract(format!("fill {payload} targets a filled cell")));
                }
                if self.conflicts(r, c, value) {
                    next.last_fill_legal = false;
                } else {
                    next.grid_now[i] = value;
                }
            }
            Payload::Submit => {
                if role != Role::Tool {
                    next.submitted = true;
                }
            }
            Payload::Malformed => next.last_fill_legal = false,
            Payload::Move(_) => {
                return Err(Error::contract(format!(
                    "payload {payload} is not a sudoku action"
                )))
            }
        }
        Ok(next)
    }

    pub fn menu_entries(&self) -> Vec<Payload> {
        let mut entries = Vec::with_capacity(self.empty_cells() * self.size + 1);
        for (i, &v) in self.grid_now.iter().enumerate() {
            if v == 0 {
                for value in 1..=self.size as u8 {
                    entries.push(Payload::Fill {
                        row: (i / self.size) as u8,
                        col: (i % self.size) as u8,
                        value,
                    });
                }
            }
        }
        entries.push(Payload::Submit);
        entries
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.size as u8);
        out.extend_from_slice(&self.grid_now);
        out.extend(self.givens.iter().map(|&g| u8::from(g)));
    }

    pub fn state_features(&self) -> Vec<f64> {
        let cells = (self.size * self.size) as f64;
        vec![
            self.empty_cells() as f64 / cells,
            f64::from(u8::from(has_duplicates(&self.grid_now, self.size, self.subgrid))),
        ]
    }

    pub fn entry_features(&self, payload: &Payload, out: &mut [f64]) {
        match *payload {
            Payload::Submit => {
                out[0] = 1.0;
                out[1] = f64::from(u8::from(self.is_solved()));
            }
            Payload::Fill { row, col, value } => {
                let (r, c) = (usize::from(row), usize::from(col));
                let conflict = self.conflicts(r, c, value);
                out[2] = f64::from(u8::from(conflict));
                out[3] = f64::from(u8::from(!conflict));
                let cands = self.candidates(r, c);
                out[4] = f64::from(u8::from(cands.len() == 1));
                out[5] = f64::from(u8::from(cands == [value]));
                out[6] = f64::from(u8::from(!conflict && self.empty_cells() == 1));
            }
            _ => {}
        }
    }
}

fn empties_for(size: usize, difficulty: u8) -> usize {
    let d = usize::from(difficulty);
    if size <= 4 {
        4 + 2 * d
    } else {
        size * size / 4 + 10 * d
    }
}

pub fn generate(seed: u64, size: usize, difficulty: u8) -> Result<SudokuState> {
    let sub = subgrid_side(size)
        .ok_or_else(|| Error::config("grid_size", format!("sudoku size {size} is not a square")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let empties = empties_for(size, difficulty).min(size * size - 1);
    for _ in 0..GENERATION_ATTEMPTS {
        let mut full = vec![0u8; size * size];
        if !backtrack(&mut full, size, sub, Some(&mut rng)) {
            continue;
        }
        let mut cells: Vec<usize> = (0..size * size).collect();
        cells.shuffle(&mut rng);
        let mut puzzle = full;
        for &i in &cells[..empties] {
            puzzle[i] = 0;
        }
        if solve(&puzzle, size, sub).is_some() {
            return SudokuState::new(size, puzzle);
        }
    }
    Err(Error::Generation {
        seed,
        attempts: GENERATION_ATTEMPTS,
    })
}
