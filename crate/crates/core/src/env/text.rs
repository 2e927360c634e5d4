//! Plain-text instance format: one line per grid row.
//!
//! Glyphs: `#` wall, `.` floor, `P` player, `B` box, `G` goal, `*` box on
//! goal, `+` player on goal. Sudoku rows use digits with `.` for empty.

use super::grid::{Grid, Pos};
use super::sokoban::{Board, SokobanState};
use super::{EnvKind, EnvState, PlanPathState, SudokuState};
use crate::error::{Error, Result};

pub fn dump(state: &EnvState) -> String {
    let mut out = String::new();
    match state {
        EnvState::Sudoku(s) => {
            for row in s.grid_now.chunks(s.size) {
                out.extend(row.iter().map(|&v| match v {
                    0 => '.',
                    v => char::from_digit(u32::from(v), 10).unwrap_or('?'),
                }));
                out.push('\n');
            }
        }
        EnvState::PlanPath(s) => {
            let g = s.grid();
            for r in 0..g.height() {
                for c in 0..g.width() {
                    let p = Pos::new(r, c);
                    out.push(match (p == s.position, p == s.goal) {
                        (true, true) => '+',
                        (true, false) => 'P',
                        (false, true) => 'G',
                        _ if g.is_wall(p) => '#',
                        _ => '.',
                    });
                }
                out.push('\n');
            }
        }
        EnvState::Sokoban(s) => {
            let b = s.board();
            for r in 0..b.grid.height() {
                for c in 0..b.grid.width() {
                    let p = Pos::new(r, c);
                    out.push(match (p == s.player, s.has_box(p), b.is_goal(p)) {
                        (true, _, true) => '+',
                        (true, _, false) => 'P',
                        (_, true, true) => '*',
                        (_, true, false) => 'B',
                        (_, false, true) => 'G',
                        _ if b.grid.is_wall(p) => '#',
                        _ => '.',
                    });
                }
                out.push('\n');
            }
        }
    }
    out
}

fn rows(text: &str) -> Result<Vec<Vec<char>>> {
    let rows: Vec<Vec<char>> = text
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .map(|l| l.chars().collect())
        .collect();
    let width = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(Error::Parse("instance rows must be non-empty and equally wide".into()));
    }
    Ok(rows)
}

pub fn load(kind: EnvKind, text: &str) -> Result<EnvState> {
    let rows = rows(text)?;
    let (h, w) = (rows.len(), rows[0].len());
    match kind {
        EnvKind::Sudoku => {
            if h != w {
                return Err(Error::Parse("sudoku grid must be square".into()));
            }
            let mut grid = Vec::with_capacity(h * w);
            for ch in rows.iter().flatten() {
                grid.push(match ch {
                    '.' | '0' => 0,
                    d => d
                        .to_digit(10)
                        .map(|v| v as u8)
                        .ok_or_else(|| Error::Parse(format!("bad sudoku glyph `{d}`")))?,
                });
            }
            Ok(EnvState::Sudoku(SudokuState::new(h, grid)?))
        }
        EnvKind::PlanPath | EnvKind::Sokoban => {
            let mut grid = Grid::open(h, w);
            let (mut player, mut goals, mut boxes) = (Vec::new(), Vec::new(), Vec::new());
            for (r, row) in rows.iter().enumerate() {
                for (c, &ch) in row.iter().enumerate() {
                    let p = Pos::new(r, c);
                    match ch {
                        '#' => grid.set_wall(p, true),
                        '.' => {}
                        'P' => player.push(p),
                        'G' => goals.push(p),
                        '+' => {
                            player.push(p);
                            goals.push(p);
                        }
                        'B' if kind == EnvKind::Sokoban => boxes.push(p),
                        '*' if kind == EnvKind::Sokoban => {
                            boxes.push(p);
                            goals.push(p);
                        }
                        other => return Err(Error::Parse(format!("bad glyph `{other}` for {kind}"))),
                    }
                }
            }
            let [player] = player[..] else {
                return Err(Error::Parse("exactly one player expected".into()));
            };
            if kind == EnvKind::PlanPath {
                let [goal] = goals[..] else {
                    return Err(Error::Parse("exactly one goal expected".into()));
                };
                Ok(EnvState::PlanPath(PlanPathState::new(grid, player, goal)?))
            } else {
                Ok(EnvState::Sokoban(SokobanState::new(Board::new(grid, goals), player, boxes)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate, EnvSpec};

    #[test]
    fn round_trip_generated_instances() {
        for kind in EnvKind::ALL {
            for seed in 0..5 {
                let s = generate(&EnvSpec::new(kind), seed).unwrap();
                let text = dump(&s);
                let back = load(kind, &text).unwrap();
                assert_eq!(dump(&back), text);
                assert_eq!(back.state_bytes(), s.state_bytes());
            }
        }
    }

    #[test]
    fn sokoban_glyphs() {
        let text = "#####\n#P.*#\n#.B.#\n#..G#\n#####\n";
        let s = load(EnvKind::Sokoban, text).unwrap();
        let k = s.as_sokoban().unwrap();
        assert_eq!(k.n_boxes(), 2);
        assert_eq!(k.boxes_on_goal, 1);
        assert_eq!(dump(&s), text);
    }

    #[test]
    fn rejects_garbage() {
        assert!(load(EnvKind::PlanPath, "P.\n.").is_err());
        assert!(load(EnvKind::PlanPath, "PX\nG.").is_err());
        assert!(load(EnvKind::Sudoku, "12\n3").is_err());
    }
}
