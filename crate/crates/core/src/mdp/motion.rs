use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{row_sum, MdpError};
use crate::terrain::{Cell, CellGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MotionAction {
    N,
    S,
    E,
    W,
    NE,
    NW,
    SE,
    SW,
    Stay,
}

impl MotionAction {
    pub const ALL: [MotionAction; 9] = [
        MotionAction::N,
        MotionAction::S,
        MotionAction::E,
        MotionAction::W,
        MotionAction::NE,
        MotionAction::NW,
        MotionAction::SE,
        MotionAction::SW,
        MotionAction::Stay,
    ];

    /// `(d_row, d_col)`; north is toward row 0.
    pub fn offset(self) -> (isize, isize) {
        match self {
            MotionAction::N => (-1, 0),
            MotionAction::S => (1, 0),
            MotionAction::E => (0, 1),
            MotionAction::W => (0, -1),
            MotionAction::NE => (-1, 1),
            MotionAction::NW => (-1, -1),
            MotionAction::SE => (1, 1),
            MotionAction::SW => (1, -1),
            MotionAction::Stay => (0, 0),
        }
    }

    pub fn apply(self, c: Cell) -> Option<Cell> {
        let (dr, dc) = self.offset();
        Some(Cell::new(
            c.row.checked_add_signed(dr)?,
            c.col.checked_add_signed(dc)?,
        ))
    }

    pub fn name(self) -> &'static str {
        match self {
            MotionAction::N => "N",
            MotionAction::S => "S",
            MotionAction::E => "E",
            MotionAction::W => "W",
            MotionAction::NE => "NE",
            MotionAction::NW => "NW",
            MotionAction::SE => "SE",
            MotionAction::SW => "SW",
            MotionAction::Stay => "stay",
        }
    }
}

impl fmt::Display for MotionAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionRow {
    pub action: MotionAction,
    /// Outcomes index `MotionMdp::cells`.
    pub outcomes: Vec<(usize, f64)>,
    /// Placeholder reward; the trust model supplies the real one.
    pub reward: f64,
}

/// Grid motion MDP over the traversable cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionMdp {
    pub cells: Vec<Cell>,
    pub index: BTreeMap<Cell, usize>,
    /// Per cell, rows of the feasible actions in `MotionAction::ALL` order.
    pub rows: Vec<Vec<MotionRow>>,
    /// Fort proposition located at each cell.
    pub labels: Vec<Option<String>>,
    pub slip: f64,
}

impl MotionMdp {
    pub fn cell_index(&self, c: Cell) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels[i].as_deref()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flatten()
            .map(|r| row_sum(&r.outcomes))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let cells: Vec<_> = self
            .cells
            .iter()
            .zip(&self.labels)
            .map(|(c, l)| json!({"row": c.row, "col": c.col, "label": l}))
            .collect();
        let transitions: Vec<_> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, rows)| {
                rows.iter().map(move |r| {
                    json!({"from": i, "action": r.action.name(), "to": r.outcomes, "reward": r.reward})
                })
            })
            .collect();
        serde_json::to_string_pretty(&json!({
            "slip": self.slip,
            "cells": cells,
            "transitions": transitions,
        }))
        .expect("serializable")
    }
}

/// Motion MDP over the traversable cells of `grid`. A feasible move sends the team to the
/// intended neighbor with probability `1 - slip`; the slip mass is shared equally by the
/// other feasible neighbor moves. Staying is deterministic.
pub fn build_motion_mdp(
    grid: &CellGrid,
    forts: &BTreeMap<String, Cell>,
    slip: f64,
) -> Result<MotionMdp, MdpError> {
    if !(0.0..=0.2).contains(&slip) {
        return Err(MdpError::Slip(slip));
    }
    let cells: Vec<Cell> = grid.cells().filter(|&c| grid.is_traversable(c)).collect();
    let index: BTreeMap<Cell, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut labels = vec![None; cells.len()];
    for (fort, &c) in forts {
        match index.get(&c) {
            Some(&i) => labels[i] = Some(fort.clone()),
            None => {
                return Err(MdpError::FortCell {
                    fort: fort.clone(),
                    row: c.row,
                    col: c.col,
                })
            }
        }
    }
    let mut rows = Vec::with_capacity(cells.len());
    for &c in &cells {
        let feasible: Vec<(MotionAction, usize)> = MotionAction::ALL
            .iter()
            .filter_map(|&a| {
                let t = a.apply(c)?;
                index.get(&t).map(|&i| (a, i))
            })
            .collect();
        let moves: Vec<&(MotionAction, usize)> =
            feasible.iter().filter(|(a, _)| *a != MotionAction::Stay).collect();
        let mut cell_rows = Vec::with_capacity(feasible.len());
        for &(a, target) in &feasible {
            let others: Vec<usize> = moves
                .iter()
                .filter(|(b, _)| *b != a)
                .map(|&&(_, t)| t)
                .collect();
            let outcomes = if a == MotionAction::Stay || others.is_empty() || slip == 0.0 {
                vec![(target, 1.0)]
            } else {
                let share = slip / others.len() as f64;
                std::iter::once((target, 1.0 - slip))
                    .chain(others.into_iter().map(|t| (t, share)))
                    .collect()
            };
            cell_rows.push(MotionRow {
                action: a,
                outcomes,
                reward: 1.0,
            });
        }
        rows.push(cell_rows);
    }
    Ok(MotionMdp {
        cells,
        index,
        rows,
        labels,
        slip,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::mdp::ROW_TOL;
    use crate::terrain::CellStats;

    pub(crate) fn open_grid(rows: usize, cols: usize, nogo: &[Cell]) -> CellGrid {
        let stats = (0..rows * cols)
            .map(|i| CellStats {
                g_mean: 1.0,
                g_var: 0.0,
                los_mean: 1.0,
                los_var: 0.0,
                nogo: nogo.contains(&Cell::new(i / cols, i % cols)),
            })
            .collect();
        CellGrid {
            rows,
            cols,
            cell_size: 2,
            sensing_radius: 1,
            resolution: 1.0,
            stats,
        }
    }

    #[test]
    fn two_cell_corridor() {
        let m = build_motion_mdp(&open_grid(1, 2, &[]), &BTreeMap::new(), 0.0).unwrap();
        let east = m.rows[0].iter().find(|r| r.action == MotionAction::E).unwrap();
        assert_eq!(east.outcomes, vec![(1, 1.0)]);
        // Only E and stay are feasible from the west cell.
        assert_eq!(m.rows[0].len(), 2);
    }

    #[test]
    fn center_of_three_by_three_with_slip() {
        let m = build_motion_mdp(&open_grid(3, 3, &[]), &BTreeMap::new(), 0.1).unwrap();
        let center = m.cell_index(Cell::new(1, 1)).unwrap();
        assert_eq!(m.rows[center].len(), 9);
        let ne = m.rows[center].iter().find(|r| r.action == MotionAction::NE).unwrap();
        assert_eq!(ne.outcomes.len(), 8);
        assert_eq!(ne.outcomes[0], (m.cell_index(Cell::new(0, 2)).unwrap(), 0.9));
        for &(_, p) in &ne.outcomes[1..] {
            assert!((p - 0.1 / 7.0).abs() < 1e-15);
        }
        let stay = m.rows[center].iter().find(|r| r.action == MotionAction::Stay).unwrap();
        assert_eq!(stay.outcomes, vec![(center, 1.0)]);
        assert!(m.row_sums().iter().all(|s| (s - 1.0).abs() <= ROW_TOL));
    }

    #[test]
    fn nogo_cells_are_never_entered() {
        let blocked = Cell::new(1, 1);
        let g = open_grid(3, 3, &[blocked]);
        let m = build_motion_mdp(&g, &BTreeMap::new(), 0.2).unwrap();
        assert!(m.cell_index(blocked).is_none());
        assert_eq!(m.cells.len(), 8);
        for rows in &m.rows {
            for r in rows {
                for &(t, p) in &r.outcomes {
                    assert!(p > 0.0);
                    assert_ne!(m.cells[t], blocked);
                }
            }
        }
        assert!(m.row_sums().iter().all(|s| (s - 1.0).abs() <= ROW_TOL));
        let forts = BTreeMap::from([("f1".to_string(), blocked)]);
        assert!(matches!(
            build_motion_mdp(&g, &forts, 0.0),
            Err(MdpError::FortCell { .. })
        ));
        assert_eq!(
            build_motion_mdp(&g, &BTreeMap::new(), 0.3),
            Err(MdpError::Slip(0.3))
        );
    }

    #[test]
    fn moves_stay_within_the_neighborhood() {
        let m = build_motion_mdp(&open_grid(4, 5, &[Cell::new(2, 2)]), &BTreeMap::new(), 0.15).unwrap();
        for (i, rows) in m.rows.iter().enumerate() {
            for r in rows {
                for &(t, _) in &r.outcomes {
                    assert!(m.cells[i].is_adjacent_or_same(&m.cells[t]));
                }
            }
        }
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["cells"].as_array().unwrap().len(), 19);
    }
}
