//! Task-and-motion planning MDP.
//!
//! The motion layer moves first. When the team enters (or stays in) a fort cell whose
//! proposition the task layer can currently realize, the task action fires: outcomes
//! exploring that fort are kept, any other outcome becomes the failure pair. Entering any
//! other cell leaves the task layer where it is. Joint actions that trigger no fort are
//! emitted once, with no task action. Accepting and failure states are terminal.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde_json::json;

use super::motion::{MotionAction, MotionMdp};
use super::product::ProductMdp;
use super::{accumulate, row_sum, MdpError};
use crate::terrain::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanningState {
    /// Capability state.
    pub s: usize,
    /// Automaton state.
    pub x: usize,
    pub cell: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct JointAction {
    /// Capability action; `None` when the task layer stutters.
    pub task: Option<usize>,
    pub motion: MotionAction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningRow {
    pub action: JointAction,
    pub outcomes: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningMdp {
    pub product: ProductMdp,
    pub motion: MotionMdp,
    /// Discovery order; index 0 is the initial state.
    pub states: Vec<PlanningState>,
    pub index: BTreeMap<PlanningState, usize>,
    pub rows: Vec<Vec<PlanningRow>>,
}

impl PlanningMdp {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        self.product.dfa.is_accepting(self.states[i].x)
    }

    pub fn is_failure(&self, i: usize) -> bool {
        self.product.te.failure == Some(self.states[i].s)
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.is_accepting(i))
    }

    /// `(task label, fort label of the cell)`.
    pub fn label(&self, i: usize) -> (Option<&str>, Option<&str>) {
        let st = self.states[i];
        let cell = self.motion.cell_index(st.cell).expect("planning cells are traversable");
        (self.product.te.labels[st.s].as_deref(), self.motion.label(cell))
    }

    /// Distinct successors reachable with positive probability, in row order.
    pub fn successors(&self, i: usize) -> Vec<usize> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.rows[i] {
            for &(t, p) in &r.outcomes {
                if p > 0.0 && seen.insert(t) {
                    out.push(t);
                }
            }
        }
        out
    }

    pub fn state_name(&self, i: usize) -> String {
        let st = self.states[i];
        format!(
            "({}, {}, r{}c{})",
            self.product.te.states[st.s], st.x, st.cell.row, st.cell.col
        )
    }

    pub fn action_name(&self, a: &JointAction) -> String {
        let task = a
            .task
            .map(|t| self.product.te.actions[t].as_str())
            .unwrap_or("-");
        format!("{task}/{}", a.motion)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flatten()
            .map(|r| row_sum(&r.outcomes))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let states: Vec<_> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, st)| {
                json!({
                    "s": self.product.te.states[st.s],
                    "x": st.x,
                    "row": st.cell.row,
                    "col": st.cell.col,
                    "accepting": self.is_accepting(i),
                })
            })
            .collect();
        let transitions: Vec<_> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, rows)| {
                rows.iter().map(move |r| {
                    json!({
                        "from": i,
                        "task_action": r.action.task.map(|t| &self.product.te.actions[t]),
                        "motion_action": r.action.motion.name(),
                        "to": r.outcomes,
                    })
                })
            })
            .collect();
        serde_json::to_string_pretty(&json!({
            "initial": self.initial(),
            "states": states,
            "transitions": transitions,
        }))
        .expect("serializable")
    }
}

/// Fort propositions each product state can realize with some action.
fn realizable(p: &ProductMdp) -> Vec<BTreeSet<&str>> {
    (0..p.num_states())
        .map(|i| {
            p.rows[i]
                .iter()
                .flat_map(|r| r.outcomes.iter())
                .filter(|(t, _)| !p.is_failure(*t))
                .filter_map(|(t, _)| p.label(*t))
                .collect()
        })
        .collect()
}

/// Composes a product MDP with a motion MDP from `start`, keeping reachable states.
pub fn compose_planning_mdp(
    p: &ProductMdp,
    m: &MotionMdp,
    start: Cell,
) -> Result<PlanningMdp, MdpError> {
    m.cell_index(start).ok_or(MdpError::StartCell {
        row: start.row,
        col: start.col,
    })?;
    let te = &p.te;
    let triggers = realizable(p);
    let (s0, x0) = p.states[p.initial()];
    let init = PlanningState {
        s: s0,
        x: x0,
        cell: start,
    };
    let mut states = vec![init];
    let mut index = BTreeMap::from([(init, 0usize)]);
    let mut rows: Vec<Vec<PlanningRow>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let st = states[i];
        let mut out_rows = Vec::new();
        let ps = p.index.get(&(st.s, st.x)).copied();
        let terminal = p.dfa.is_accepting(st.x) || te.failure == Some(st.s);
        if let (Some(ps), false) = (ps, terminal) {
            let ci = m.cell_index(st.cell).expect("planning cells are traversable");
            for mrow in &m.rows[ci] {
                let fired: Vec<Option<&str>> = mrow
                    .outcomes
                    .iter()
                    .map(|&(c2, _)| m.label(c2).filter(|f| triggers[ps].contains(f)))
                    .collect();
                let mut candidate_rows: Vec<(JointAction, Vec<(PlanningState, f64)>)> = Vec::new();
                if fired.iter().all(Option::is_none) {
                    let outcomes = mrow
                        .outcomes
                        .iter()
                        .map(|&(c2, pm)| (PlanningState { cell: m.cells[c2], ..st }, pm))
                        .collect();
                    candidate_rows.push((
                        JointAction {
                            task: None,
                            motion: mrow.action,
                        },
                        outcomes,
                    ));
                } else {
                    'task: for trow in &p.rows[ps] {
                        let mut outcomes = Vec::new();
                        for (&(c2, pm), fort) in mrow.outcomes.iter().zip(&fired) {
                            let cell = m.cells[c2];
                            let Some(fort) = fort else {
                                outcomes.push((PlanningState { cell, ..st }, pm));
                                continue;
                            };
                            for &(pt, pp) in &trow.outcomes {
                                let (s2, x2) = p.states[pt];
                                let target = if p.is_failure(pt) || p.label(pt) == Some(fort) {
                                    PlanningState { s: s2, x: x2, cell }
                                } else if let Some(f) = te.failure {
                                    PlanningState { s: f, x: st.x, cell }
                                } else {
                                    continue 'task;
                                };
                                outcomes.push((target, pp * pm));
                            }
                        }
                        candidate_rows.push((
                            JointAction {
                                task: Some(trow.action),
                                motion: mrow.action,
                            },
                            outcomes,
                        ));
                    }
                }
                for (action, outcomes) in candidate_rows {
                    if outcomes.len() == 1 && outcomes[0].0 == st {
                        continue;
                    }
                    let mut merged = Vec::new();
                    for (target, q) in outcomes {
                        let id = *index.entry(target).or_insert_with(|| {
                            states.push(target);
                            queue.push_back(states.len() - 1);
                            states.len() - 1
                        });
                        accumulate(&mut merged, id, q);
                    }
                    out_rows.push(PlanningRow {
                        action,
                        outcomes: merged,
                    });
                }
            }
        }
        rows.push(out_rows);
    }
    Ok(PlanningMdp {
        product: p.clone(),
        motion: m.clone(),
        states,
        index,
        rows,
    })
}
