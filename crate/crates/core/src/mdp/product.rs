use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;

use serde_json::json;

use super::capability::{CapabilityMdp, TaskRow};
use super::{accumulate, row_sum, MdpError};
use crate::automata::Dfa;

/// Product of a capability MDP and a subtask DFA, restricted to states reachable from
/// the initial pair. Accepting pairs are absorbing and have no rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMdp {
    pub te: CapabilityMdp,
    pub dfa: Dfa,
    /// `(s, x)` pairs in discovery order; index 0 is the initial pair.
    pub states: Vec<(usize, usize)>,
    pub index: BTreeMap<(usize, usize), usize>,
    /// Per product state, rows sorted by action; outcomes index `states`.
    pub rows: Vec<Vec<TaskRow>>,
}

impl ProductMdp {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        self.dfa.is_accepting(self.states[i].1)
    }

    pub fn is_failure(&self, i: usize) -> bool {
        self.te.failure == Some(self.states[i].0)
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.is_accepting(i))
    }

    /// Label of a product state: the label of its capability state.
    pub fn label(&self, i: usize) -> Option<&str> {
        self.te.labels[self.states[i].0].as_deref()
    }

    pub fn state_name(&self, i: usize) -> String {
        let (s, x) = self.states[i];
        format!("({}, {})", self.te.states[s], x)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flatten()
            .map(|r| row_sum(&r.outcomes))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let states: Vec<_> = (0..self.states.len())
            .map(|i| {
                let (s, x) = self.states[i];
                json!({
                    "s": self.te.states[s],
                    "x": x,
                    "label": self.label(i),
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
                        "action": self.te.actions[r.action],
                        "to": r.outcomes,
                        "weight": r.weight,
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

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = format!("digraph {name} {{\n  rankdir=LR;\n  __start [shape=point];\n");
        for i in 0..self.states.len() {
            let shape = if self.is_accepting(i) {
                "doublecircle"
            } else {
                "ellipse"
            };
            writeln!(out, "  n{i} [label=\"{}\", shape={shape}];", self.state_name(i)).unwrap();
        }
        writeln!(out, "  __start -> n{};", self.initial()).unwrap();
        for (i, rows) in self.rows.iter().enumerate() {
            for r in rows {
                for &(t, p) in &r.outcomes {
                    writeln!(
                        out,
                        "  n{i} -> n{t} [label=\"{} : {}\"];",
                        self.te.actions[r.action],
                        fmt_prob(p)
                    )
                    .unwrap();
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn fmt_prob(p: f64) -> String {
    let s = format!("{p:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Task-layer successor of `x` when the team enters capability state `s2`: `Some(x)` for
/// an idle label, the automaton successor if defined, `None` otherwise.
fn task_successor(te: &CapabilityMdp, g: &Dfa, x: usize, s2: usize) -> Option<usize> {
    match &te.labels[s2] {
        None => Some(x),
        Some(l) => g.step(x, l),
    }
}

/// Builds the product MDP. Mass of task-inconsistent outcomes goes to `(s_f, x)`.
pub fn product_task(te: &CapabilityMdp, g: &Dfa) -> Result<ProductMdp, MdpError> {
    te.check_prerequisite(g.alphabet())?;
    let x1 = te.labels[te.initial]
        .as_deref()
        .and_then(|l| g.step(g.initial(), l))
        .unwrap_or(g.initial());
    let init = (te.initial, x1);
    let mut states = vec![init];
    let mut index = BTreeMap::from([(init, 0)]);
    let mut rows: Vec<Vec<TaskRow>> = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let (s, x) = states[i];
        let mut out_rows = Vec::new();
        if !g.is_accepting(x) {
            for row in &te.rows[s] {
                let mut outcomes = Vec::new();
                for &(s2, p) in &row.outcomes {
                    let target = match task_successor(te, g, x, s2) {
                        Some(x2) => (s2, x2),
                        None => match te.failure {
                            Some(f) => (f, x),
                            None => {
                                return Err(MdpError::NoFailureState {
                                    state: format!("({}, {x})", te.states[s]),
                                    action: te.actions[row.action].clone(),
                                })
                            }
                        },
                    };
                    let id = *index.entry(target).or_insert_with(|| {
                        states.push(target);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    });
                    accumulate(&mut outcomes, id, p);
                }
                out_rows.push(TaskRow {
                    action: row.action,
                    outcomes,
                    weight: row.weight,
                });
            }
        }
        if rows.len() <= i {
            rows.resize(i + 1, Vec::new());
        }
        rows[i] = out_rows;
    }
    rows.resize(states.len(), Vec::new());
    Ok(ProductMdp {
        te: te.clone(),
        dfa: g.clone(),
        states,
        index,
        rows,
    })
}
