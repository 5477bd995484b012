//! Most-trustworthy path search over a planning MDP.
//!
//! [`optm_path`] is a label-setting search where each state's label is the negated
//! expected trust of the best known path reaching it. Because trust is recursive, the
//! label of a state depends on the path history, so the search is exact only when the
//! self-weight `β0` is zero. [`oracle_path`] enumerates simple paths exhaustively.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::PlanningMdp;
use crate::svg::{self, SvgCanvas};
use crate::terrain::{Cell, CellGrid, Layer};
use crate::trust::{propagate_unchecked, TrustBelief, TrustError, TrustParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("unsatisfiable in this terrain: no accepting state is reachable")]
    Unsatisfiable,
    #[error(transparent)]
    Trust(#[from] TrustError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    /// Capability state name.
    pub s: String,
    /// Automaton state.
    pub x: usize,
    pub row: usize,
    pub col: usize,
    pub trust_mean: f64,
    pub trust_var: f64,
    /// Joint action taken to reach this step; absent on the first step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
}

impl PlanStep {
    pub fn cell(&self) -> Cell {
        Cell::new(self.row, self.col)
    }

    pub fn belief(&self) -> TrustBelief {
        TrustBelief::new(self.trust_mean, self.trust_var)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub team: String,
    pub path: Vec<PlanStep>,
    pub waypoints: Vec<[f64; 2]>,
    pub terminal_trust: TrustBelief,
    /// Planning-MDP state indices of `path`; not serialized.
    #[serde(skip)]
    pub states: Vec<usize>,
}

impl Plan {
    pub fn cells(&self) -> Vec<Cell> {
        self.path.iter().map(PlanStep::cell).collect()
    }

    pub fn beliefs(&self) -> Vec<TrustBelief> {
        self.path.iter().map(PlanStep::belief).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Plan, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Non-idle task labels along the path, in order.
    pub fn task_word(&self, ppm: &PlanningMdp) -> Vec<String> {
        let mut word = Vec::new();
        let mut prev = None;
        for &i in &self.states {
            let st = ppm.states[i];
            if prev != Some((st.s, st.x)) {
                if let (Some(l), Some(_)) = (ppm.product.te.labels[st.s].as_deref(), prev) {
                    word.push(l.to_string());
                }
                prev = Some((st.s, st.x));
            }
        }
        word
    }
}

/// Builds a plan from planning-MDP state indices, recomputing beliefs along the path.
fn assemble(ppm: &PlanningMdp, grid: &CellGrid, p: &TrustParams, ids: &[usize]) -> Plan {
    let mut belief = p.tau0;
    let mut path = Vec::with_capacity(ids.len());
    for (k, &i) in ids.iter().enumerate() {
        let st = ppm.states[i];
        belief = propagate_unchecked(belief, grid.stats(st.cell), p);
        let action = (k > 0).then(|| {
            let prev = ids[k - 1];
            let row = ppm.rows[prev]
                .iter()
                .find(|r| r.outcomes.iter().any(|&(t, q)| t == i && q > 0.0))
                .expect("consecutive plan states are connected");
            ppm.action_name(&row.action)
        });
        path.push(PlanStep {
            s: ppm.product.te.states[st.s].clone(),
            x: st.x,
            row: st.cell.row,
            col: st.cell.col,
            trust_mean: belief.mean,
            trust_var: belief.var,
            action,
        });
    }
    let cells: Vec<Cell> = path.iter().map(PlanStep::cell).collect();
    Plan {
        team: String::new(),
        terminal_trust: belief,
        waypoints: waypoints(&cells, grid),
        path,
        states: ids.to_vec(),
    }
}

#[derive(PartialEq)]
struct Entry {
    v: f64,
    i: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the smallest label, then the smallest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.v.total_cmp(&self.v).then(other.i.cmp(&self.i))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting search for the path with the highest expected terminal trust.
pub fn optm_path(ppm: &PlanningMdp, grid: &CellGrid, p: &TrustParams) -> Result<Plan, PlanError> {
    p.validate()?;
    let n = ppm.num_states();
    let start = ppm.initial();
    let mut label = vec![f64::INFINITY; n];
    let mut belief = vec![TrustBelief::new(0.0, 0.0); n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];

    belief[start] = propagate_unchecked(p.tau0, grid.stats(ppm.states[start].cell), p);
    label[start] = -belief[start].mean;
    let mut heap = BinaryHeap::from([Entry {
        v: label[start],
        i: start,
    }]);
    let mut positive = true;
    while let Some(Entry { v, i }) = heap.pop() {
        if done[i] || v != label[i] {
            continue;
        }
        done[i] = true;
        positive &= belief[i].mean > 0.0;
        for j in ppm.successors(i) {
            if done[j] || ppm.is_failure(j) {
                continue;
            }
            let b = propagate_unchecked(belief[i], grid.stats(ppm.states[j].cell), p);
            if -b.mean < label[j] {
                label[j] = -b.mean;
                belief[j] = b;
                pred[j] = Some(i);
                heap.push(Entry { v: label[j], i: j });
            }
        }
    }
    if !positive {
        log::warn!("some expected trust is not positive; the zero-initialized variant of the search would differ");
    }
    let goal = (0..n)
        .filter(|&i| done[i] && ppm.is_accepting(i))
        .min_by(|&a, &b| label[a].total_cmp(&label[b]).then(a.cmp(&b)))
        .ok_or(PlanError::Unsatisfiable)?;
    let mut ids = vec![goal];
    while let Some(prev) = pred[*ids.last().expect("nonempty")] {
        ids.push(prev);
    }
    ids.reverse();
    Ok(assemble(ppm, grid, p, &ids))
}

/// Exhaustive search over simple paths of at most `max_len` states (all states when
/// `None`). Ties go to the lexicographically smallest state-index sequence.
pub fn oracle_path(
    ppm: &PlanningMdp,
    grid: &CellGrid,
    p: &TrustParams,
    max_len: Option<usize>,
) -> Result<Plan, PlanError> {
    p.validate()?;
    let max_len = max_len.unwrap_or(ppm.num_states());
    let succ: Vec<Vec<usize>> = (0..ppm.num_states())
        .map(|i| {
            let mut s: Vec<usize> = ppm
                .successors(i)
                .into_iter()
                .filter(|&j| !ppm.is_failure(j))
                .collect();
            s.sort_unstable();
            s
        })
        .collect();

    struct Search<'a> {
        ppm: &'a PlanningMdp,
        grid: &'a CellGrid,
        p: &'a TrustParams,
        succ: Vec<Vec<usize>>,
        max_len: usize,
        on_path: Vec<bool>,
        path: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, i: usize, belief: TrustBelief) {
            if self.ppm.is_accepting(i) {
                let better = match &self.best {
                    None => true,
                    Some((m, path)) => belief.mean > *m || (belief.mean == *m && self.path < *path),
                };
                if better {
                    self.best = Some((belief.mean, self.path.clone()));
                }
                return;
            }
            if self.path.len() >= self.max_len {
                return;
            }
            for k in 0..self.succ[i].len() {
                let j = self.succ[i][k];
                if self.on_path[j] {
                    continue;
                }
                let b = propagate_unchecked(belief, self.grid.stats(self.ppm.states[j].cell), self.p);
                self.on_path[j] = true;
                self.path.push(j);
                self.visit(j, b);
                self.path.pop();
                self.on_path[j] = false;
            }
        }
    }

    let start = ppm.initial();
    let b0 = propagate_unchecked(p.tau0, grid.stats(ppm.states[start].cell), p);
    let mut search = Search {
        ppm,
        grid,
        p,
        succ,
        max_len,
        on_path: vec![false; ppm.num_states()],
        path: vec![start],
        best: None,
    };
    search.on_path[start] = true;
    search.visit(start, b0);
    let (_, ids) = search.best.ok_or(PlanError::Unsatisfiable)?;
    Ok(assemble(ppm, grid, p, &ids))
}

/// World-frame cell centroids along a cell sequence, consecutive duplicates collapsed.
pub fn waypoints(cells: &[Cell], grid: &CellGrid) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(cells.len());
    let mut last = None;
    for &c in cells {
        if last != Some(c) {
            let (x, y) = grid.centroid(c);
            out.push([x, y]);
            last = Some(c);
        }
    }
    out
}

/// One plan overlay for [`overlay_svg`].
pub struct Overlay<'a> {
    pub plan: &'a Plan,
    pub color: &'a str,
    pub dash: Option<&'a str>,
}

/// Terrain heatmap with fort markers and plan polylines; `px` pixels per cell.
pub fn overlay_svg(
    grid: &CellGrid,
    layer: Layer,
    forts: &BTreeMap<String, Cell>,
    overlays: &[Overlay<'_>],
    px: f64,
) -> String {
    let mut canvas = SvgCanvas::new(grid.cols as f64 * px, grid.rows as f64 * px);
    grid.draw_heatmap(&mut canvas, layer, px);
    let to_px = |c: Cell| ((c.col as f64 + 0.5) * px, (c.row as f64 + 0.5) * px);
    for (name, &c) in forts {
        let (x, y) = to_px(c);
        canvas.circle(x, y, px * 0.35, "#ffbf00");
        canvas.text(x + px * 0.4, y - px * 0.4, px * 0.6, "#000000", name);
    }
    for o in overlays {
        let pts: Vec<(f64, f64)> = o.plan.cells().into_iter().map(to_px).collect();
        canvas.polyline(&pts, o.color, px * 0.15, o.dash);
        if let Some(&(x, y)) = pts.first() {
            canvas.circle(x, y, px * 0.2, o.color);
        }
    }
    canvas.finish()
}

/// Default overlay colors by plan index.
pub fn overlay_color(i: usize) -> &'static str {
    svg::palette(i)
}
