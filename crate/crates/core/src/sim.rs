//! Kinematic simulation of successive bounding overwatch.
//!
//! Each team is a bounder and an overwatcher moving as points at constant speed. For each
//! step of the plan the bounder drives to the next waypoint while the overwatcher holds;
//! then the overwatcher drives the same segment. Trust advances when the overwatcher
//! arrives. Teams run concurrently on a shared clock and are updated in input order.

use std::fmt::Write;

use serde::Serialize;

use crate::plan::Plan;
use crate::svg::{self, SvgCanvas};
use crate::terrain::{CellGrid, Layer};
use crate::trust::TrustBelief;

/// Distance under which a robot counts as arrived.
const ARRIVAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    BounderAdvancing,
    OverwatcherJoining,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamState {
    pub team: String,
    pub bounder: [f64; 2],
    pub overwatcher: [f64; 2],
    /// Index of the waypoint currently being approached.
    pub path_index: usize,
    pub phase: Phase,
    /// Index into the per-waypoint beliefs of the last completed step.
    trust_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimRecord {
    pub t: f64,
    pub team: String,
    pub robot: &'static str,
    pub x: f64,
    pub y: f64,
    pub path_index: usize,
    pub trust_mean: f64,
    pub trust_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub records: Vec<SimRecord>,
    /// `(team, finished)` in input order.
    pub status: Vec<(String, bool)>,
}

impl SimLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,team,robot,x,y,path_index,trust_mean,trust_var\n");
        for r in &self.records {
            writeln!(
                out,
                "{:.6},{},{},{:.6},{:.6},{},{:.9},{:.9}",
                r.t, r.team, r.robot, r.x, r.y, r.path_index, r.trust_mean, r.trust_var
            )
            .unwrap();
        }
        out
    }

    /// Records of one robot, in time order.
    pub fn track<'a>(&'a self, team: &'a str, robot: &'a str) -> impl Iterator<Item = &'a SimRecord> {
        self.records
            .iter()
            .filter(move |r| r.team == team && r.robot == robot)
    }

    /// Trajectories over a heatmap; `px` pixels per cell.
    pub fn to_svg(&self, grid: &CellGrid, px: f64) -> String {
        let mut canvas = SvgCanvas::new(grid.cols as f64 * px, grid.rows as f64 * px);
        grid.draw_heatmap(&mut canvas, Layer::Traversability, px);
        let scale = px / grid.cell_meters();
        for (i, (team, _)) in self.status.iter().enumerate() {
            for (robot, dash) in [("bounder", None), ("overwatcher", Some("4 3"))] {
                let pts: Vec<(f64, f64)> = self
                    .track(team, robot)
                    .map(|r| (r.x * scale, r.y * scale))
                    .collect();
                canvas.polyline(&pts, svg::palette(i), px * 0.12, dash);
            }
        }
        canvas.finish()
    }
}

fn advance(pos: &mut [f64; 2], target: [f64; 2], step: f64) -> bool {
    let (dx, dy) = (target[0] - pos[0], target[1] - pos[1]);
    let d = dx.hypot(dy);
    if d <= step + ARRIVAL_EPS {
        *pos = target;
        true
    } else {
        pos[0] += dx / d * step;
        pos[1] += dy / d * step;
        false
    }
}

/// Belief after completing each waypoint: the last plan step on that waypoint's cell run.
fn waypoint_beliefs(plan: &Plan) -> Vec<TrustBelief> {
    let mut out: Vec<TrustBelief> = Vec::new();
    let mut last = None;
    for s in &plan.path {
        if last == Some(s.cell()) {
            *out.last_mut().expect("nonempty") = s.belief();
        } else {
            out.push(s.belief());
            last = Some(s.cell());
        }
    }
    out
}

/// Runs all plans to completion. `speed` in m/s and `dt` in seconds must be positive.
pub fn run_sim(plans: &[Plan], speed: f64, dt: f64) -> SimLog {
    assert!(speed > 0.0 && dt > 0.0, "speed and dt must be positive");
    let beliefs: Vec<Vec<TrustBelief>> = plans.iter().map(waypoint_beliefs).collect();
    let mut teams: Vec<TeamState> = plans
        .iter()
        .map(|p| {
            let start = p.waypoints.first().copied().unwrap_or([0.0, 0.0]);
            TeamState {
                team: p.team.clone(),
                bounder: start,
                overwatcher: start,
                path_index: 1.min(p.waypoints.len().saturating_sub(1)),
                phase: if p.waypoints.len() > 1 {
                    Phase::BounderAdvancing
                } else {
                    Phase::Done
                },
                trust_index: 0,
            }
        })
        .collect();

    let mut records = Vec::new();
    let record = |records: &mut Vec<SimRecord>, t: f64, st: &TeamState, b: &[TrustBelief]| {
        let belief = b.get(st.trust_index).copied().unwrap_or_default();
        for (robot, pos) in [("bounder", st.bounder), ("overwatcher", st.overwatcher)] {
            records.push(SimRecord {
                t,
                team: st.team.clone(),
                robot,
                x: pos[0],
                y: pos[1],
                path_index: st.path_index,
                trust_mean: belief.mean,
                trust_var: belief.var,
            });
        }
    };
    for (st, b) in teams.iter().zip(&beliefs) {
        record(&mut records, 0.0, st, b);
    }

    let step = speed * dt;
    let total: f64 = plans
        .iter()
        .map(|p| {
            p.waypoints
                .windows(2)
                .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let max_ticks = (2.0 * total / step).ceil() as usize + 4 * plans.iter().map(|p| p.waypoints.len()).max().unwrap_or(0) + 1;

    let mut tick = 0usize;
    while teams.iter().any(|t| t.phase != Phase::Done) && tick < max_ticks {
        tick += 1;
        let t = tick as f64 * dt;
        for ((st, plan), b) in teams.iter_mut().zip(plans).zip(&beliefs) {
            if st.phase == Phase::Done {
                continue;
            }
            let target = plan.waypoints[st.path_index];
            match st.phase {
                Phase::BounderAdvancing => {
                    if advance(&mut st.bounder, target, step) {
                        st.phase = Phase::OverwatcherJoining;
                    }
                }
                Phase::OverwatcherJoining => {
                    if advance(&mut st.overwatcher, target, step) {
                        st.trust_index = st.path_index;
                        if st.path_index + 1 == plan.waypoints.len() {
                            st.phase = Phase::Done;
                        } else {
                            st.path_index += 1;
                            st.phase = Phase::BounderAdvancing;
                        }
                    }
                }
                Phase::Done => unreachable!(),
            }
            record(&mut records, t, st, b);
        }
    }
    SimLog {
        records,
        status: teams
            .iter()
            .map(|t| (t.team.clone(), t.phase == Phase::Done))
            .collect(),
    }
}
