//! Team capability MDPs, their product with a subtask automaton, grid motion MDPs and
//! the composed task-and-motion planning MDP.

mod capability;
mod motion;
mod planning;
mod product;

use thiserror::Error;

pub use capability::{validate_capability_mdp, CapabilityMdp, RawCapability, RawState, RawTransition};
pub use motion::{build_motion_mdp, MotionAction, MotionMdp};
pub use planning::{compose_planning_mdp, JointAction, PlanningMdp, PlanningState};
pub use product::{product_task, ProductMdp};

/// Tolerance on row sums.
pub const ROW_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("duplicate transition row ({state}, {action})")]
    DuplicateRow { state: String, action: String },
    #[error("row ({state}, {action}) sums to {sum} instead of 1")]
    RowSum {
        state: String,
        action: String,
        sum: f64,
    },
    #[error("row ({state}, {action}) has probability {p} outside (0, 1]")]
    Probability {
        state: String,
        action: String,
        p: f64,
    },
    #[error("row ({state}, {action}) has non-positive weight {weight}")]
    Weight {
        state: String,
        action: String,
        weight: f64,
    },
    #[error("label `{0}` is not a declared proposition")]
    UnknownLabel(String),
    #[error("invalid proposition set: {0}")]
    Propositions(String),
    #[error("subtask letter `{0}` is not among the team's propositions")]
    Prerequisite(String),
    #[error("row ({state}, {action}) needs a failure state to absorb task-inconsistent mass")]
    NoFailureState { state: String, action: String },
    #[error("fort `{fort}` at ({row}, {col}) is not traversable")]
    FortCell { fort: String, row: usize, col: usize },
    #[error("slip {0} outside [0, 0.2]")]
    Slip(f64),
    #[error("start cell ({row}, {col}) is not traversable")]
    StartCell { row: usize, col: usize },
    #[error("invalid JSON: {0}")]
    Json(String),
}

/// Sum of a sparse distribution.
pub(crate) fn row_sum(outcomes: &[(usize, f64)]) -> f64 {
    outcomes.iter().map(|(_, p)| p).sum()
}

/// Adds `p` to `target`'s entry, keeping first-seen order.
pub(crate) fn accumulate(outcomes: &mut Vec<(usize, f64)>, target: usize, p: f64) {
    match outcomes.iter_mut().find(|(t, _)| *t == target) {
        Some(entry) => entry.1 += p,
        None => outcomes.push((target, p)),
    }
}
