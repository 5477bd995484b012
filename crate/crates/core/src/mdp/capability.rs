use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{row_sum, MdpError, ROW_TOL};
use crate::automata::Alphabet;

/// Capability MDP as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCapability {
    pub states: Vec<RawState>,
    pub actions: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub failure: Option<String>,
    pub propositions: Vec<String>,
    pub transitions: Vec<RawTransition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawState {
    pub name: String,
    /// `None` is the idle label ε.
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTransition {
    pub from: String,
    pub action: String,
    pub to: Vec<(String, f64)>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

/// One action row of an MDP state.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRow {
    pub action: usize,
    pub outcomes: Vec<(usize, f64)>,
    pub weight: f64,
}

/// Validated team capability MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityMdp {
    pub states: Vec<String>,
    pub labels: Vec<Option<String>>,
    pub actions: Vec<String>,
    pub initial: usize,
    pub failure: Option<usize>,
    pub propositions: Alphabet,
    /// Per state, rows sorted by action index.
    pub rows: Vec<Vec<TaskRow>>,
}

impl CapabilityMdp {
    pub fn from_raw(raw: &RawCapability) -> Result<Self, MdpError> {
        let propositions = Alphabet::new(raw.propositions.iter().cloned())
            .map_err(|e| MdpError::Propositions(e.to_string()))?;
        let mut state_index = BTreeMap::new();
        for (i, s) in raw.states.iter().enumerate() {
            if state_index.insert(s.name.clone(), i).is_some() {
                return Err(MdpError::DuplicateState(s.name.clone()));
            }
            if let Some(l) = &s.label {
                if !propositions.contains(l) {
                    return Err(MdpError::UnknownLabel(l.clone()));
                }
            }
        }
        let mut action_index = BTreeMap::new();
        for (i, a) in raw.actions.iter().enumerate() {
            if action_index.insert(a.clone(), i).is_some() {
                return Err(MdpError::DuplicateAction(a.clone()));
            }
        }
        let state = |name: &str| {
            state_index
                .get(name)
                .copied()
                .ok_or_else(|| MdpError::UnknownState(name.to_string()))
        };
        let initial = state(&raw.initial)?;
        let failure = raw.failure.as_deref().map(state).transpose()?;

        let mut rows: Vec<Vec<TaskRow>> = vec![Vec::new(); raw.states.len()];
        for t in &raw.transitions {
            let from = state(&t.from)?;
            let action = *action_index
                .get(&t.action)
                .ok_or_else(|| MdpError::UnknownAction(t.action.clone()))?;
            if rows[from].iter().any(|r| r.action == action) {
                return Err(MdpError::DuplicateRow {
                    state: t.from.clone(),
                    action: t.action.clone(),
                });
            }
            if !(t.weight > 0.0 && t.weight.is_finite()) {
                return Err(MdpError::Weight {
                    state: t.from.clone(),
                    action: t.action.clone(),
                    weight: t.weight,
                });
            }
            let mut outcomes = Vec::with_capacity(t.to.len());
            for (name, p) in &t.to {
                if !(*p > 0.0 && *p <= 1.0 + ROW_TOL) {
                    return Err(MdpError::Probability {
                        state: t.from.clone(),
                        action: t.action.clone(),
                        p: *p,
                    });
                }
                super::accumulate(&mut outcomes, state(name)?, *p);
            }
            let sum = row_sum(&outcomes);
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(MdpError::RowSum {
                    state: t.from.clone(),
                    action: t.action.clone(),
                    sum,
                });
            }
            rows[from].push(TaskRow {
                action,
                outcomes,
                weight: t.weight,
            });
        }
        for r in &mut rows {
            r.sort_by_key(|row| row.action);
        }
        Ok(CapabilityMdp {
            states: raw.states.iter().map(|s| s.name.clone()).collect(),
            labels: raw.states.iter().map(|s| s.label.clone()).collect(),
            actions: raw.actions.clone(),
            initial,
            failure,
            propositions,
            rows,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        let raw: RawCapability =
            serde_json::from_str(text).map_err(|e| MdpError::Json(e.to_string()))?;
        Self::from_raw(&raw)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Every letter of a subtask alphabet must be one of the team's propositions.
    pub fn check_prerequisite(&self, subtask: &Alphabet) -> Result<(), MdpError> {
        match subtask
            .letters()
            .iter()
            .find(|l| !self.propositions.contains(l))
        {
            Some(l) => Err(MdpError::Prerequisite(l.clone())),
            None => Ok(()),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flatten()
            .map(|r| row_sum(&r.outcomes))
            .collect()
    }

    pub fn to_raw(&self) -> RawCapability {
        RawCapability {
            states: self
                .states
                .iter()
                .zip(&self.labels)
                .map(|(name, label)| RawState {
                    name: name.clone(),
                    label: label.clone(),
                })
                .collect(),
            actions: self.actions.clone(),
            initial: self.states[self.initial].clone(),
            failure: self.failure.map(|f| self.states[f].clone()),
            propositions: self.propositions.letters().to_vec(),
            transitions: self
                .rows
                .iter()
                .enumerate()
                .flat_map(|(s, rows)| {
                    rows.iter().map(move |r| RawTransition {
                        from: self.states[s].clone(),
                        action: self.actions[r.action].clone(),
                        to: r
                            .outcomes
                            .iter()
                            .map(|&(t, p)| (self.states[t].clone(), p))
                            .collect(),
                        weight: r.weight,
                    })
                })
                .collect(),
        }
    }
}

/// Parses and validates a capability MDP against the subtask alphabets assigned to it.
pub fn validate_capability_mdp(
    raw: &RawCapability,
    subtasks: &[Alphabet],
) -> Result<CapabilityMdp, MdpError> {
    let te = CapabilityMdp::from_raw(raw)?;
    for a in subtasks {
        te.check_prerequisite(a)?;
    }
    Ok(te)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Three exploring states, an idle state and a failure state. From idle or any
    /// exploring state the team can head for any fort, succeeding with probability 0.9.
    pub(crate) fn three_fort_team() -> RawCapability {
        let forts = ["s1", "s2", "s3"];
        let mut transitions = Vec::new();
        for from in ["s_eps", "s1", "s2", "s3"] {
            for (i, target) in forts.iter().enumerate() {
                transitions.push(RawTransition {
                    from: from.into(),
                    action: format!("go{}", i + 1),
                    to: vec![(target.to_string(), 0.9), ("s_f".into(), 0.1)],
                    weight: 1.0,
                });
            }
            transitions.push(RawTransition {
                from: from.into(),
                action: "roam".into(),
                to: vec![("s_eps".into(), 1.0)],
                weight: 0.5,
            });
        }
        transitions.push(RawTransition {
            from: "s_f".into(),
            action: "roam".into(),
            to: vec![("s_eps".into(), 1.0)],
            weight: 1.0,
        });
        RawCapability {
            states: ["s1", "s2", "s3", "s_eps", "s_f"]
                .iter()
                .zip([Some("p1"), Some("p2"), Some("p3"), None, Some("p_f")])
                .map(|(n, l)| RawState {
                    name: n.to_string(),
                    label: l.map(String::from),
                })
                .collect(),
            actions: vec!["go1".into(), "go2".into(), "go3".into(), "roam".into()],
            initial: "s_eps".into(),
            failure: Some("s_f".into()),
            propositions: vec!["p1".into(), "p2".into(), "p3".into(), "p_f".into()],
            transitions,
        }
    }

    #[test]
    fn five_state_team_is_valid() {
        let raw = three_fort_team();
        let te = validate_capability_mdp(&raw, &[Alphabet::new(["p1", "p2", "p3"]).unwrap()]).unwrap();
        assert_eq!(te.num_states(), 5);
        assert_eq!(te.initial, 3);
        assert_eq!(te.failure, Some(4));
        assert!(te.row_sums().iter().all(|s| (s - 1.0).abs() <= ROW_TOL));
        assert_eq!(CapabilityMdp::from_raw(&te.to_raw()).unwrap(), te);
    }

    #[test]
    fn one_idle_state() {
        let te = CapabilityMdp::from_json(
            r#"{"states":[{"name":"s"}],"actions":["wait"],"initial":"s","propositions":[],
                "transitions":[{"from":"s","action":"wait","to":[["s",1.0]]}]}"#,
        )
        .unwrap();
        assert_eq!(te.labels, vec![None]);
        assert_eq!(te.rows[0][0].weight, 1.0);
    }

    #[test]
    fn short_row_names_the_pair() {
        let mut raw = three_fort_team();
        raw.transitions[0].to[1].1 = 0.0999;
        raw.transitions[0].to[0].1 = 0.8;
        let err = CapabilityMdp::from_raw(&raw).unwrap_err();
        match err {
            MdpError::RowSum { state, action, sum } => {
                assert_eq!((state.as_str(), action.as_str()), ("s_eps", "go1"));
                assert!((sum - 0.8999).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_inputs() {
        let mut raw = three_fort_team();
        raw.states[0].label = Some("p9".into());
        assert_eq!(
            CapabilityMdp::from_raw(&raw),
            Err(MdpError::UnknownLabel("p9".into()))
        );
        let raw = three_fort_team();
        assert_eq!(
            validate_capability_mdp(&raw, &[Alphabet::new(["p1", "p4"]).unwrap()]),
            Err(MdpError::Prerequisite("p4".into()))
        );
        let mut raw = three_fort_team();
        raw.transitions[0].weight = 0.0;
        assert!(matches!(CapabilityMdp::from_raw(&raw), Err(MdpError::Weight { .. })));
        let mut raw = three_fort_team();
        raw.transitions.push(raw.transitions[0].clone());
        assert!(matches!(
            CapabilityMdp::from_raw(&raw),
            Err(MdpError::DuplicateRow { .. })
        ));
        let mut raw = three_fort_team();
        raw.initial = "nowhere".into();
        assert_eq!(
            CapabilityMdp::from_raw(&raw),
            Err(MdpError::UnknownState("nowhere".into()))
        );
        assert!(matches!(CapabilityMdp::from_json("{"), Err(MdpError::Json(_))));
    }
}
