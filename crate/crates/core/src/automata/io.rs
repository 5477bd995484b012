use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Alphabet, AutomatonError, Dfa};

/// On-disk automaton schema:
/// `{states:[names], alphabet:[letters], transitions:[[src,letter,dst]], initial, accepting:[...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DfaJson {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub transitions: Vec<(String, String, String)>,
    pub initial: String,
    pub accepting: Vec<String>,
}

impl From<&Dfa> for DfaJson {
    fn from(d: &Dfa) -> Self {
        let name = |s: usize| s.to_string();
        DfaJson {
            states: (0..d.num_states()).map(name).collect(),
            alphabet: d.alphabet().letters().to_vec(),
            transitions: d
                .transitions()
                .map(|(s, l, t)| (name(s), d.alphabet().letter(l).to_string(), name(t)))
                .collect(),
            initial: name(d.initial()),
            accepting: d.accepting_states().map(name).collect(),
        }
    }
}

impl TryFrom<&DfaJson> for Dfa {
    type Error = AutomatonError;

    fn try_from(j: &DfaJson) -> Result<Self, Self::Error> {
        let alphabet = Alphabet::new(j.alphabet.iter().cloned())?;
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (i, s) in j.states.iter().enumerate() {
            if index.insert(s.as_str(), i).is_some() {
                return Err(AutomatonError::Json(format!("duplicate state `{s}`")));
            }
        }
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| AutomatonError::UnknownState(s.to_string()))
        };
        let transitions = j
            .transitions
            .iter()
            .map(|(s, l, t)| Ok((lookup(s)?, l.as_str(), lookup(t)?)))
            .collect::<Result<Vec<_>, AutomatonError>>()?;
        let accepting = j
            .accepting
            .iter()
            .map(|s| lookup(s))
            .collect::<Result<Vec<_>, _>>()?;
        Dfa::new(
            alphabet,
            j.states.len(),
            transitions,
            lookup(&j.initial)?,
            &accepting,
        )
    }
}

impl Dfa {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DfaJson::from(self)).expect("automaton JSON is serializable")
    }

    pub fn from_json(text: &str) -> Result<Dfa, AutomatonError> {
        let j: DfaJson =
            serde_json::from_str(text).map_err(|e| AutomatonError::Json(e.to_string()))?;
        Dfa::try_from(&j)
    }

    /// Graphviz rendering: circles for states, double circles for accepting states and an
    /// entry arrow on the initial state. Parallel edges are merged into one label.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        writeln!(out, "digraph {name} {{").unwrap();
        writeln!(out, "  rankdir=LR;").unwrap();
        writeln!(out, "  node [shape=circle];").unwrap();
        writeln!(out, "  __start [shape=point];").unwrap();
        for s in 0..self.num_states() {
            let shape = if self.is_accepting(s) {
                "doublecircle"
            } else {
                "circle"
            };
            writeln!(out, "  {s} [shape={shape}];").unwrap();
        }
        writeln!(out, "  __start -> {};", self.initial()).unwrap();
        let mut grouped: Vec<((usize, usize), Vec<&str>)> = Vec::new();
        for (s, l, t) in self.transitions() {
            let letter = self.alphabet().letter(l);
            match grouped.iter_mut().find(|(k, _)| *k == (s, t)) {
                Some((_, labels)) => labels.push(letter),
                None => grouped.push(((s, t), vec![letter])),
            }
        }
        for ((s, t), labels) in grouped {
            writeln!(out, "  {s} -> {t} [label=\"{}\"];", labels.join(", ")).unwrap();
        }
        out.push_str("}\n");
        out
    }
}
