//! Finite automata over single-proposition letters.
//!
//! A [`Dfa`] keeps a *partial* transition function: a missing entry means the run dies.
//! Algorithms that need totality complete the automaton with an explicit sink
//! internally and drop it again before returning.

mod io;
mod ops;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use io::DfaJson;
pub use ops::{
    combine, determinize, language_equal, minimize, parallel_compose, project, CombineKind,
};

/// State index inside an automaton.
pub type StateId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("letter `{0}` is not in the alphabet")]
    UnknownLetter(String),
    #[error("`{0}` is not a valid letter (expected [a-zA-Z_][a-zA-Z0-9_]*)")]
    InvalidLetter(String),
    #[error("state {state} is out of range (automaton has {count} states)")]
    StateOutOfRange { state: usize, count: usize },
    #[error("nondeterministic transition from state {state} on `{letter}`")]
    Nondeterministic { state: usize, letter: String },
    #[error("unknown state name `{0}`")]
    UnknownState(String),
    #[error("{kind} expects {expected} operand(s), got {got}")]
    Arity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("intersection requires equal alphabets ({left:?} vs {right:?})")]
    AlphabetMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("malformed automaton JSON: {0}")]
    Json(String),
}

/// Returns true when `name` matches `[a-zA-Z_][a-zA-Z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Ordered, duplicate-free set of letters. Letters are addressed by their index in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Alphabet {
    letters: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(letters: I) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = letters.into_iter().map(Into::into).collect();
        if let Some(bad) = set.iter().find(|l| !is_identifier(l)) {
            return Err(AutomatonError::InvalidLetter(bad.clone()));
        }
        Ok(Alphabet {
            letters: set.into_iter().collect(),
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn letter(&self, index: usize) -> &str {
        &self.letters[index]
    }

    pub fn index_of(&self, letter: &str) -> Option<usize> {
        self.letters
            .binary_search_by(|l| l.as_str().cmp(letter))
            .ok()
    }

    pub fn contains(&self, letter: &str) -> bool {
        self.index_of(letter).is_some()
    }

    pub fn is_subset(&self, other: &Alphabet) -> bool {
        self.letters.iter().all(|l| other.contains(l))
    }

    pub fn is_disjoint(&self, other: &Alphabet) -> bool {
        self.letters.iter().all(|l| !other.contains(l))
    }

    pub fn union(&self, other: &Alphabet) -> Alphabet {
        let set: BTreeSet<&String> = self.letters.iter().chain(other.letters.iter()).collect();
        Alphabet {
            letters: set.into_iter().cloned().collect(),
        }
    }

    pub fn intersection(&self, other: &Alphabet) -> Alphabet {
        Alphabet {
            letters: self
                .letters
                .iter()
                .filter(|l| other.contains(l))
                .cloned()
                .collect(),
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.letters.join(", "))
    }
}

/// Deterministic finite automaton `(X, E, f, x0, XF)` with a partial transition function.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dfa {
    alphabet: Alphabet,
    /// `delta[state][letter]`
    delta: Vec<Vec<Option<StateId>>>,
    initial: StateId,
    accepting: Vec<bool>,
}

impl Dfa {
    /// Builds a DFA from named-letter transitions. Fails on unknown letters, out-of-range
    /// states, or two different targets for one `(state, letter)`.
    pub fn new<'a, I>(
        alphabet: Alphabet,
        num_states: usize,
        transitions: I,
        initial: StateId,
        accepting: &[StateId],
    ) -> Result<Self, AutomatonError>
    where
        I: IntoIterator<Item = (StateId, &'a str, StateId)>,
    {
        let check = |s: usize| {
            if s < num_states {
                Ok(s)
            } else {
                Err(AutomatonError::StateOutOfRange {
                    state: s,
                    count: num_states,
                })
            }
        };
        check(initial)?;
        let mut delta = vec![vec![None; alphabet.len()]; num_states];
        for (src, letter, dst) in transitions {
            check(src)?;
            check(dst)?;
            let l = alphabet
                .index_of(letter)
                .ok_or_else(|| AutomatonError::UnknownLetter(letter.to_string()))?;
            match delta[src][l] {
                Some(existing) if existing != dst => {
                    return Err(AutomatonError::Nondeterministic {
                        state: src,
                        letter: letter.to_string(),
                    })
                }
                _ => delta[src][l] = Some(dst),
            }
        }
        let mut acc = vec![false; num_states];
        for &s in accepting {
            acc[check(s)?] = true;
        }
        Ok(Dfa {
            alphabet,
            delta,
            initial,
            accepting: acc,
        })
    }

    /// Crate-internal constructor from an index-based table.
    pub(crate) fn from_parts(
        alphabet: Alphabet,
        delta: Vec<Vec<Option<StateId>>>,
        initial: StateId,
        accepting: Vec<bool>,
    ) -> Self {
        debug_assert_eq!(delta.len(), accepting.len());
        debug_assert!(initial < delta.len());
        debug_assert!(delta.iter().all(|row| row.len() == alphabet.len()));
        Dfa {
            alphabet,
            delta,
            initial,
            accepting,
        }
    }

    /// The one-state automaton with the empty language.
    pub fn empty_language(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        Dfa::from_parts(alphabet, vec![vec![None; n]], 0, vec![false])
    }

    /// The one-state automaton accepting exactly the empty word.
    pub fn epsilon(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        Dfa::from_parts(alphabet, vec![vec![None; n]], 0, vec![true])
    }

    /// Accepts exactly the given word. Letters must belong to `alphabet`.
    pub fn word<S: AsRef<str>>(alphabet: Alphabet, word: &[S]) -> Result<Self, AutomatonError> {
        let n = alphabet.len();
        let mut delta = vec![vec![None; n]; word.len() + 1];
        for (i, letter) in word.iter().enumerate() {
            let l = alphabet
                .index_of(letter.as_ref())
                .ok_or_else(|| AutomatonError::UnknownLetter(letter.as_ref().to_string()))?;
            delta[i][l] = Some(i + 1);
        }
        let mut accepting = vec![false; word.len() + 1];
        accepting[word.len()] = true;
        Ok(Dfa::from_parts(alphabet, delta, 0, accepting))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.delta.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, state: StateId) -> bool {
        self.accepting[state]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.accepting
            .iter()
            .enumerate()
            .filter_map(|(s, &a)| a.then_some(s))
    }

    /// Transition by letter index.
    pub fn next(&self, state: StateId, letter: usize) -> Option<StateId> {
        self.delta[state][letter]
    }

    /// Transition by letter name; `None` for undefined transitions and foreign letters.
    pub fn step(&self, state: StateId, letter: &str) -> Option<StateId> {
        self.alphabet
            .index_of(letter)
            .and_then(|l| self.delta[state][l])
    }

    /// All defined transitions as `(src, letter index, dst)`, ordered by source then letter.
    pub fn transitions(&self) -> impl Iterator<Item = (StateId, usize, StateId)> + '_ {
        self.delta.iter().enumerate().flat_map(|(s, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(l, t)| t.map(|d| (s, l, d)))
        })
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions().count()
    }

    /// `f(x0, word) ∈ XF`. Letters outside the alphabet are an error.
    pub fn accepts<S: AsRef<str>>(&self, word: &[S]) -> Result<bool, AutomatonError> {
        let mut state = self.initial;
        let mut alive = true;
        for letter in word {
            let l = self
                .alphabet
                .index_of(letter.as_ref())
                .ok_or_else(|| AutomatonError::UnknownLetter(letter.as_ref().to_string()))?;
            if alive {
                match self.delta[state][l] {
                    Some(next) => state = next,
                    None => alive = false,
                }
            }
        }
        Ok(alive && self.accepting[state])
    }

    /// Membership for a word given as letter indices.
    pub fn accepts_indices(&self, word: &[usize]) -> bool {
        let mut state = self.initial;
        for &l in word {
            match self.delta[state][l] {
                Some(next) => state = next,
                None => return false,
            }
        }
        self.accepting[state]
    }

    /// True when no word is accepted.
    pub fn is_empty_language(&self) -> bool {
        !self.reachable().iter().any(|&s| self.accepting[s])
    }

    /// States reachable from the initial state, in breadth-first order.
    pub fn reachable(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut order = vec![self.initial];
        seen[self.initial] = true;
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for t in self.delta[s].iter().flatten() {
                if !seen[*t] {
                    seen[*t] = true;
                    order.push(*t);
                }
            }
        }
        order
    }

    /// States from which some accepting state is reachable.
    pub fn coreachable(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (s, _, d) in self.transitions() {
            rev[d].push(s);
        }
        let mut good = self.accepting.clone();
        let mut stack: Vec<StateId> = self.accepting_states().collect();
        while let Some(s) = stack.pop() {
            for &p in &rev[s] {
                if !good[p] {
                    good[p] = true;
                    stack.push(p);
                }
            }
        }
        good
    }

    /// True when every state is reachable and co-reachable (the initial state is exempt
    /// from co-reachability so the empty language stays representable).
    pub fn is_trim(&self) -> bool {
        let co = self.coreachable();
        self.reachable().len() == self.num_states()
            && (0..self.num_states()).all(|s| co[s] || s == self.initial)
    }

    /// Removes unreachable and non-co-reachable states, keeping the initial state.
    pub fn trim(&self) -> Dfa {
        let co = self.coreachable();
        let keep: Vec<StateId> = self
            .reachable()
            .into_iter()
            .filter(|&s| co[s] || s == self.initial)
            .collect();
        let mut index = vec![None; self.num_states()];
        for (i, &s) in keep.iter().enumerate() {
            index[s] = Some(i);
        }
        let delta = keep
            .iter()
            .map(|&s| {
                self.delta[s]
                    .iter()
                    .map(|t| t.and_then(|d| index[d]))
                    .collect()
            })
            .collect();
        let accepting = keep.iter().map(|&s| self.accepting[s]).collect();
        Dfa::from_parts(self.alphabet.clone(), delta, 0, accepting)
    }

    /// Re-expresses the automaton over a superset alphabet; new letters have no transitions.
    pub fn with_alphabet(&self, alphabet: &Alphabet) -> Result<Dfa, AutomatonError> {
        if let Some(missing) = self
            .alphabet
            .letters()
            .iter()
            .find(|l| !alphabet.contains(l))
        {
            return Err(AutomatonError::UnknownLetter(missing.clone()));
        }
        let map: Vec<usize> = self
            .alphabet
            .letters()
            .iter()
            .map(|l| alphabet.index_of(l).expect("checked above"))
            .collect();
        let delta = self
            .delta
            .iter()
            .map(|row| {
                let mut out = vec![None; alphabet.len()];
                for (l, t) in row.iter().enumerate() {
                    out[map[l]] = *t;
                }
                out
            })
            .collect();
        Ok(Dfa::from_parts(
            alphabet.clone(),
            delta,
            self.initial,
            self.accepting.clone(),
        ))
    }

    /// Total version of the transition table: adds a rejecting sink when some entry is
    /// missing. Returns the table and the sink index, if one was added.
    pub(crate) fn completed(&self) -> (Vec<Vec<StateId>>, Vec<bool>, Option<StateId>) {
        let n = self.num_states();
        let needs_sink = self.delta.iter().any(|row| row.iter().any(Option::is_none));
        let sink = needs_sink.then_some(n);
        let mut table: Vec<Vec<StateId>> = self
            .delta
            .iter()
            .map(|row| row.iter().map(|t| t.unwrap_or(n)).collect())
            .collect();
        let mut accepting = self.accepting.clone();
        if needs_sink {
            table.push(vec![n; self.alphabet.len()]);
            accepting.push(false);
        }
        (table, accepting, sink)
    }

    /// Embeds the DFA as an NFA with the same states.
    pub fn to_nfa(&self) -> Nfa {
        let mut nfa = Nfa::new(self.alphabet.clone());
        nfa.add_states(self.num_states());
        for (s, l, d) in self.transitions() {
            nfa.add_transition(s, Some(l), d);
        }
        nfa.initial.insert(self.initial);
        nfa.accepting.extend(self.accepting_states());
        nfa
    }
}

/// Nondeterministic automaton with epsilon moves (`None` letter).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub alphabet: Alphabet,
    num_states: usize,
    pub transitions: Vec<(StateId, Option<usize>, StateId)>,
    pub initial: BTreeSet<StateId>,
    pub accepting: BTreeSet<StateId>,
}

impl Nfa {
    pub fn new(alphabet: Alphabet) -> Self {
        Nfa {
            alphabet,
            num_states: 0,
            transitions: Vec::new(),
            initial: BTreeSet::new(),
            accepting: BTreeSet::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn add_state(&mut self) -> StateId {
        self.num_states += 1;
        self.num_states - 1
    }

    /// Adds `count` states and returns the index of the first.
    pub fn add_states(&mut self, count: usize) -> StateId {
        let first = self.num_states;
        self.num_states += count;
        first
    }

    pub fn add_transition(&mut self, src: StateId, letter: Option<usize>, dst: StateId) {
        debug_assert!(src < self.num_states && dst < self.num_states);
        debug_assert!(letter.is_none_or(|l| l < self.alphabet.len()));
        self.transitions.push((src, letter, dst));
    }

    /// Validates endpoints and letters (used for NFAs assembled by hand).
    pub fn validate(&self) -> Result<(), AutomatonError> {
        let check = |s: usize| {
            if s < self.num_states {
                Ok(())
            } else {
                Err(AutomatonError::StateOutOfRange {
                    state: s,
                    count: self.num_states,
                })
            }
        };
        for &(s, l, d) in &self.transitions {
            check(s)?;
            check(d)?;
            if let Some(l) = l {
                if l >= self.alphabet.len() {
                    return Err(AutomatonError::UnknownLetter(format!("#{l}")));
                }
            }
        }
        self.initial.iter().try_for_each(|&s| check(s))?;
        self.accepting.iter().try_for_each(|&s| check(s))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn p1_loop_dfa() -> Dfa {
        // p1 p1* (p2 + p3): start, looping on p1, done.
        Dfa::new(
            Alphabet::new(["p1", "p2", "p3"]).unwrap(),
            3,
            [(0, "p1", 1), (1, "p1", 1), (1, "p2", 2), (1, "p3", 2)],
            0,
            &[2],
        )
        .unwrap()
    }

    #[test]
    fn p1_loop_dfa_membership() {
        let d = p1_loop_dfa();
        assert!(d.accepts(&["p1", "p1", "p2"]).unwrap());
        assert!(!d.accepts::<&str>(&[]).unwrap());
        assert!(!d.accepts(&["p2"]).unwrap());
        assert!(matches!(
            d.accepts(&["p9"]),
            Err(AutomatonError::UnknownLetter(_))
        ));
    }

    #[test]
    fn rejects_nondeterminism_and_bad_letters() {
        let ab = Alphabet::new(["a"]).unwrap();
        let err = Dfa::new(ab, 2, [(0, "a", 0), (0, "a", 1)], 0, &[1]).unwrap_err();
        assert!(matches!(err, AutomatonError::Nondeterministic { .. }));
        assert!(matches!(
            Alphabet::new(["1x"]),
            Err(AutomatonError::InvalidLetter(_))
        ));
    }

    #[test]
    fn alphabet_is_sorted_and_deduplicated() {
        let a = Alphabet::new(["c", "a", "b", "a"]).unwrap();
        assert_eq!(a.letters(), ["a", "b", "c"]);
        assert_eq!(a.index_of("b"), Some(1));
        let u = a.union(&Alphabet::new(["d", "a"]).unwrap());
        assert_eq!(u.letters(), ["a", "b", "c", "d"]);
    }

    #[test]
    fn trim_keeps_initial_of_empty_language() {
        let ab = Alphabet::new(["a"]).unwrap();
        let d = Dfa::new(ab, 2, [(0, "a", 1)], 0, &[]).unwrap();
        let t = d.trim();
        assert_eq!(t.num_states(), 1);
        assert!(t.is_empty_language());
        assert!(t.is_trim());
    }
}
