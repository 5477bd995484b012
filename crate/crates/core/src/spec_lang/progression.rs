//! Co-safe LTL to DFA by formula progression.
//!
//! A state is the residual obligation in disjunctive normal form: a set of clauses, each
//! a set of temporal or atomic obligations. Reading a letter progresses every obligation
//! one step. The empty clause means "satisfied", so a state is accepting exactly when it
//! contains the empty clause; after subsumption that state is `{∅}`. Accepting states get
//! no outgoing transitions and the empty DNF (`false`) is dropped, so the automaton
//! accepts the minimal good prefixes.

use std::collections::{BTreeMap, BTreeSet};

use super::{SpecAst, SpecError};
use crate::automata::{Alphabet, Dfa};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Ltl {
    True,
    False,
    Atom(usize),
    NotAtom(usize),
    And(Box<Ltl>, Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    Next(Box<Ltl>),
    Until(Box<Ltl>, Box<Ltl>),
    Eventually(Box<Ltl>),
}

type Clause = BTreeSet<Ltl>;
type Dnf = BTreeSet<Clause>;

fn lower(ast: &SpecAst, alphabet: &Alphabet) -> Result<Ltl, SpecError> {
    let atom = |name: &str| {
        alphabet
            .index_of(name)
            .ok_or_else(|| SpecError::UnknownAtom(name.to_string()))
    };
    let b = |a: &SpecAst| lower(a, alphabet).map(Box::new);
    Ok(match ast {
        SpecAst::True => Ltl::True,
        SpecAst::Atom(n) => Ltl::Atom(atom(n)?),
        SpecAst::Not(inner) => match &**inner {
            SpecAst::Atom(n) => Ltl::NotAtom(atom(n)?),
            _ => {
                return Err(SpecError::NotCoSafe {
                    offset: 0,
                    operator: "!".into(),
                    message: "negation above a non-atom".into(),
                })
            }
        },
        SpecAst::And(x, y) => Ltl::And(b(x)?, b(y)?),
        SpecAst::Or(x, y) => Ltl::Or(b(x)?, b(y)?),
        SpecAst::Next(x) => Ltl::Next(b(x)?),
        SpecAst::Until(x, y) => Ltl::Until(b(x)?, b(y)?),
        SpecAst::Eventually(x) => Ltl::Eventually(b(x)?),
        SpecAst::Always(_) => {
            return Err(SpecError::NotCoSafe {
                offset: 0,
                operator: "G".into(),
                message: "always is only accepted as F G <atom>".into(),
            })
        }
        other => return Err(SpecError::Unsupported(other.kind_name())),
    })
}

fn true_dnf() -> Dnf {
    BTreeSet::from([BTreeSet::new()])
}

/// Drops clauses that are strict supersets of another clause.
fn subsume(dnf: Dnf) -> Dnf {
    let clauses: Vec<Clause> = dnf.into_iter().collect();
    clauses
        .iter()
        .filter(|c| !clauses.iter().any(|o| o != *c && o.is_subset(c)))
        .cloned()
        .collect()
}

fn dnf_and(a: &Dnf, b: &Dnf) -> Dnf {
    let mut out = Dnf::new();
    for x in a {
        for y in b {
            out.insert(x.union(y).cloned().collect());
        }
    }
    subsume(out)
}

fn dnf(f: &Ltl) -> Dnf {
    match f {
        Ltl::True => true_dnf(),
        Ltl::False => Dnf::new(),
        Ltl::And(a, b) => dnf_and(&dnf(a), &dnf(b)),
        Ltl::Or(a, b) => subsume(dnf(a).union(&dnf(b)).cloned().collect()),
        other => BTreeSet::from([BTreeSet::from([other.clone()])]),
    }
}

/// One-letter progression of a formula.
fn progress(f: &Ltl, letter: usize) -> Ltl {
    match f {
        Ltl::True => Ltl::True,
        Ltl::False => Ltl::False,
        Ltl::Atom(p) => bool_ltl(*p == letter),
        Ltl::NotAtom(p) => bool_ltl(*p != letter),
        Ltl::And(a, b) => Ltl::And(Box::new(progress(a, letter)), Box::new(progress(b, letter))),
        Ltl::Or(a, b) => Ltl::Or(Box::new(progress(a, letter)), Box::new(progress(b, letter))),
        Ltl::Next(a) => (**a).clone(),
        Ltl::Until(a, b) => Ltl::Or(
            Box::new(progress(b, letter)),
            Box::new(Ltl::And(Box::new(progress(a, letter)), Box::new(f.clone()))),
        ),
        Ltl::Eventually(a) => Ltl::Or(Box::new(progress(a, letter)), Box::new(f.clone())),
    }
}

fn bool_ltl(b: bool) -> Ltl {
    if b {
        Ltl::True
    } else {
        Ltl::False
    }
}

fn progress_dnf(state: &Dnf, letter: usize) -> Dnf {
    let mut out = Dnf::new();
    for clause in state {
        let mut acc = true_dnf();
        for obligation in clause {
            acc = dnf_and(&acc, &dnf(&progress(obligation, letter)));
            if acc.is_empty() {
                break;
            }
        }
        out.extend(acc);
    }
    subsume(out)
}

pub(super) fn build(ast: &SpecAst, alphabet: &Alphabet) -> Result<Dfa, SpecError> {
    let formula = lower(ast, alphabet)?;
    let start = dnf(&formula);
    if start.is_empty() {
        return Ok(Dfa::empty_language(alphabet.clone()));
    }
    let accepting_state = true_dnf();
    let mut index: BTreeMap<Dnf, usize> = BTreeMap::new();
    let mut states = vec![start.clone()];
    index.insert(start, 0);
    let mut delta = Vec::new();
    let mut head = 0;
    while head < states.len() {
        let current = states[head].clone();
        head += 1;
        let mut row = vec![None; alphabet.len()];
        if current != accepting_state {
            for (letter, slot) in row.iter_mut().enumerate() {
                let next = progress_dnf(&current, letter);
                if next.is_empty() {
                    continue;
                }
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        states.push(next.clone());
                        index.insert(next, states.len() - 1);
                        states.len() - 1
                    }
                };
                *slot = Some(id);
            }
        }
        delta.push(row);
    }
    let accepting = states.iter().map(|s| *s == accepting_state).collect();
    Ok(Dfa::from_parts(alphabet.clone(), delta, 0, accepting).trim())
}
