//! Task specification front end: regular expressions and syntactically co-safe LTL.
//!
//! Both languages share one AST ([`SpecAst`]) and compile to a minimal, trim [`Dfa`]
//! whose letters are single atomic propositions. Regular expressions go through
//! Thompson's construction; LTL formulas are expanded by formula progression. A
//! compiled LTL automaton accepts the *minimal* good prefixes of the formula: accepting
//! states have no outgoing transitions, so a run stops the moment the obligation is met.

mod ast;
mod parse;
mod progression;
mod thompson;

use thiserror::Error;

use crate::automata::{self, Alphabet, AutomatonError, Dfa};

pub use ast::{AstJson, SpecAst, SpecKind};
pub use parse::{parse_ltl, parse_re};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("empty specification")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("not syntactically co-safe at byte {offset}: `{operator}` {message}")]
    NotCoSafe {
        offset: usize,
        operator: String,
        message: String,
    },
    #[error("atom `{0}` is not in the alphabet")]
    UnknownAtom(String),
    #[error("specification mixes regular-expression and LTL operators")]
    MixedKinds,
    #[error("operator `{0}` is outside the compilable fragment")]
    Unsupported(&'static str),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Compiles a parsed specification to a minimal trim DFA over `alphabet`.
///
/// The language may be empty; callers check [`Dfa::is_empty_language`].
pub fn compile(spec: &SpecAst, alphabet: &Alphabet) -> Result<Dfa, SpecError> {
    for atom in spec.atoms() {
        if !alphabet.contains(&atom) {
            return Err(SpecError::UnknownAtom(atom));
        }
    }
    match spec.kind()? {
        SpecKind::Re => {
            let nfa = thompson::build(spec, alphabet)?;
            Ok(automata::minimize(&automata::determinize(&nfa)))
        }
        SpecKind::Ltl => {
            let dfa = progression::build(spec, alphabet)?;
            Ok(automata::minimize(&dfa))
        }
    }
}

/// Convenience: compiles over the alphabet of the specification's own atoms.
pub fn compile_own(spec: &SpecAst) -> Result<Dfa, SpecError> {
    let alphabet = Alphabet::new(spec.atoms())?;
    compile(spec, &alphabet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::language_equal;

    fn p123() -> Alphabet {
        Alphabet::new(["p1", "p2", "p3"]).unwrap()
    }

    #[test]
    fn p1_loop_regular_expression() {
        let d = compile(&parse_re("p1 p1* (p2 + p3)").unwrap(), &p123()).unwrap();
        assert_eq!(d, crate::automata::tests::p1_loop_dfa());
    }

    #[test]
    fn p1_loop_ltl_matches_regular_expression() {
        let re = compile(&parse_re("p1 p1* (p2 + p3)").unwrap(), &p123()).unwrap();
        let ltl = compile(&parse_ltl("p1 & X(p1 U (p2 | p3))").unwrap(), &p123()).unwrap();
        assert!(language_equal(&re, &ltl));
        assert_eq!(re, ltl);
    }

    #[test]
    fn epsilon_compiles_to_empty_word() {
        let a = Alphabet::new(["a"]).unwrap();
        let d = compile(&SpecAst::Epsilon, &a).unwrap();
        assert!(d.accepts::<&str>(&[]).unwrap());
        assert!(!d.accepts(&["a"]).unwrap());
        assert_eq!(d.num_states(), 1);
    }

    #[test]
    fn unknown_atoms_are_rejected() {
        let err = compile(&parse_re("a b").unwrap(), &Alphabet::new(["a"]).unwrap());
        assert_eq!(err, Err(SpecError::UnknownAtom("b".into())));
    }

    #[test]
    fn eventually_accepts_minimal_prefixes() {
        let a = Alphabet::new(["p", "q"]).unwrap();
        let d = compile(&parse_ltl("F p").unwrap(), &a).unwrap();
        assert!(d.accepts(&["p"]).unwrap());
        assert!(d.accepts(&["q", "q", "p"]).unwrap());
        assert!(!d.accepts(&["p", "q"]).unwrap());
        assert!(!d.accepts::<&str>(&[]).unwrap());
    }

    #[test]
    fn eventually_always_is_normalized() {
        let a = Alphabet::new(["p", "q"]).unwrap();
        let fg = compile(&parse_ltl("F G p").unwrap(), &a).unwrap();
        let f = compile(&parse_ltl("F p").unwrap(), &a).unwrap();
        assert!(language_equal(&fg, &f));
    }

    #[test]
    fn unsatisfiable_ltl_yields_flagged_empty_language() {
        let a = Alphabet::new(["p", "q"]).unwrap();
        let d = compile(&parse_ltl("p & q").unwrap(), &a).unwrap();
        assert!(d.is_empty_language());
    }

    #[test]
    fn negated_atoms_use_the_whole_alphabet() {
        let a = Alphabet::new(["p", "q", "r"]).unwrap();
        let d = compile(&parse_ltl("!p U q").unwrap(), &a).unwrap();
        assert!(d.accepts(&["r", "r", "q"]).unwrap());
        assert!(!d.accepts(&["p", "q"]).unwrap());
    }

    #[test]
    fn mixed_trees_are_rejected() {
        let mixed = SpecAst::Concat(
            Box::new(SpecAst::Atom("a".into())),
            Box::new(SpecAst::Eventually(Box::new(SpecAst::Atom("a".into())))),
        );
        assert_eq!(
            compile(&mixed, &Alphabet::new(["a"]).unwrap()),
            Err(SpecError::MixedKinds)
        );
    }
}
