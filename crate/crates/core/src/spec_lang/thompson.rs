//! Thompson's construction: one fragment with a single entry and a single exit per node.

use super::{SpecAst, SpecError};
use crate::automata::{Alphabet, Nfa, StateId};

pub(super) fn build(ast: &SpecAst, alphabet: &Alphabet) -> Result<Nfa, SpecError> {
    let mut nfa = Nfa::new(alphabet.clone());
    let (entry, exit) = fragment(&mut nfa, ast, alphabet)?;
    nfa.initial.insert(entry);
    nfa.accepting.insert(exit);
    Ok(nfa)
}

fn fragment(
    nfa: &mut Nfa,
    ast: &SpecAst,
    alphabet: &Alphabet,
) -> Result<(StateId, StateId), SpecError> {
    Ok(match ast {
        SpecAst::Atom(name) => {
            let letter = alphabet
                .index_of(name)
                .ok_or_else(|| SpecError::UnknownAtom(name.clone()))?;
            let (i, o) = (nfa.add_state(), nfa.add_state());
            nfa.add_transition(i, Some(letter), o);
            (i, o)
        }
        SpecAst::Epsilon => {
            let (i, o) = (nfa.add_state(), nfa.add_state());
            nfa.add_transition(i, None, o);
            (i, o)
        }
        SpecAst::Concat(a, b) => {
            let (ai, ao) = fragment(nfa, a, alphabet)?;
            let (bi, bo) = fragment(nfa, b, alphabet)?;
            nfa.add_transition(ao, None, bi);
            (ai, bo)
        }
        SpecAst::Union(a, b) => {
            let (i, o) = (nfa.add_state(), nfa.add_state());
            for branch in [a, b] {
                let (bi, bo) = fragment(nfa, branch, alphabet)?;
                nfa.add_transition(i, None, bi);
                nfa.add_transition(bo, None, o);
            }
            (i, o)
        }
        SpecAst::Star(a) => {
            let (i, o) = (nfa.add_state(), nfa.add_state());
            let (ai, ao) = fragment(nfa, a, alphabet)?;
            nfa.add_transition(i, None, ai);
            nfa.add_transition(i, None, o);
            nfa.add_transition(ao, None, ai);
            nfa.add_transition(ao, None, o);
            (i, o)
        }
        other => return Err(SpecError::Unsupported(other.kind_name())),
    })
}
