//! Parallel decomposition of a global task DFA into subtask automata.
//!
//! Iterated bisection with a certificate: for each candidate split of the alphabet, the
//! global automaton is projected onto both blocks and the split is accepted when the
//! parallel composition of the projections is language-equal to the original. Accepted
//! parts are split again until no candidate succeeds.
//!
//! Candidates are tried in a fixed order. Disjoint bipartitions come first, smallest
//! block first and lexicographically within a size. When no disjoint split exists the
//! search falls back to covers whose blocks share letters (shared letters synchronize in
//! the composition), fewest shared letters first.

use std::fmt::Write;

use thiserror::Error;

use crate::automata::{language_equal, parallel_compose, project, Alphabet, Dfa};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompError {
    #[error("part alphabets overlap on `{0}`")]
    Overlap(String),
    #[error("part alphabets do not cover the global alphabet (missing `{0}`)")]
    Uncovered(String),
    #[error("part letter `{0}` is not in the global alphabet")]
    Foreign(String),
}

/// Result of [`decompose`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub parts: Vec<Dfa>,
    /// Alphabet block of each part, in the same order as `parts`.
    pub partition: Vec<Alphabet>,
    /// True when the composition of `parts` was checked language-equal to the input.
    pub verified: bool,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// True when some letter belongs to more than one block.
    pub fn has_shared_letters(&self) -> bool {
        self.partition
            .iter()
            .enumerate()
            .any(|(i, a)| self.partition[i + 1..].iter().any(|b| !a.is_disjoint(b)))
    }

    /// Human-readable certificate summary.
    pub fn report(&self, global: &Dfa) -> String {
        let mut out = String::new();
        writeln!(out, "global alphabet: {}", global.alphabet()).unwrap();
        writeln!(out, "global states: {}", global.num_states()).unwrap();
        writeln!(out, "parts: {}", self.parts.len()).unwrap();
        for (i, (p, block)) in self.parts.iter().zip(&self.partition).enumerate() {
            writeln!(
                out,
                "  part {}: alphabet {} states {} transitions {}",
                i + 1,
                block,
                p.num_states(),
                p.num_transitions()
            )
            .unwrap();
        }
        writeln!(out, "shared letters: {}", self.has_shared_letters()).unwrap();
        let recheck = language_equal(&parallel_compose(&self.parts), global);
        writeln!(out, "composition language-equal to global: {recheck}").unwrap();
        writeln!(out, "verified: {}", self.verified && recheck).unwrap();
        out
    }
}

/// Candidate two-block covers of `alphabet`, in search order.
fn candidate_splits(alphabet: &Alphabet) -> Vec<(Alphabet, Alphabet)> {
    let letters = alphabet.letters();
    let n = letters.len();
    if !(2..=16).contains(&n) {
        return Vec::new();
    }
    let subset = |mask: u32| -> Vec<String> {
        (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| letters[i].clone())
            .collect()
    };
    let full = (1u32 << n) - 1;

    let mut disjoint: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for mask in 1..full {
        let rest = full & !mask;
        let (a, b) = (subset(mask), subset(rest));
        // Each unordered pair once: smaller block first; on equal sizes the block holding
        // the lexicographically smaller letter list comes first.
        if a.len() < b.len() || (a.len() == b.len() && a < b) {
            disjoint.push((a, b));
        }
    }
    disjoint.sort_by(|x, y| (x.0.len(), &x.0).cmp(&(y.0.len(), &y.0)));

    let mut shared: Vec<(usize, Vec<String>, Vec<String>)> = Vec::new();
    for ma in 1..full {
        for mb in 1..full {
            if ma | mb != full || ma & mb == 0 {
                continue;
            }
            let (a, b) = (subset(ma), subset(mb));
            if a.len() < b.len() || (a.len() == b.len() && a < b) {
                shared.push(((ma & mb).count_ones() as usize, a, b));
            }
        }
    }
    shared.sort_by(|x, y| (x.0, x.1.len(), &x.1, &x.2).cmp(&(y.0, y.1.len(), &y.1, &y.2)));

    let to_alpha = |v: Vec<String>| Alphabet::new(v).expect("letters come from an alphabet");
    disjoint
        .into_iter()
        .map(|(a, b)| (to_alpha(a), to_alpha(b)))
        .chain(shared.into_iter().map(|(_, a, b)| (to_alpha(a), to_alpha(b))))
        .collect()
}

/// First candidate split whose projections recompose to `g`.
fn split_once(g: &Dfa) -> Option<[(Dfa, Alphabet); 2]> {
    for (a, b) in candidate_splits(g.alphabet()) {
        let pa = project(g, &a);
        let pb = project(g, &b);
        if language_equal(&parallel_compose(&[pa.clone(), pb.clone()]), g) {
            return Some([(pa, a), (pb, b)]);
        }
    }
    None
}

fn decompose_into(g: &Dfa, out: &mut Vec<(Dfa, Alphabet)>) {
    match split_once(g) {
        Some(halves) => {
            for (part, _) in halves {
                decompose_into(&part, out);
            }
        }
        None => out.push((g.clone(), g.alphabet().clone())),
    }
}

/// Splits `g` into parallel subtask automata. Returns `{g}` when no split exists. Parts
/// are ordered by their smallest letter.
pub fn decompose(g: &Dfa) -> Decomposition {
    let mut leaves = Vec::new();
    decompose_into(g, &mut leaves);
    leaves.sort_by(|x, y| x.1.letters().cmp(y.1.letters()));
    let (parts, partition): (Vec<Dfa>, Vec<Alphabet>) = leaves.into_iter().unzip();
    let verified = parts.len() == 1 || language_equal(&parallel_compose(&parts), g);
    Decomposition {
        parts,
        partition,
        verified,
    }
}

fn check_cover(g: &Dfa, parts: &[Dfa], allow_shared: bool) -> Result<bool, DecompError> {
    for (i, p) in parts.iter().enumerate() {
        for letter in p.alphabet().letters() {
            if !g.alphabet().contains(letter) {
                return Err(DecompError::Foreign(letter.clone()));
            }
            if !allow_shared && parts[i + 1..].iter().any(|q| q.alphabet().contains(letter)) {
                return Err(DecompError::Overlap(letter.clone()));
            }
        }
    }
    for letter in g.alphabet().letters() {
        if !parts.iter().any(|p| p.alphabet().contains(letter)) {
            return Err(DecompError::Uncovered(letter.clone()));
        }
    }
    Ok(language_equal(&parallel_compose(parts), g))
}

/// True iff the parts, whose alphabets must partition `g`'s alphabet, recompose to `g`.
pub fn check_decomposition(g: &Dfa, parts: &[Dfa]) -> Result<bool, DecompError> {
    check_cover(g, parts, false)
}

/// Like [`check_decomposition`] but admits blocks that share (synchronizing) letters.
pub fn check_cover_decomposition(g: &Dfa, parts: &[Dfa]) -> Result<bool, DecompError> {
    check_cover(g, parts, true)
}

/// Checks a [`Decomposition`] with the rule matching its block structure.
pub fn certify(g: &Dfa, d: &Decomposition) -> Result<bool, DecompError> {
    if d.has_shared_letters() {
        check_cover_decomposition(g, &d.parts)
    } else {
        check_decomposition(g, &d.parts)
    }
}
