use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Alphabet, AutomatonError, Dfa, Nfa, StateId};

fn epsilon_closure(eps: &[Vec<StateId>], seeds: impl IntoIterator<Item = StateId>) -> BTreeSet<StateId> {
    let mut closure = BTreeSet::new();
    let mut stack: Vec<StateId> = Vec::new();
    for s in seeds {
        if closure.insert(s) {
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        for &t in &eps[s] {
            if closure.insert(t) {
                stack.push(t);
            }
        }
    }
    closure
}

/// Subset construction. DFA states are the reachable nonempty epsilon-closed subsets,
/// numbered in breadth-first discovery order; the empty subset is left implicit.
pub fn determinize(nfa: &Nfa) -> Dfa {
    let n = nfa.num_states();
    let k = nfa.alphabet.len();
    let mut eps = vec![Vec::new(); n];
    let mut moves: Vec<Vec<Vec<StateId>>> = vec![vec![Vec::new(); k]; n];
    for &(s, l, d) in &nfa.transitions {
        match l {
            None => eps[s].push(d),
            Some(l) => moves[s][l].push(d),
        }
    }

    let start = epsilon_closure(&eps, nfa.initial.iter().copied());
    if start.is_empty() {
        return Dfa::empty_language(nfa.alphabet.clone());
    }
    let mut index: HashMap<BTreeSet<StateId>, StateId> = HashMap::new();
    let mut subsets = vec![start.clone()];
    index.insert(start, 0);
    let mut delta: Vec<Vec<Option<StateId>>> = Vec::new();
    let mut head = 0;
    while head < subsets.len() {
        let current = subsets[head].clone();
        head += 1;
        let mut row = vec![None; k];
        for (l, slot) in row.iter_mut().enumerate() {
            let targets = epsilon_closure(
                &eps,
                current.iter().flat_map(|&s| moves[s][l].iter().copied()),
            );
            if targets.is_empty() {
                continue;
            }
            let next = match index.get(&targets) {
                Some(&id) => id,
                None => {
                    let id = subsets.len();
                    index.insert(targets.clone(), id);
                    subsets.push(targets);
                    id
                }
            };
            *slot = Some(next);
        }
        delta.push(row);
    }
    let accepting = subsets
        .iter()
        .map(|set| set.iter().any(|s| nfa.accepting.contains(s)))
        .collect();
    Dfa::from_parts(nfa.alphabet.clone(), delta, 0, accepting)
}

/// Hopcroft partition refinement over the completed, reachable automaton. The rejecting
/// sink class is dropped (unless it holds the initial state) and states are renumbered
/// breadth-first from the initial state, visiting letters in alphabet order, so equal
/// languages over equal alphabets yield identical automata.
pub fn minimize(dfa: &Dfa) -> Dfa {
    let reach = dfa.reachable();
    let mut index = vec![None; dfa.num_states()];
    for (i, &s) in reach.iter().enumerate() {
        index[s] = Some(i);
    }
    let restricted = Dfa::from_parts(
        dfa.alphabet().clone(),
        reach
            .iter()
            .map(|&s| {
                (0..dfa.alphabet().len())
                    .map(|l| dfa.next(s, l).and_then(|d| index[d]))
                    .collect()
            })
            .collect(),
        0,
        reach.iter().map(|&s| dfa.is_accepting(s)).collect(),
    );

    let (table, accepting, _) = restricted.completed();
    let class = hopcroft(&table, &accepting, dfa.alphabet().len());

    // A class is dead when no accepting class is reachable from it.
    let num_classes = class.iter().copied().max().map_or(0, |m| m + 1);
    let mut class_delta = vec![vec![0; dfa.alphabet().len()]; num_classes];
    let mut class_acc = vec![false; num_classes];
    for (s, row) in table.iter().enumerate() {
        class_acc[class[s]] |= accepting[s];
        for (l, &d) in row.iter().enumerate() {
            class_delta[class[s]][l] = class[d];
        }
    }
    let mut live = class_acc.clone();
    loop {
        let mut changed = false;
        for c in 0..num_classes {
            if !live[c] && class_delta[c].iter().any(|&d| live[d]) {
                live[c] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let start = class[0];
    if !live[start] {
        return Dfa::empty_language(dfa.alphabet().clone());
    }
    let mut number = vec![None; num_classes];
    number[start] = Some(0);
    let mut order = vec![start];
    let mut head = 0;
    while head < order.len() {
        let c = order[head];
        head += 1;
        for &d in &class_delta[c] {
            if live[d] && number[d].is_none() {
                number[d] = Some(order.len());
                order.push(d);
            }
        }
    }
    let delta = order
        .iter()
        .map(|&c| {
            class_delta[c]
                .iter()
                .map(|&d| if live[d] { number[d] } else { None })
                .collect()
        })
        .collect();
    let acc = order.iter().map(|&c| class_acc[c]).collect();
    Dfa::from_parts(dfa.alphabet().clone(), delta, 0, acc)
}

/// Returns the equivalence class of every state of a complete automaton.
fn hopcroft(table: &[Vec<StateId>], accepting: &[bool], k: usize) -> Vec<usize> {
    let n = table.len();
    let mut inverse: Vec<Vec<Vec<StateId>>> = vec![vec![Vec::new(); n]; k];
    for (s, row) in table.iter().enumerate() {
        for (l, &d) in row.iter().enumerate() {
            inverse[l][d].push(s);
        }
    }

    let acc: Vec<StateId> = (0..n).filter(|&s| accepting[s]).collect();
    let rej: Vec<StateId> = (0..n).filter(|&s| !accepting[s]).collect();
    let mut blocks: Vec<Vec<StateId>> = Vec::new();
    let mut class = vec![0; n];
    for part in [acc, rej] {
        if !part.is_empty() {
            let id = blocks.len();
            for &s in &part {
                class[s] = id;
            }
            blocks.push(part);
        }
    }
    if blocks.len() < 2 {
        return class;
    }

    let mut in_work: Vec<Vec<bool>> = vec![vec![false; k]; blocks.len()];
    let mut work: VecDeque<(usize, usize)> = VecDeque::new();
    let seed = if blocks[0].len() <= blocks[1].len() { 0 } else { 1 };
    for l in 0..k {
        work.push_back((seed, l));
        in_work[seed][l] = true;
    }

    let mut marked = vec![false; n];
    while let Some((splitter, letter)) = work.pop_front() {
        in_work[splitter][letter] = false;
        let mut pre: Vec<StateId> = Vec::new();
        for &t in &blocks[splitter] {
            for &s in &inverse[letter][t] {
                if !marked[s] {
                    marked[s] = true;
                    pre.push(s);
                }
            }
        }
        let mut touched: BTreeSet<usize> = BTreeSet::new();
        for &s in &pre {
            touched.insert(class[s]);
        }
        for y in touched {
            let (inside, outside): (Vec<StateId>, Vec<StateId>) =
                blocks[y].iter().partition(|&&s| marked[s]);
            if outside.is_empty() {
                continue;
            }
            let z = blocks.len();
            for &s in &outside {
                class[s] = z;
            }
            let inside_len = inside.len();
            let outside_len = outside.len();
            blocks[y] = inside;
            blocks.push(outside);
            in_work.push(vec![false; k]);
            for l in 0..k {
                if in_work[y][l] {
                    in_work[z][l] = true;
                    work.push_back((z, l));
                } else {
                    let smaller = if inside_len <= outside_len { y } else { z };
                    in_work[smaller][l] = true;
                    work.push_back((smaller, l));
                }
            }
        }
        for s in pre {
            marked[s] = false;
        }
    }
    class
}

/// Regular combinators over DFAs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineKind {
    Concat,
    Union,
    Star,
    Intersect,
}

impl CombineKind {
    fn name(self) -> &'static str {
        match self {
            CombineKind::Concat => "concat",
            CombineKind::Union => "union",
            CombineKind::Star => "star",
            CombineKind::Intersect => "intersect",
        }
    }
}

/// Applies a regular operation; the result is determinized and minimized. Operands over
/// different alphabets are lifted to the union alphabet, except for intersection, which
/// requires equal alphabets.
pub fn combine(kind: CombineKind, operands: &[Dfa]) -> Result<Dfa, AutomatonError> {
    let expected = if kind == CombineKind::Star { 1 } else { 2 };
    if operands.len() != expected {
        return Err(AutomatonError::Arity {
            kind: kind.name(),
            expected,
            got: operands.len(),
        });
    }
    match kind {
        CombineKind::Star => {
            let a = &operands[0];
            let mut nfa = Nfa::new(a.alphabet().clone());
            let hub = nfa.add_state();
            let base = embed(&mut nfa, a);
            nfa.add_transition(hub, None, base + a.initial());
            for s in a.accepting_states() {
                nfa.add_transition(base + s, None, hub);
            }
            nfa.initial.insert(hub);
            nfa.accepting.insert(hub);
            Ok(minimize(&determinize(&nfa)))
        }
        CombineKind::Concat => {
            let alphabet = operands[0].alphabet().union(operands[1].alphabet());
            let a = operands[0].with_alphabet(&alphabet)?;
            let b = operands[1].with_alphabet(&alphabet)?;
            let mut nfa = Nfa::new(alphabet);
            let base_a = embed(&mut nfa, &a);
            let base_b = embed(&mut nfa, &b);
            for s in a.accepting_states() {
                nfa.add_transition(base_a + s, None, base_b + b.initial());
            }
            nfa.initial.insert(base_a + a.initial());
            nfa.accepting.extend(b.accepting_states().map(|s| base_b + s));
            Ok(minimize(&determinize(&nfa)))
        }
        CombineKind::Union => {
            let alphabet = operands[0].alphabet().union(operands[1].alphabet());
            let a = operands[0].with_alphabet(&alphabet)?;
            let b = operands[1].with_alphabet(&alphabet)?;
            Ok(minimize(&product(&a, &b, |x, y| x || y)))
        }
        CombineKind::Intersect => {
            let (a, b) = (&operands[0], &operands[1]);
            if a.alphabet() != b.alphabet() {
                return Err(AutomatonError::AlphabetMismatch {
                    left: a.alphabet().letters().to_vec(),
                    right: b.alphabet().letters().to_vec(),
                });
            }
            Ok(minimize(&product(a, b, |x, y| x && y)))
        }
    }
}

/// Copies `dfa` into `nfa` and returns the index offset of its states.
fn embed(nfa: &mut Nfa, dfa: &Dfa) -> StateId {
    let base = nfa.add_states(dfa.num_states());
    for (s, l, d) in dfa.transitions() {
        nfa.add_transition(base + s, Some(l), base + d);
    }
    base
}

/// Synchronous product of two DFAs over the same alphabet; missing transitions are
/// treated as a rejecting sink on that side.
fn product(a: &Dfa, b: &Dfa, accept: impl Fn(bool, bool) -> bool) -> Dfa {
    let k = a.alphabet().len();
    type Pair = (Option<StateId>, Option<StateId>);
    let start: Pair = (Some(a.initial()), Some(b.initial()));
    let mut index: HashMap<Pair, StateId> = HashMap::new();
    let mut states = vec![start];
    index.insert(start, 0);
    let mut delta = Vec::new();
    let mut head = 0;
    while head < states.len() {
        let (x, y) = states[head];
        head += 1;
        let mut row = vec![None; k];
        for (l, slot) in row.iter_mut().enumerate() {
            let nx = x.and_then(|s| a.next(s, l));
            let ny = y.and_then(|s| b.next(s, l));
            if nx.is_none() && ny.is_none() {
                continue;
            }
            let pair = (nx, ny);
            let id = *index.entry(pair).or_insert_with(|| {
                states.push(pair);
                states.len() - 1
            });
            *slot = Some(id);
        }
        delta.push(row);
    }
    let accepting = states
        .iter()
        .map(|&(x, y)| {
            accept(
                x.is_some_and(|s| a.is_accepting(s)),
                y.is_some_and(|s| b.is_accepting(s)),
            )
        })
        .collect();
    Dfa::from_parts(a.alphabet().clone(), delta, 0, accepting)
}

/// Language equality by breadth-first search of the product for a distinguishing pair.
/// Automata over different alphabets are compared over the union alphabet.
pub fn language_equal(a: &Dfa, b: &Dfa) -> bool {
    let alphabet = a.alphabet().union(b.alphabet());
    let a = a.with_alphabet(&alphabet).expect("union alphabet is a superset");
    let b = b.with_alphabet(&alphabet).expect("union alphabet is a superset");
    let acc = |d: &Dfa, s: Option<StateId>| s.is_some_and(|s| d.is_accepting(s));
    let start = (Some(a.initial()), Some(b.initial()));
    let mut seen = BTreeSet::new();
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some((x, y)) = queue.pop_front() {
        if acc(&a, x) != acc(&b, y) {
            return false;
        }
        for l in 0..alphabet.len() {
            let next = (x.and_then(|s| a.next(s, l)), y.and_then(|s| b.next(s, l)));
            if next != (None, None) && seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    true
}

/// Parallel composition: a letter moves every part whose alphabet contains it (all of
/// them must be able to move) and leaves the others in place. Disjoint alphabets give
/// the shuffle product; shared letters synchronize. Accepting when all parts accept.
pub fn parallel_compose(parts: &[Dfa]) -> Dfa {
    let alphabet = parts
        .iter()
        .fold(Alphabet::empty(), |acc, p| acc.union(p.alphabet()));
    let k = alphabet.len();
    // For each global letter: the (part, local letter) pairs it drives.
    let drives: Vec<Vec<(usize, usize)>> = (0..k)
        .map(|l| {
            parts
                .iter()
                .enumerate()
                .filter_map(|(i, p)| p.alphabet().index_of(alphabet.letter(l)).map(|ll| (i, ll)))
                .collect()
        })
        .collect();

    let start: Vec<StateId> = parts.iter().map(Dfa::initial).collect();
    let mut index: BTreeMap<Vec<StateId>, StateId> = BTreeMap::new();
    let mut states = vec![start.clone()];
    index.insert(start, 0);
    let mut delta = Vec::new();
    let mut head = 0;
    while head < states.len() {
        let current = states[head].clone();
        head += 1;
        let mut row = vec![None; k];
        for (l, slot) in row.iter_mut().enumerate() {
            let mut next = current.clone();
            let mut ok = true;
            for &(i, ll) in &drives[l] {
                match parts[i].next(current[i], ll) {
                    Some(t) => next[i] = t,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
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
        delta.push(row);
    }
    let accepting = states
        .iter()
        .map(|tuple| tuple.iter().zip(parts).all(|(&s, p)| p.is_accepting(s)))
        .collect();
    minimize(&Dfa::from_parts(alphabet, delta, 0, accepting))
}

/// Natural projection onto `block`: letters outside the block are erased (become epsilon
/// moves), then the result is determinized and minimized over `block`.
pub fn project(dfa: &Dfa, block: &Alphabet) -> Dfa {
    let mut nfa = Nfa::new(block.clone());
    nfa.add_states(dfa.num_states());
    for (s, l, d) in dfa.transitions() {
        let letter = block.index_of(dfa.alphabet().letter(l));
        nfa.add_transition(s, letter, d);
    }
    nfa.initial.insert(dfa.initial());
    nfa.accepting.extend(dfa.accepting_states());
    minimize(&determinize(&nfa))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    fn all_words(k: usize, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for l in 0..k {
                    let mut w2: Vec<usize> = w.clone();
                    w2.push(l);
                    next.push(w2);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    #[test]
    fn union_idempotence_under_subset_construction() {
        // a + a as two parallel a-edges.
        let a = Alphabet::new(["a"]).unwrap();
        let mut nfa = Nfa::new(a.clone());
        nfa.add_states(3);
        nfa.add_transition(0, Some(0), 1);
        nfa.add_transition(0, Some(0), 2);
        nfa.initial.insert(0);
        nfa.accepting.extend([1, 2]);
        let d = determinize(&nfa);
        assert_eq!(d.num_states(), 2);
        assert!(language_equal(&d, &Dfa::word(a, &["a"]).unwrap()));
    }

    #[test]
    fn minimize_merges_bisimilar_accepting_sinks() {
        let d = Dfa::new(ab(), 3, [(0, "a", 1), (0, "b", 2)], 0, &[1, 2]).unwrap();
        let m = minimize(&d);
        assert_eq!(m.num_states(), d.num_states() - 1);
        assert!(language_equal(&d, &m));
    }

    #[test]
    fn minimize_of_empty_language_is_single_rejecting_state() {
        let d = Dfa::new(ab(), 2, [(0, "a", 1), (1, "b", 0)], 0, &[]).unwrap();
        let m = minimize(&d);
        assert_eq!(m.num_states(), 1);
        assert_eq!(m.num_transitions(), 0);
        assert!(m.is_empty_language());
    }

    #[test]
    fn minimize_p1_loop_dfa_is_isomorphic() {
        let d = crate::automata::tests::p1_loop_dfa();
        let m = minimize(&d);
        assert_eq!(m, d);
    }

    #[test]
    fn star_of_empty_language_accepts_only_epsilon() {
        let s = combine(CombineKind::Star, &[Dfa::empty_language(ab())]).unwrap();
        assert!(s.accepts::<&str>(&[]).unwrap());
        assert!(!s.accepts(&["a"]).unwrap());
        assert!(language_equal(&s, &Dfa::epsilon(ab())));
    }

    #[test]
    fn combine_checks_arity_and_alphabets() {
        let a = Dfa::epsilon(ab());
        assert!(matches!(
            combine(CombineKind::Concat, &[a.clone()]),
            Err(AutomatonError::Arity { .. })
        ));
        let other = Dfa::epsilon(Alphabet::new(["c"]).unwrap());
        assert!(matches!(
            combine(CombineKind::Intersect, &[a, other]),
            Err(AutomatonError::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn intersection_of_astar_b_and_a_bstar_is_ab() {
        // a*b and ab*, built by hand.
        let astar_b = Dfa::new(ab(), 2, [(0, "a", 0), (0, "b", 1)], 0, &[1]).unwrap();
        let a_bstar = Dfa::new(ab(), 2, [(0, "a", 1), (1, "b", 1)], 0, &[1]).unwrap();
        let both = combine(CombineKind::Intersect, &[astar_b.clone(), a_bstar.clone()]).unwrap();
        for w in all_words(2, 3) {
            let expected = astar_b.accepts_indices(&w) && a_bstar.accepts_indices(&w);
            assert_eq!(both.accepts_indices(&w), expected, "{w:?}");
            assert_eq!(both.accepts_indices(&w), w == vec![0, 1]);
        }
    }

    #[test]
    fn shuffle_of_two_letters() {
        let a = Dfa::word(Alphabet::new(["a"]).unwrap(), &["a"]).unwrap();
        let b = Dfa::word(Alphabet::new(["b"]).unwrap(), &["b"]).unwrap();
        let s = parallel_compose(&[a.clone(), b]);
        let accepted: Vec<Vec<usize>> = all_words(2, 3)
            .into_iter()
            .filter(|w| s.accepts_indices(w))
            .collect();
        assert_eq!(accepted, vec![vec![0, 1], vec![1, 0]]);

        // Shared letter: both parts step together.
        let sync = parallel_compose(&[a.clone(), a]);
        assert!(sync.accepts(&["a"]).unwrap());
        assert!(!sync.accepts(&["a", "a"]).unwrap());
    }

    #[test]
    fn projection_erases_foreign_letters() {
        let d = Dfa::word(ab(), &["a", "b", "a"]).unwrap();
        let p = project(&d, &Alphabet::new(["a"]).unwrap());
        assert!(p.accepts(&["a", "a"]).unwrap());
        assert!(!p.accepts(&["a"]).unwrap());
    }
}
