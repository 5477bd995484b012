//! Trust-based symbolic task and motion planning for multi-team bounding overwatch.
//!
//! The pipeline runs in layers, each owned by one module:
//!
//! * [`spec_lang`] parses regular-expression and co-safe LTL task specifications and
//!   compiles them to minimal DFAs.
//! * [`automata`] holds the finite-automaton algebra (subset construction, Hopcroft
//!   minimization, regular combinators, equivalence, parallel composition).
//! * [`decomp`] splits a global task DFA into subtask automata that independent teams
//!   can satisfy in parallel, with a reconstruction certificate.
//! * [`mdp`] builds capability, product, motion and planning MDPs.
//! * [`terrain`] ingests PGM heightmaps and derives per-cell traversability and
//!   line-of-sight statistics.
//! * [`trust`] propagates the Gaussian trust belief along a path.
//! * [`plan`] searches the planning MDP for the most trustworthy plan.
//! * [`sim`] replays plans as successive bounding overwatch for two-robot teams.

pub mod automata;
pub mod decomp;
pub mod mdp;
pub mod plan;
pub mod sim;
pub mod spec_lang;
pub mod svg;
pub mod terrain;
pub mod trust;

pub use automata::{Alphabet, Dfa, Nfa};
pub use spec_lang::SpecAst;
