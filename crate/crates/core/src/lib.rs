//! Exact MAP inference for discrete Bayesian networks.
//!
//! Given a network, evidence `e`, and a set of MAP variables `M`, the solver
//! finds the instantiation `m` of `M` maximizing `Pr(m, e)`. The search is a
//! depth-first branch-and-bound whose pruning bound comes from jointree
//! message passing in which maximizations are allowed to commute with
//! summations: evaluating an elimination order that maximizes "too early"
//! costs only tightness, never soundness, so every message stays an upper
//! bound on the quantity it replaces.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`] — variables, dense potentials with a shared power-of-two
//!   scale, evidence, networks, and the text file formats.
//! * [`elimination`] — interaction graphs, min-fill orders, and variable
//!   elimination with mixed sum/max roles (exact or relaxed).
//! * [`jointree`] — cluster trees built from an elimination order,
//!   maximization promotion, and prime-factor variable splitting.
//! * [`propagation`] — cached message passing over a jointree with
//!   assert/retract state editing for the search.
//! * [`minibucket`] — the classical mini-bucket upper bound, used as a
//!   baseline.
//! * [`search`] — initialization heuristics and the branch-and-bound solver.
//! * [`bench`] — a seeded random-network generator, a brute-force oracle, and
//!   benchmark harnesses.
//!
//! With the `parallel` feature (enabled by default) the oracle and the
//! benchmark harnesses distribute independent work across threads via rayon;
//! without it they fall back to equivalent sequential loops.

pub mod bench;
pub mod elimination;
pub mod jointree;
pub mod minibucket;
pub mod model;
pub mod propagation;
pub mod search;
#[cfg(test)]
mod testutil;

pub use model::{
    BayesianNetwork, Evidence, Instantiation, Potential, ScaledValue, VarId, Variable,
};
