//! Controlled query evaluation over DL-Lite_R ontologies.
//!
//! An instance is a TBox, an ABox and a policy of epistemic dependencies. Queries
//! are answered skeptically (SC) or over the intersection (IC) of the optimal
//! CQ-censors, either by bounded search or, for acyclic policies, through a
//! first-order rewriting evaluated directly over the data.

pub mod censor;
pub mod cli;
pub mod entail;
pub mod error;
pub mod harness;
mod hom;
pub mod model;
pub mod privacy;
pub mod reasoner;
pub mod rewrite;
pub mod textio;
mod unify;

pub use error::{Error, Result};
pub use model::{
    Atom, Basic, BasicConcept, ConjunctiveQuery, CqeInstance, EpistemicDependency, Policy, Polarity, Role, Sym,
    TBox, TBoxAxiom, Term, Tgd, UnionQuery, ABox,
};

/// Search budgets. Exceeding any of them yields [`Error::ResourceLimit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Candidate BCQs generated while building a universe.
    pub universe_cap: usize,
    /// Candidate clash queries in a rewriting.
    pub q_cap: usize,
    /// Search nodes visited while exploring censors.
    pub subset_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            universe_cap: reasoner::DEFAULT_UNIVERSE_CAP,
            q_cap: rewrite::DEFAULT_Q_CAP,
            subset_cap: 2_000_000,
        }
    }
}
