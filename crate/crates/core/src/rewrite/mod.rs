//! First-order rewriting of SC/IC entailment for acyclic policies.

mod clash;
mod formula;
mod graph;
mod tgd;
mod ucq;

pub use clash::{clash_formula, ic_rewriting, phi_pc, sc_rewriting, Manifest};
pub use formula::{eval_fo, FoFormula};
pub use graph::{dependency_graph, is_acyclic, DependencyGraph, EdgeTag};
pub use tgd::tgd_translate;
pub use ucq::{ed_closure, ind_pred, no_ind, ucq_rewrite};

pub use crate::model::Tgd;

/// Default cap on the number of candidate clash queries.
pub const DEFAULT_Q_CAP: usize = 20_000;
/// Default cap on the number of queries produced by one rewriting.
pub const DEFAULT_REWRITE_CAP: usize = 20_000;
