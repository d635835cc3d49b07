use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::model::{Policy, Sym, TBox};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeTag {
    P,
    T,
}

/// Predicate-level dependencies: P-edges from ED body to head predicates,
/// T-edges from the left to the right side of each inclusion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<Sym>,
    pub edges: BTreeSet<(Sym, Sym, EdgeTag)>,
}

pub fn dependency_graph(t: &TBox, p: &Policy) -> DependencyGraph {
    let mut nodes: BTreeSet<Sym> = t.predicates().into_iter().map(|x| x.0).collect();
    nodes.extend(p.predicates().into_iter().map(|x| x.0));
    let mut edges = BTreeSet::new();
    for ed in &p.eds {
        if let Some(head) = &ed.head {
            for b in ed.body.predicates() {
                for h in head.predicates() {
                    edges.insert((b.0, h.0, EdgeTag::P));
                }
            }
        }
    }
    for ax in t.inclusions() {
        edges.insert((ax.lhs.pred(), ax.rhs.pred(), EdgeTag::T));
    }
    DependencyGraph { nodes, edges }
}

impl DependencyGraph {
    /// True iff no cycle passes through a P-edge.
    pub fn is_acyclic(&self) -> bool {
        let mut g = DiGraph::<Sym, ()>::new();
        let ids: BTreeMap<Sym, _> = self.nodes.iter().map(|&n| (n, g.add_node(n))).collect();
        for (a, b, _) in &self.edges {
            g.add_edge(ids[a], ids[b], ());
        }
        let mut comp = BTreeMap::new();
        for (i, scc) in tarjan_scc(&g).into_iter().enumerate() {
            for n in scc {
                comp.insert(n, i);
            }
        }
        self.edges
            .iter()
            .filter(|e| e.2 == EdgeTag::P)
            .all(|(a, b, _)| a != b && comp[&ids[a]] != comp[&ids[b]])
    }
}

pub fn is_acyclic(t: &TBox, p: &Policy) -> bool {
    dependency_graph(t, p).is_acyclic()
}
