//! Policy closure, EQL policy satisfaction and the optimal-censor enumerator.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::hom::Target;
use crate::model::{canonical_core, canonical_key, freeze_atoms, ConjunctiveQuery as Cq, CqeInstance, Policy, TBox, Term};
use crate::reasoner::{bcq_cons_k, CensorUniverse, Rewriting, Signature};
use crate::Limits;

/// Least set containing the seed and closed under ED firing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyClosure {
    pub queries: Vec<Cq>,
    /// ⊥ would have entered the closure.
    pub poisoned: bool,
}

/// A policy whose ED bodies have been rewritten against the TBox once.
pub(crate) struct PreparedPolicy<'a> {
    policy: &'a Policy,
    bodies: Vec<Rewriting>,
}

impl<'a> PreparedPolicy<'a> {
    pub fn new(t: &TBox, policy: &'a Policy) -> Self {
        let bodies = policy.eds.iter().map(|e| Rewriting::of_cq(&e.body, t)).collect();
        PreparedPolicy { policy, bodies }
    }

    /// Body instances entailed over `tgt`, universals bound to constants: (ED index, values).
    pub fn firings(&self, tgt: &Target) -> Vec<(usize, Vec<Term>)> {
        let mut out = Vec::new();
        for (i, r) in self.bodies.iter().enumerate() {
            for tuple in r.answers(tgt, true) {
                out.push((i, tuple));
            }
        }
        out
    }

    pub fn closure(&self, seed: &[Cq]) -> PolicyClosure {
        let mut keys: HashSet<Cq> = HashSet::new();
        let mut queries: Vec<Cq> = Vec::new();
        for q in seed {
            let c = canonical_core(q);
            if keys.insert(canonical_key(&c)) {
                queries.push(c);
            }
        }
        let mut poisoned = false;
        let mut fired: HashSet<(usize, Vec<Term>)> = HashSet::new();
        loop {
            let atoms = freeze_atoms(queries.iter()).expect("closure members are never bot");
            let tgt = Target::new(&atoms);
            let mut added = false;
            for (ei, tuple) in self.firings(&tgt) {
                if !fired.insert((ei, tuple.clone())) {
                    continue;
                }
                let ed = &self.policy.eds[ei];
                if ed.head.is_none() {
                    poisoned = true;
                    continue;
                }
                let h = canonical_core(&ed.head_instance(&tuple));
                if keys.insert(canonical_key(&h)) {
                    queries.push(h);
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        queries.sort();
        PolicyClosure { queries, poisoned }
    }

    pub fn satisfied(&self, t: &TBox, c: &[Cq]) -> bool {
        let atoms = freeze_atoms(c.iter()).expect("censor members are never bot");
        let tgt = Target::new(&atoms);
        self.firings(&tgt).into_iter().all(|(ei, tuple)| {
            let ed = &self.policy.eds[ei];
            ed.head.is_some() && Rewriting::of_cq(&ed.head_instance(&tuple), t).holds(&tgt)
        })
    }
}

pub fn policy_cons(t: &TBox, p: &Policy, c: &[Cq]) -> PolicyClosure {
    PreparedPolicy::new(t, p).closure(c)
}

/// `T ∪ C ⊨_EQL P` over active-domain ground substitutions.
pub fn satisfies_policy(t: &TBox, c: &[Cq], p: &Policy) -> bool {
    PreparedPolicy::new(t, p).satisfied(t, c)
}

/// Whether some optimal censor contains `c`.
pub fn censor_extends(e: &CqeInstance, c: &[Cq]) -> bool {
    let pc = policy_cons(&e.tbox, &e.policy, c);
    if pc.poisoned {
        return false;
    }
    let abox: Vec<_> = e.abox.atoms.iter().copied().collect();
    let tgt = Target::new(&abox);
    pc.queries.iter().all(|q| Rewriting::of_cq(q, &e.tbox).holds(&tgt))
}

/// Signature used for an instance's universes: its predicates plus those of `extra`,
/// and the constants of the ABox, policy and `extra`.
pub fn instance_signature(e: &CqeInstance, extra: &[Cq]) -> Signature {
    let mut predicates = e.predicates();
    let mut constants = e.constants();
    for q in extra {
        predicates.extend(q.predicates());
        constants.extend(q.constants());
    }
    Signature { predicates, constants }
}

/// Exhaustive search for the ⊆-maximal policy-respecting subsets of a universe.
pub(crate) struct CensorSearch<'a> {
    e: &'a CqeInstance,
    pub universe: &'a CensorUniverse,
    policy: PreparedPolicy<'a>,
    rewritings: Vec<Rewriting>,
    index: HashMap<Cq, usize>,
    abox: Target,
    nodes: usize,
    cap: usize,
}

type Set = Vec<bool>;

impl<'a> CensorSearch<'a> {
    pub fn new(e: &'a CqeInstance, universe: &'a CensorUniverse, limits: &Limits) -> Self {
        let rewritings = universe.members.iter().map(|q| Rewriting::of_cq(q, &e.tbox)).collect();
        let index = universe
            .members
            .iter()
            .enumerate()
            .map(|(i, q)| (canonical_key(q), i))
            .collect();
        let abox: Vec<_> = e.abox.atoms.iter().copied().collect();
        CensorSearch {
            e,
            universe,
            policy: PreparedPolicy::new(&e.tbox, &e.policy),
            rewritings,
            index,
            abox: Target::new(&abox),
            nodes: 0,
            cap: limits.subset_cap,
        }
    }

    fn members(&self, s: &Set) -> Vec<Cq> {
        s.iter()
            .zip(&self.universe.members)
            .filter(|(b, _)| **b)
            .map(|(_, q)| q.clone())
            .collect()
    }

    /// Entailment closure within the universe of the policy closure of `s`; `None` if that
    /// closure is poisoned or leaves `BCQ-Cons(T ∪ A)`.
    pub fn close(&self, s: &Set) -> Option<Set> {
        let pc = self.policy.closure(&self.members(s));
        if pc.poisoned {
            return None;
        }
        for q in &pc.queries {
            if !self.index.contains_key(&canonical_key(q)) && !Rewriting::of_cq(q, &self.e.tbox).holds(&self.abox) {
                return None;
            }
        }
        let atoms = freeze_atoms(pc.queries.iter()).expect("closure members are never bot");
        let tgt = Target::new(&atoms);
        Some(self.rewritings.iter().map(|r| r.holds(&tgt)).collect())
    }

    fn with(s: &Set, i: usize) -> Set {
        let mut out = s.clone();
        out[i] = true;
        out
    }

    /// Enumerates maximal censors. `reject` prunes any partial censor it flags
    /// (it must be upward closed); `stop` ends the search when it returns true.
    pub fn run(&mut self, reject: &dyn Fn(&Set) -> bool, stop: &mut dyn FnMut(&Set) -> bool) -> Result<()> {
        let n = self.universe.members.len();
        let Some(start) = self.close(&vec![false; n]) else {
            return Ok(());
        };
        if reject(&start) {
            return Ok(());
        }
        // sup[e]: members that alone entail member e
        let frozen: Vec<Target> = self
            .universe
            .members
            .iter()
            .map(|q| Target::new(&freeze_atoms([q]).expect("not bot")))
            .collect();
        let sup: Vec<Vec<usize>> = (0..n)
            .map(|e| (0..n).filter(|&s| self.rewritings[e].holds(&frozen[s])).collect())
            .collect();
        // members that break the policy on top of `start` are in no censor
        let exc: Set = (0..n).map(|i| !start[i] && self.close(&Self::with(&start, i)).is_none()).collect();
        self.dfs(start, exc, Vec::new(), &sup, reject, stop).map(|_| ())
    }

    fn dfs(
        &mut self,
        inc: Set,
        exc: Set,
        chosen: Vec<usize>,
        sup: &[Vec<usize>],
        reject: &dyn Fn(&Set) -> bool,
        stop: &mut dyn FnMut(&Set) -> bool,
    ) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::limit("censor search nodes", self.cap));
        }
        let Some(e) = (0..inc.len()).find(|&i| !inc[i] && !exc[i]) else {
            for &x in &chosen {
                if self.close(&Self::with(&inc, x)).is_some() {
                    return Ok(false);
                }
            }
            return Ok(stop(&inc));
        };
        let Some(j) = self.close(&Self::with(&inc, e)) else {
            // whatever entails e is just as incompatible
            let mut exc = exc;
            for &s in &sup[e] {
                exc[s] = true;
            }
            exc[e] = true;
            return self.dfs(inc, exc, chosen, sup, reject, stop);
        };
        if !j.iter().zip(&exc).any(|(a, b)| *a && *b) && !reject(&j) && self.dfs(j, exc.clone(), chosen.clone(), sup, reject, stop)? {
            return Ok(true);
        }
        let mut exc = exc;
        for &s in &sup[e] {
            exc[s] = true;
        }
        exc[e] = true;
        let mut chosen = chosen;
        chosen.push(e);
        let rest: Set = exc.iter().map(|x| !x).collect();
        if self.close(&rest).is_some() && chosen.iter().any(|&x| self.close(&Self::with(&rest, x)).is_some()) {
            return Ok(false);
        }
        self.dfs(inc, exc, chosen, sup, reject, stop)
    }

    pub fn to_queries(&self, s: &Set) -> Vec<Cq> {
        self.members(s)
    }
}

/// All optimal censors cut down to the `k`-universe, in canonical order.
pub fn optimal_censors(e: &CqeInstance, k: usize, limits: &Limits) -> Result<Vec<Vec<Cq>>> {
    let universe = censor_universe(e, k, &[], limits)?;
    optimal_censors_in(e, &universe, limits)
}

pub(crate) fn censor_universe(e: &CqeInstance, k: usize, extra: &[Cq], limits: &Limits) -> Result<CensorUniverse> {
    let abox: Vec<_> = e.abox.atoms.iter().copied().collect();
    bcq_cons_k(&e.tbox, &abox, k, &instance_signature(e, extra), limits.universe_cap)
}

pub(crate) fn optimal_censors_in(e: &CqeInstance, universe: &CensorUniverse, limits: &Limits) -> Result<Vec<Vec<Cq>>> {
    let mut search = CensorSearch::new(e, universe, limits);
    let mut found: Vec<Set> = Vec::new();
    search.run(&|_| false, &mut |s| {
        found.push(s.clone());
        false
    })?;
    let mut out: Vec<Vec<Cq>> = found.iter().map(|s| search.to_queries(s)).collect();
    out.sort();
    let unique: BTreeSet<Vec<Cq>> = out.drain(..).collect();
    Ok(unique.into_iter().collect())
}
