//! Skeptical (SC) and intersection (IC) entailment under optimal CQ-censors.
//!
//! When every ED body variable is universally quantified, which holds for all
//! parsed policies, the search runs over ground atoms instead of BCQs. In DL-Lite_R
//! a ground atom entailed by `T ∪ C` is entailed by a single member of `C`, and ED
//! bodies only ever match ground atoms. An optimal censor is therefore determined
//! by its *ground kernel* `G`: the ground atoms it entails. A set `G` of ground
//! consequences of `T ∪ A` is a kernel iff it is closed under `T`, every body
//! instance inside `G` has a head entailed by `T ∪ A` whose ground consequences
//! lie in `G`, and no further ground atom can be added. The censor itself is
//! every BCQ entailed by `T ∪ A` whose ground consequences lie in `G`.
//!
//! Labeled nulls in the ABox never enter a kernel: they only support BCQs whose
//! ground consequences already lie in it. Policies whose bodies carry existential
//! variables fall back to a search over the BCQ universe.
//!
//! Being a bad set is upward closed, so for a BCQ the answer is decided by the
//! minimal conflicts alone: an atom lies in every kernel iff it lies in no
//! minimal bad set whose remainder still closes. Unions need the kernel search.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use crate::censor::{censor_universe, optimal_censors_in, CensorSearch};
use crate::error::{Error, Result};
use crate::hom::{self, Subst, Target};
use crate::model::{freeze_atoms, Atom, ConjunctiveQuery as Cq, CqeInstance, Term, UnionQuery};
use crate::reasoner::{entails, GroundOracle, Premise, Rewriting};
use crate::Limits;

/// Which censor semantics a question is asked under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Sc,
    Ic,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "sc" => Ok(Mode::Sc),
            "ic" => Ok(Mode::Ic),
            _ => Err(Error::InvalidQuery(format!("unknown mode `{s}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Sc => "sc",
            Mode::Ic => "ic",
        })
    }
}

/// Answer plus a counterexample when the answer is `false`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub answer: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Ground kernel of an optimal censor that does not entail the query.
    Kernel(Vec<Atom>),
    /// An optimal censor (cut to the search universe) that does not entail the query.
    Censor(Vec<Cq>),
    /// The query is not entailed by the ontology at all.
    NotEntailed,
}

type Set = Vec<bool>;
type Leaves = BTreeSet<usize>;

/// Adds `s` unless a subset is present, dropping supersets of it. True if added.
fn insert_minimal(sets: &mut Vec<Leaves>, s: Leaves) -> bool {
    if sets.iter().any(|t| t.is_subset(&s)) {
        return false;
    }
    sets.retain(|t| !s.is_subset(t));
    sets.push(s);
    true
}

struct Kernel<'a> {
    e: &'a CqeInstance,
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    tclose: Vec<Vec<usize>>,
    oracle: GroundOracle,
    abox: Target,
    heads: RefCell<HashMap<(usize, Vec<Term>), Option<Vec<usize>>>>,
    needs: Vec<Vec<usize>>,
    nodes: usize,
    cap: usize,
}

impl<'a> Kernel<'a> {
    fn new(e: &'a CqeInstance, q: &UnionQuery, limits: &Limits) -> Self {
        let mut preds = e.predicates();
        preds.extend(q.predicates());
        let oracle = GroundOracle::new(&e.tbox, preds);
        let abox_atoms: Vec<Atom> = e.abox.atoms.iter().copied().collect();
        let atoms: Vec<Atom> = oracle.consequences(&abox_atoms).into_iter().collect();
        let index: HashMap<Atom, usize> = atoms.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let tclose = atoms
            .iter()
            .map(|a| oracle.consequences(&[*a]).iter().map(|c| index[c]).collect())
            .collect();
        let abox = Target::new(&abox_atoms);
        let mut k = Kernel {
            e,
            atoms,
            index,
            tclose,
            oracle,
            abox,
            heads: RefCell::new(HashMap::new()),
            needs: Vec::new(),
            nodes: 0,
            cap: limits.subset_cap,
        };
        k.needs = q
            .disjuncts
            .iter()
            .filter(|d| Rewriting::of_cq(d, &e.tbox).holds(&k.abox))
            .map(|d| k.grounds(d).expect("entailed query has entailed ground consequences"))
            .collect();
        k
    }

    /// Indices of the ground consequences of a BCQ, or `None` if one of them is not in the pool.
    fn grounds(&self, q: &Cq) -> Option<Vec<usize>> {
        let frozen = freeze_atoms([q]).expect("not bot");
        self.oracle
            .consequences(&frozen)
            .iter()
            .map(|a| self.index.get(a).copied())
            .collect()
    }

    fn head_grounds(&self, ei: usize, tuple: &[Term]) -> Option<Vec<usize>> {
        let key = (ei, tuple.to_vec());
        if let Some(hit) = self.heads.borrow().get(&key) {
            return hit.clone();
        }
        let ed = &self.e.policy.eds[ei];
        let res = if ed.head.is_none() {
            None
        } else {
            let h = ed.head_instance(tuple);
            if Rewriting::of_cq(&h, &self.e.tbox).holds(&self.abox) {
                self.grounds(&h)
            } else {
                None
            }
        };
        self.heads.borrow_mut().insert(key, res.clone());
        res
    }

    fn add(&self, g: &mut Set, i: usize) {
        for &j in &self.tclose[i] {
            g[j] = true;
        }
    }

    /// Closes `g` under policy firing; `None` if ⊥ or a non-entailed head is reached.
    fn kclose(&self, g: &Set) -> Option<Set> {
        let mut g = g.clone();
        loop {
            let present: Vec<Atom> = (0..g.len()).filter(|&i| g[i]).map(|i| self.atoms[i]).collect();
            let tgt = Target::new(&present);
            let mut fired: Vec<(usize, Vec<Term>)> = Vec::new();
            for (ei, ed) in self.e.policy.eds.iter().enumerate() {
                let mut s = Subst::new();
                hom::for_each(&ed.body.atoms, &tgt, &mut s, &hom::any_term, &mut |m| {
                    fired.push((ei, ed.body.answer_vars.iter().map(|&t| hom::apply(m, t)).collect()));
                    false
                });
            }
            let mut changed = false;
            for (ei, tuple) in fired {
                for j in self.head_grounds(ei, &tuple)? {
                    if !g[j] {
                        g[j] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                return Some(g);
            }
        }
    }

    fn kclose_with(&self, g: &Set, i: usize) -> Option<Set> {
        let mut g = g.clone();
        self.add(&mut g, i);
        self.kclose(&g)
    }

    fn hits(&self, g: &Set) -> bool {
        self.needs.iter().any(|n| n.iter().all(|&i| g[i]))
    }

    /// Atoms whose consequences can never take part in a body match.
    fn inert(&self, i: usize) -> bool {
        self.tclose[i].iter().all(|&j| {
            let a = self.atoms[j];
            self.e.policy.eds.iter().all(|ed| {
                ed.body.atoms.iter().all(|b| {
                    b.pred() != a.pred()
                        || b.args().iter().zip(a.args()).any(|(x, y)| x.is_const() && x != y)
                })
            })
        })
    }

    /// Ground body matches over the whole pool: body atom indices, and the head's
    /// ground consequences or `None` when firing breaks the policy.
    fn firings(&self) -> Vec<(Vec<usize>, Option<Vec<usize>>)> {
        let tgt = Target::new(&self.atoms);
        let mut out = Vec::new();
        for (ei, ed) in self.e.policy.eds.iter().enumerate() {
            let mut s = Subst::new();
            hom::for_each(&ed.body.atoms, &tgt, &mut s, &hom::any_term, &mut |m| {
                let body = ed.body.atoms.iter().map(|a| self.index[&a.map(|t| hom::apply(m, t))]).collect();
                let tuple: Vec<Term> = ed.body.answer_vars.iter().map(|&t| hom::apply(m, t)).collect();
                out.push((body, self.head_grounds(ei, &tuple)));
                false
            });
        }
        out
    }

    /// The ⊆-minimal sets of pool atoms from which the policy derives a violation.
    fn minimal_conflicts(&mut self) -> Result<Vec<Leaves>> {
        let n = self.atoms.len();
        let firings = self.firings();
        let mut support: Vec<Vec<Leaves>> = vec![Vec::new(); n];
        for b in 0..n {
            for &a in &self.tclose[b] {
                insert_minimal(&mut support[a], BTreeSet::from([b]));
            }
        }
        loop {
            let mut changed = false;
            for (body, head) in &firings {
                let Some(head) = head else { continue };
                for leaves in self.product(body, &support)? {
                    for &a in head {
                        changed |= insert_minimal(&mut support[a], leaves.clone());
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut conflicts = Vec::new();
        for (body, head) in &firings {
            if head.is_none() {
                for leaves in self.product(body, &support)? {
                    insert_minimal(&mut conflicts, leaves);
                }
            }
        }
        Ok(conflicts)
    }

    /// Minimal unions choosing one support per body atom.
    fn product(&mut self, body: &[usize], support: &[Vec<Leaves>]) -> Result<Vec<Leaves>> {
        let mut acc: Vec<Leaves> = vec![BTreeSet::new()];
        for &b in body {
            let mut next = Vec::new();
            for l in &acc {
                for r in &support[b] {
                    self.nodes += 1;
                    if self.nodes > self.cap {
                        return Err(Error::limit("kernel search nodes", self.cap));
                    }
                    insert_minimal(&mut next, l.union(r).copied().collect());
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// For a single needed disjunct: a maximal kernel missing one of its atoms. Such a
    /// kernel exists iff that atom lies in a minimal conflict whose other atoms are
    /// jointly harmless.
    fn bcq_counterexample(&mut self) -> Result<Option<Set>> {
        let need = self.needs[0].clone();
        for c in self.minimal_conflicts()? {
            for &a in need.iter().filter(|a| c.contains(a)) {
                let mut rest = vec![false; self.atoms.len()];
                for &b in c.iter().filter(|&&b| b != a) {
                    self.add(&mut rest, b);
                }
                let Some(mut g) = self.kclose(&rest) else { continue };
                for i in 0..g.len() {
                    if !g[i] {
                        if let Some(j) = self.kclose_with(&g, i) {
                            g = j;
                        }
                    }
                }
                debug_assert!(!self.hits(&g));
                return Ok(Some(g));
            }
        }
        Ok(None)
    }

    /// A maximal kernel avoiding every needed disjunct, if one exists.
    fn counterexample(&mut self) -> Result<Option<Set>> {
        let n = self.atoms.len();
        let mut g = vec![false; n];
        for i in 0..n {
            if self.inert(i) {
                self.add(&mut g, i);
            }
        }
        let g = self.kclose(&g).expect("inert atoms fire nothing");
        self.search(g, vec![false; n], Vec::new())
    }

    fn search(&mut self, g: Set, x: Set, chosen: Vec<usize>) -> Result<Option<Set>> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(Error::limit("kernel search nodes", self.cap));
        }
        if self.hits(&g) {
            return Ok(None);
        }
        let Some(e) = (0..g.len()).find(|&i| !g[i] && !x[i]) else {
            for &c in &chosen {
                if self.kclose_with(&g, c).is_some() {
                    return Ok(None);
                }
            }
            return Ok(Some(g));
        };
        let Some(j) = self.kclose_with(&g, e) else {
            let mut x = x;
            x[e] = true;
            return self.search(g, x, chosen);
        };
        if !j.iter().zip(&x).any(|(a, b)| *a && *b) {
            if let Some(w) = self.search(j, x.clone(), chosen.clone())? {
                return Ok(Some(w));
            }
        }
        let mut x = x;
        for (a, tc) in self.tclose.iter().enumerate() {
            if tc.contains(&e) {
                x[a] = true;
            }
        }
        let mut chosen = chosen;
        chosen.push(e);
        let rest: Set = x.iter().map(|b| !b).collect();
        if self.kclose(&rest).is_some() && chosen.iter().any(|&c| self.kclose_with(&rest, c).is_some()) {
            return Ok(None);
        }
        self.search(g, x, chosen)
    }
}

fn search_k(e: &CqeInstance, q: &UnionQuery) -> usize {
    q.max_len().max(e.policy.max_len()).max(1)
}

/// SC-entailment with a counterexample on `false`.
pub fn sc_entails_explain(e: &CqeInstance, q: &UnionQuery, limits: &Limits) -> Result<Verdict> {
    q.validate()?;
    if !q.is_boolean() {
        return Err(Error::InvalidQuery("SC-entailment needs a Boolean query".into()));
    }
    if !entails(&e.tbox, Premise::Abox(&e.abox), q) {
        return Ok(Verdict { answer: false, witness: Some(Witness::NotEntailed) });
    }
    if e.policy.has_existential_bodies() {
        return universe_search(e, q, limits);
    }
    let mut kernel = Kernel::new(e, q, limits);
    let found = if kernel.needs.len() == 1 { kernel.bcq_counterexample()? } else { kernel.counterexample()? };
    Ok(match found {
        None => Verdict { answer: true, witness: None },
        Some(g) => {
            let atoms = (0..g.len()).filter(|&i| g[i]).map(|i| kernel.atoms[i]).collect();
            Verdict { answer: false, witness: Some(Witness::Kernel(atoms)) }
        }
    })
}

/// Literal search for a censor of the `k`-universe violating `q`.
fn universe_search(e: &CqeInstance, q: &UnionQuery, limits: &Limits) -> Result<Verdict> {
    let universe = censor_universe(e, search_k(e, q), &q.disjuncts, limits)?;
    let mut search = CensorSearch::new(e, &universe, limits);
    let rw = Rewriting::new(q, &e.tbox);
    let members = universe.members.clone();
    let reject = |s: &Set| {
        let chosen: Vec<&Cq> = s.iter().zip(&members).filter(|(b, _)| **b).map(|(_, m)| m).collect();
        let atoms = freeze_atoms(chosen).expect("not bot");
        rw.holds(&Target::new(&atoms))
    };
    let mut found: Option<Set> = None;
    search.run(&reject, &mut |s| {
        found = Some(s.clone());
        true
    })?;
    Ok(match found {
        None => Verdict { answer: true, witness: None },
        Some(s) => Verdict { answer: false, witness: Some(Witness::Censor(search.to_queries(&s))) },
    })
}

pub fn sc_entails(e: &CqeInstance, q: &UnionQuery, limits: &Limits) -> Result<bool> {
    Ok(sc_entails_explain(e, q, limits)?.answer)
}

/// IC-entailment: some disjunct is SC-entailed.
pub fn ic_entails(e: &CqeInstance, q: &UnionQuery, limits: &Limits) -> Result<bool> {
    q.validate()?;
    for d in &q.disjuncts {
        if sc_entails(e, &UnionQuery::single(d.clone()), limits)? {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn entails_in(mode: Mode, e: &CqeInstance, q: &UnionQuery, limits: &Limits) -> Result<bool> {
    match mode {
        Mode::Sc => sc_entails(e, q, limits),
        Mode::Ic => ic_entails(e, q, limits),
    }
}

/// The optimal censors of one BCQ universe, enumerated once and then queried
/// by brute force. Slow, but a direct reading of the definitions.
pub struct CensorOracle<'a> {
    e: &'a CqeInstance,
    censors: Vec<Vec<Cq>>,
    common: Vec<Cq>,
}

impl<'a> CensorOracle<'a> {
    /// Enumerates the censors of the universe of BCQs with at most `k` atoms over
    /// the signature of `e` and `qs`. `k` defaults to the longest query or ED body.
    pub fn new(e: &'a CqeInstance, qs: &[&UnionQuery], k: Option<usize>, limits: &Limits) -> Result<Self> {
        let mut extra = Vec::new();
        for q in qs {
            q.validate()?;
            extra.extend(q.disjuncts.iter().cloned());
        }
        let k = k.unwrap_or_else(|| qs.iter().map(|q| search_k(e, q)).max().unwrap_or(1).max(e.policy.max_len()));
        let universe = censor_universe(e, k, &extra, limits)?;
        let censors = optimal_censors_in(e, &universe, limits)?;
        let mut common: BTreeSet<Cq> = censors.first().cloned().unwrap_or_default().into_iter().collect();
        for c in censors.iter().skip(1) {
            let set: BTreeSet<Cq> = c.iter().cloned().collect();
            common = common.intersection(&set).cloned().collect();
        }
        Ok(CensorOracle { e, censors, common: common.into_iter().collect() })
    }

    pub fn censors(&self) -> &[Vec<Cq>] {
        &self.censors
    }

    /// `q` holds in every optimal censor.
    pub fn sc(&self, q: &UnionQuery) -> bool {
        self.censors.iter().all(|c| entails(&self.e.tbox, Premise::Queries(c), q))
    }

    /// `q` holds in the intersection of the optimal censors.
    pub fn ic(&self, q: &UnionQuery) -> bool {
        entails(&self.e.tbox, Premise::Queries(&self.common), q)
    }
}

/// Enumerates every optimal censor of the universe and checks each one.
pub fn sc_entails_oracle(e: &CqeInstance, q: &UnionQuery, k: Option<usize>, limits: &Limits) -> Result<bool> {
    Ok(CensorOracle::new(e, &[q], k, limits)?.sc(q))
}

/// Evaluates `q` over the intersection of all optimal censors.
pub fn ic_entails_oracle(e: &CqeInstance, q: &UnionQuery, k: Option<usize>, limits: &Limits) -> Result<bool> {
    Ok(CensorOracle::new(e, &[q], k, limits)?.ic(q))
}
