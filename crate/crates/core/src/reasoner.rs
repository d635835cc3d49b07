//! DL-Lite_R reasoning: evaluation, PerfectRef, consistency, chase, and the BCQ_k universe.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::hom::{self, Subst, Target};
use crate::model::{
    canon_var, canonical_core, canonical_key, canonicalize, core_of, freeze_atoms, ABox, Atom, Basic, BasicConcept,
    ConjunctiveQuery as Cq, Polarity, Sym, TBox, TBoxAxiom, Term, Tgd, UnionQuery,
};
use crate::unify::Unifier;

pub const DEFAULT_UNIVERSE_CAP: usize = 100_000;
const CHASE_ATOM_CAP: usize = 20_000;

/// True iff some homomorphism maps `q` into `atoms`. ⊥ never holds.
pub fn evaluate_bcq(atoms: &[Atom], q: &Cq) -> bool {
    if q.is_bottom() {
        return false;
    }
    hom::exists(&q.atoms, &Target::new(atoms), &hom::any_term)
}

fn fresh_var(used: &BTreeSet<Sym>) -> Sym {
    (0..).map(canon_var).find(|v| !used.contains(v)).expect("unbounded pool")
}

fn is_unbound(q: &Cq, t: Term) -> bool {
    let Term::Var(v) = t else { return false };
    if q.answer_vars.contains(&t) {
        return false;
    }
    q.atoms.iter().flat_map(|a| a.vars().collect::<Vec<_>>()).filter(|&x| x == v).count() == 1
}

/// Result of applying the positive inclusion `ax` to the atom `g` of `q`, if applicable.
fn gr(g: &Atom, ax: &TBoxAxiom, q: &Cq, fresh: Term) -> Option<Atom> {
    match (*g, ax.lhs, ax.rhs) {
        (Atom::Concept(a, x), Basic::Concept(lhs), Basic::Concept(BasicConcept::Atomic(b))) if a == b => {
            Some(lhs.atom(x, fresh))
        }
        (Atom::Role(p, [x1, x2]), Basic::Concept(lhs), Basic::Concept(BasicConcept::Exists(r))) if r.name == p => {
            if !r.inverse && is_unbound(q, x2) {
                Some(lhs.atom(x1, fresh))
            } else if r.inverse && is_unbound(q, x1) {
                Some(lhs.atom(x2, fresh))
            } else {
                None
            }
        }
        (Atom::Role(p, [x1, x2]), Basic::Role(r1), Basic::Role(r2)) if r2.name == p => {
            // g = r2(u, v)
            let (u, v) = if r2.inverse { (x2, x1) } else { (x1, x2) };
            Some(r1.atom(u, v))
        }
        _ => None,
    }
}

/// Most general unifier of two atoms' arguments, preferring answer variables as representatives.
fn unify_atoms(a: &Atom, b: &Atom, answers: &[Term]) -> Option<Unifier> {
    if a.pred() != b.pred() || a.arity() != b.arity() {
        return None;
    }
    let mut u = Unifier::new();
    let rank = |t: Term| u8::from(answers.contains(&t));
    for (x, y) in a.args().iter().zip(b.args()) {
        if !u.union(*x, *y, &rank) {
            return None;
        }
    }
    Some(u)
}

/// PerfectRef of one CQ; answer variables may be specialized by the reduce step.
pub(crate) fn perfect_ref_cq(q: &Cq, t: &TBox) -> Vec<Cq> {
    if q.is_bottom() {
        return vec![q.clone()];
    }
    let axioms: Vec<&TBoxAxiom> = t.inclusions().collect();
    let mut seen: HashSet<Cq> = HashSet::new();
    let mut out: Vec<Cq> = Vec::new();
    // an equivalent query has an equivalent rewriting, so only cores are expanded
    let push = |c: Cq, seen: &mut HashSet<Cq>, out: &mut Vec<Cq>| {
        let c = core_of(&c);
        if seen.insert(canonical_key(&c)) {
            out.push(canonicalize(&c));
        }
    };
    push(q.clone(), &mut seen, &mut out);
    let mut i = 0;
    while i < out.len() {
        let cur = out[i].clone();
        i += 1;
        let fresh = Term::Var(fresh_var(&cur.vars()));
        for (ai, g) in cur.atoms.iter().enumerate() {
            for ax in &axioms {
                if let Some(na) = gr(g, ax, &cur, fresh) {
                    let mut atoms = cur.atoms.clone();
                    atoms[ai] = na;
                    push(Cq::new(cur.answer_vars.clone(), atoms), &mut seen, &mut out);
                }
            }
        }
        for a in 0..cur.atoms.len() {
            for b in a + 1..cur.atoms.len() {
                if let Some(u) = unify_atoms(&cur.atoms[a], &cur.atoms[b], &cur.answer_vars) {
                    push(cur.substitute(|t| u.find(t)), &mut seen, &mut out);
                }
            }
        }
    }
    out
}

/// PerfectRef: a UCQ whose evaluation over any ABox equals certain answers under `t`.
pub fn perfect_ref(q: &UnionQuery, t: &TBox) -> UnionQuery {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for d in &q.disjuncts {
        for r in perfect_ref_cq(d, t) {
            if seen.insert(canonical_key(&r)) {
                out.push(r);
            }
        }
    }
    UnionQuery::new(out)
}

/// `general` maps into `special` with answer tuples aligned, so `special` adds no answers.
fn contains(general: &Cq, special: &Cq) -> bool {
    let mut sub = Subst::new();
    for (&g, &s) in general.answer_vars.iter().zip(&special.answer_vars) {
        match g {
            Term::Var(v) => match hom::lookup(&sub, v) {
                Some(t) if t != s => return false,
                Some(_) => {}
                None => sub.push((v, s)),
            },
            c if c != s => return false,
            _ => {}
        }
    }
    hom::find(&general.atoms, &Target::new(&special.atoms), &mut sub, &hom::any_term)
}

/// Cores of `cqs` minus every disjunct contained in another: an equivalent, shorter UCQ.
pub fn minimize_ucq(cqs: Vec<Cq>) -> Vec<Cq> {
    let mut cqs: Vec<Cq> = cqs.iter().filter(|c| !c.is_bottom()).map(core_of).collect();
    cqs.sort_by_key(|c| c.atoms.len());
    let mut kept: Vec<Cq> = Vec::new();
    for c in cqs {
        if !kept.iter().any(|k| contains(k, &c)) {
            kept.retain(|k| !contains(&c, k));
            kept.push(c);
        }
    }
    kept
}

/// Drops atoms that the rest of `q` already implies under `t`, so that PerfectRef
/// has fewer atoms to expand. Implication is checked on a truncated chase, which
/// can only miss a drop, never make a wrong one.
pub fn tbox_reduce(q: &Cq, t: &TBox) -> Cq {
    let mut q = core_of(q);
    if q.is_bottom() {
        return q;
    }
    let tgds = tbox_tgds(t);
    if tgds.is_empty() {
        return q;
    }
    let fixed: Subst = q.answer_var_names().into_iter().map(|v| (v, Term::Var(v))).collect();
    let mut i = 0;
    while i < q.atoms.len() && q.atoms.len() > 1 {
        let rest: Vec<Atom> = q.atoms.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, a)| *a).collect();
        let depth = q.atoms.len() + t.axioms.len() + 1;
        let implied = chase_capped(&rest, &tgds, depth, CHASE_ATOM_CAP).is_ok_and(|chased| {
            hom::find(&q.atoms, &Target::new(&chased), &mut fixed.clone(), &hom::any_term)
        });
        if implied {
            q = Cq::new(q.answer_vars.clone(), rest);
        } else {
            i += 1;
        }
    }
    q
}

/// A UCQ rewritten once and evaluated many times.
#[derive(Clone, Debug)]
pub struct Rewriting {
    pub cqs: Vec<Cq>,
}

impl Rewriting {
    pub fn new(q: &UnionQuery, t: &TBox) -> Self {
        Rewriting { cqs: perfect_ref(q, t).disjuncts }
    }

    pub fn of_cq(q: &Cq, t: &TBox) -> Self {
        Rewriting { cqs: perfect_ref_cq(q, t) }
    }

    /// Boolean evaluation.
    pub(crate) fn holds(&self, tgt: &Target) -> bool {
        self.cqs
            .iter()
            .any(|c| !c.is_bottom() && hom::exists(&c.atoms, tgt, &hom::any_term))
    }

    /// All answer tuples; with `constants_only`, answer positions must bind to constants.
    pub(crate) fn answers(&self, tgt: &Target, constants_only: bool) -> BTreeSet<Vec<Term>> {
        let mut out = BTreeSet::new();
        for c in &self.cqs {
            if c.is_bottom() {
                continue;
            }
            if constants_only && c.answer_vars.iter().any(|t| !t.is_var() && !t.is_const()) {
                continue;
            }
            let ans: Vec<Sym> = c.answer_vars.iter().filter_map(Term::as_var).collect();
            let guard = |v: Sym, t: &Term| !constants_only || t.is_const() || !ans.contains(&v);
            let mut s = Subst::new();
            hom::for_each(&c.atoms, tgt, &mut s, &guard, &mut |m| {
                out.insert(c.answer_vars.iter().map(|&t| hom::apply(m, t)).collect());
                false
            });
        }
        out
    }
}

/// What an entailment check is evaluated over.
#[derive(Clone, Copy, Debug)]
pub enum Premise<'a> {
    Abox(&'a ABox),
    Atoms(&'a [Atom]),
    /// A set of BCQs, frozen before evaluation.
    Queries(&'a [Cq]),
}

impl Premise<'_> {
    pub(crate) fn atoms(&self) -> Vec<Atom> {
        match self {
            Premise::Abox(a) => a.atoms.iter().copied().collect(),
            Premise::Atoms(a) => a.to_vec(),
            Premise::Queries(qs) => freeze_atoms(qs.iter()).expect("premise queries must not be bot"),
        }
    }
}

/// `T ∪ premise ⊨ q` for a Boolean UCQ.
pub fn entails(t: &TBox, premise: Premise<'_>, q: &UnionQuery) -> bool {
    let atoms = premise.atoms();
    Rewriting::new(q, t).holds(&Target::new(&atoms))
}

/// Violation queries of the disjointness axioms.
fn violation_queries(t: &TBox) -> Vec<Cq> {
    let (x, y, z) = (Term::var("x"), Term::var("y"), Term::var("z"));
    t.axioms
        .iter()
        .filter(|a| a.polarity == Polarity::Disjointness)
        .map(|a| match (a.lhs, a.rhs) {
            (Basic::Concept(b1), Basic::Concept(b2)) => Cq::boolean([b1.atom(x, y), b2.atom(x, z)]),
            (Basic::Role(r1), Basic::Role(r2)) => Cq::boolean([r1.atom(x, y), r2.atom(x, y)]),
            _ => unreachable!("axiom sorts are checked at construction"),
        })
        .collect()
}

/// True iff no disjointness axiom is violated by `t ∪ atoms`.
pub fn is_consistent(t: &TBox, atoms: &[Atom]) -> bool {
    let v = violation_queries(t);
    if v.is_empty() {
        return true;
    }
    !Rewriting::new(&UnionQuery::new(v), t).holds(&Target::new(atoms))
}

/// The existential rule of a positive inclusion; `None` for disjointness.
pub fn tbox_tgd(ax: &TBoxAxiom) -> Option<Tgd> {
    if !ax.is_inclusion() {
        return None;
    }
    let (x, y, z) = (Term::var("x"), Term::var("y"), Term::var("z"));
    let (body, head) = match (ax.lhs, ax.rhs) {
        (Basic::Concept(l), Basic::Concept(r)) => (l.atom(x, y), r.atom(x, z)),
        (Basic::Role(l), Basic::Role(r)) => (l.atom(x, y), r.atom(x, y)),
        _ => unreachable!("axiom sorts are checked at construction"),
    };
    Some(Tgd::new(vec![body], Vec::new(), vec![head]))
}

pub fn tbox_tgds(t: &TBox) -> Vec<Tgd> {
    t.axioms.iter().filter_map(tbox_tgd).collect()
}

fn null_counter_start(atoms: &[Atom]) -> usize {
    atoms
        .iter()
        .flat_map(|a| a.args())
        .filter_map(|t| match t {
            Term::Null(n) => n.as_str().strip_prefix("_c").and_then(|d| d.parse::<usize>().ok()),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

pub(crate) fn chase_capped(atoms: &[Atom], tgds: &[Tgd], depth: usize, cap: usize) -> Result<Vec<Atom>> {
    let mut set: BTreeSet<Atom> = atoms.iter().copied().collect();
    let mut counter = null_counter_start(atoms);
    for _ in 0..depth {
        let snapshot: Vec<Atom> = set.iter().copied().collect();
        let tgt = Target::new(&snapshot);
        let mut triggers: Vec<(usize, Subst)> = Vec::new();
        for (ti, tgd) in tgds.iter().enumerate() {
            let guard = |v: Sym, t: &Term| !tgd.ind.contains(&v) || t.is_const();
            let mut s = Subst::new();
            hom::for_each(&tgd.body, &tgt, &mut s, &guard, &mut |m| {
                triggers.push((ti, m.clone()));
                false
            });
        }
        let mut current = Target::new(&snapshot);
        let mut added = false;
        for (ti, m) in triggers {
            let tgd = &tgds[ti];
            let mut s: Subst = tgd
                .frontier
                .iter()
                .map(|&v| (v, hom::lookup(&m, v).expect("frontier bound by body")))
                .collect();
            if hom::find(&tgd.head, &current, &mut s, &hom::any_term) {
                continue;
            }
            let mut full = m.clone();
            for &z in &tgd.existentials {
                counter += 1;
                full.push((z, Term::Null(Sym::new(&format!("_c{counter}")))));
            }
            for h in &tgd.head {
                let a = h.map(|t| hom::apply(&full, t));
                if set.insert(a) {
                    current.push(a);
                    added = true;
                }
            }
            if set.len() > cap {
                return Err(Error::limit("chase", cap));
            }
        }
        if !added {
            break;
        }
    }
    Ok(set.into_iter().collect())
}

/// Restricted breadth-first chase for `depth` rounds. Ind-guarded body variables
/// match constants only.
pub fn chase(atoms: &[Atom], tgds: &[Tgd], depth: usize) -> Vec<Atom> {
    chase_capped(atoms, tgds, depth, usize::MAX).expect("uncapped chase")
}

/// Predicates and constants a universe ranges over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub predicates: BTreeSet<(Sym, usize)>,
    pub constants: BTreeSet<Sym>,
}

/// Canonical BCQs with at most `k` atoms entailed by `T ∪ A`.
#[derive(Clone, Debug)]
pub struct CensorUniverse {
    pub k: usize,
    pub members: Vec<Cq>,
    pub signature: Signature,
}

/// Set partitions of `0..n` as restricted growth strings.
fn partitions(n: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(i: usize, n: usize, blocks: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if i == n {
            f(cur);
            return;
        }
        for b in 0..=blocks {
            cur.push(b);
            go(i + 1, n, blocks.max(b + 1), cur, f);
            cur.pop();
        }
    }
    go(0, n, 0, &mut Vec::new(), f);
}

/// Every query obtained from `image` by replacing terms with variables such that
/// the identity on `image` stays a homomorphism: positions with equal targets may
/// share variables, constants may be kept.
fn generalizations(image: &[Atom], keep_const: &dyn Fn(Sym) -> bool, f: &mut dyn FnMut(Vec<Atom>)) {
    let mut positions: Vec<(usize, usize, Term)> = Vec::new();
    for (ai, a) in image.iter().enumerate() {
        for (pi, t) in a.args().iter().enumerate() {
            positions.push((ai, pi, *t));
        }
    }
    let mut groups: Vec<(Term, Vec<usize>)> = Vec::new();
    for (i, p) in positions.iter().enumerate() {
        match groups.iter_mut().find(|(t, _)| *t == p.2) {
            Some(g) => g.1.push(i),
            None => groups.push((p.2, vec![i])),
        }
    }
    // For each group, options are assignments position -> Some(var class) or None (keep constant).
    let mut options: Vec<Vec<Vec<Option<usize>>>> = Vec::new();
    for (t, idx) in &groups {
        let n = idx.len();
        let mut opts = Vec::new();
        let can_keep = matches!(t, Term::Const(c) if keep_const(*c));
        let masks: Vec<u32> = if can_keep { (0..1u32 << n).collect() } else { vec![0] };
        for keep in masks {
            let free: Vec<usize> = (0..n).filter(|i| keep >> i & 1 == 0).collect();
            partitions(free.len(), &mut |blocks| {
                let mut asg = vec![None; n];
                for (j, &fi) in free.iter().enumerate() {
                    asg[fi] = Some(blocks[j]);
                }
                opts.push(asg);
            });
        }
        options.push(opts);
    }
    let mut choice = vec![0usize; groups.len()];
    loop {
        let mut terms: Vec<Term> = positions.iter().map(|p| p.2).collect();
        let mut next_var = 0usize;
        for (gi, (_, idx)) in groups.iter().enumerate() {
            let asg = &options[gi][choice[gi]];
            let base = next_var;
            let mut used = 0;
            for (j, &pos) in idx.iter().enumerate() {
                if let Some(b) = asg[j] {
                    terms[pos] = Term::Var(canon_var(base + b));
                    used = used.max(b + 1);
                }
            }
            next_var += used;
        }
        let mut k = 0;
        let atoms: Vec<Atom> = image
            .iter()
            .map(|a| {
                a.map(|_| {
                    k += 1;
                    terms[k - 1]
                })
            })
            .collect();
        f(atoms);
        // advance the mixed-radix counter
        let mut g = 0;
        loop {
            if g == groups.len() {
                return;
            }
            choice[g] += 1;
            if choice[g] < options[g].len() {
                break;
            }
            choice[g] = 0;
            g += 1;
        }
    }
}

/// Canonical cores of all BCQs with at most `k` atoms over `sig` entailed by `T ∪ atoms`.
///
/// Candidates are the homomorphic pre-images of at most `k` atoms of a chase deep
/// enough to host every such match.
pub fn bcq_cons_k(t: &TBox, atoms: &[Atom], k: usize, sig: &Signature, cap: usize) -> Result<CensorUniverse> {
    let depth = k + 2 * t.role_names().len() + 1;
    let chased = chase_capped(atoms, &tbox_tgds(t), depth, CHASE_ATOM_CAP)?;
    let pool: Vec<Atom> = chased
        .into_iter()
        .filter(|a| a.pred().is_some_and(|p| sig.predicates.contains(&(p, a.arity()))))
        .collect();
    let keep = |c: Sym| sig.constants.contains(&c);
    let mut raw_seen: HashSet<Cq> = HashSet::new();
    let mut members: HashSet<Cq> = HashSet::new();
    let mut count = 0usize;
    let mut over = false;
    let n = pool.len();
    let mut idx: Vec<usize> = Vec::new();
    // multisets of pool indices, nondecreasing, size 1..=k
    fn multisets(n: usize, k: usize, start: usize, idx: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if !idx.is_empty() && f(idx) {
            return true;
        }
        if idx.len() == k {
            return false;
        }
        for i in start..n {
            idx.push(i);
            let stop = multisets(n, k, i, idx, f);
            idx.pop();
            if stop {
                return true;
            }
        }
        false
    }
    multisets(n, k, 0, &mut idx, &mut |sel| {
        let image: Vec<Atom> = sel.iter().map(|&i| pool[i]).collect();
        generalizations(&image, &keep, &mut |cand| {
            count += 1;
            if count > cap {
                over = true;
                return;
            }
            let q = Cq::boolean(cand);
            if raw_seen.insert(canonical_key(&q)) {
                members.insert(canonical_core(&q));
            }
        });
        over
    });
    if over {
        return Err(Error::limit("universe candidates", cap));
    }
    let mut keyed: BTreeSet<Cq> = BTreeSet::new();
    let mut out = Vec::new();
    for m in members {
        if keyed.insert(canonical_key(&m)) {
            out.push(m);
        }
    }
    out.sort_by(|a, b| (a.len(), a.vars().len(), a).cmp(&(b.len(), b.vars().len(), b)));
    Ok(CensorUniverse { k, members: out, signature: sig.clone() })
}

/// Ground atoms entailed by `T ∪ atoms`, one rewriting per predicate.
pub(crate) struct GroundOracle {
    preds: Vec<(Sym, usize, Rewriting)>,
}

impl GroundOracle {
    pub fn new(t: &TBox, preds: impl IntoIterator<Item = (Sym, usize)>) -> Self {
        let (x, y) = (Term::var("x"), Term::var("y"));
        let mut all: BTreeSet<(Sym, usize)> = preds.into_iter().collect();
        all.extend(t.predicates());
        let preds = all
            .into_iter()
            .map(|(p, n)| {
                let q = if n == 1 {
                    Cq::new(vec![x], [Atom::Concept(p, x)])
                } else {
                    Cq::new(vec![x, y], [Atom::Role(p, [x, y])])
                };
                (p, n, Rewriting::of_cq(&q, t))
            })
            .collect();
        GroundOracle { preds }
    }

    pub fn consequences(&self, atoms: &[Atom]) -> BTreeSet<Atom> {
        let tgt = Target::new(atoms);
        let mut out = BTreeSet::new();
        for (p, n, r) in &self.preds {
            for tuple in r.answers(&tgt, true) {
                if tuple.iter().all(Term::is_const) {
                    out.insert(if *n == 1 { Atom::Concept(*p, tuple[0]) } else { Atom::Role(*p, [tuple[0], tuple[1]]) });
                }
            }
        }
        out
    }
}
