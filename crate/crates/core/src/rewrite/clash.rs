//! Clash formulas and the first-order rewritings of SC- and IC-entailment.

use std::collections::{BTreeSet, HashSet};

use serde_json::json;

use crate::censor::policy_cons;
use crate::error::{Error, Result};
use crate::model::{and_all, canonical_key, core_of, Atom, ConjunctiveQuery as Cq, Policy, Sym, TBox, Term, UnionQuery};
use crate::reasoner::{minimize_ucq, tbox_reduce, Rewriting};
use crate::Limits;

use super::formula::FoFormula;
use super::graph::is_acyclic;
use super::ucq::{ed_closure, ind_pred};
use super::DEFAULT_REWRITE_CAP;

/// Sizes behind one rewriting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub k: usize,
    pub h: usize,
    pub m: usize,
    /// Longest candidate clash considered, `m * k^h`.
    pub ell: usize,
    /// Candidate clash queries kept after deduplication.
    pub q_size: usize,
    /// Longest raw candidate assembled from ED-closure parts, before the `ell` cut.
    pub longest: usize,
    pub budget: usize,
}

impl Manifest {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "k": self.k,
            "h": self.h,
            "m": self.m,
            "ell": self.ell,
            "q_size": self.q_size,
            "longest": self.longest,
            "budget": self.budget,
        })
    }
}

fn pseudo(v: Sym) -> Term {
    Term::Const(Sym::new(&format!("%{}", &v.as_str()[1..])))
}

fn unpseudo(t: Term) -> Term {
    match t {
        Term::Const(c) if c.as_str().starts_with('%') => Term::Var(Sym::new(&format!("?{}", &c.as_str()[1..]))),
        _ => t,
    }
}

/// The conjunction of the policy closure of `q`, its answer variables read as constants.
/// ⊥ when the closure is poisoned.
pub fn phi_pc(t: &TBox, p: &Policy, q: &Cq) -> Cq {
    if q.is_bottom() {
        return Cq::bottom();
    }
    let answers = q.answer_var_names();
    let frozen = Cq::boolean(q.atoms.iter().map(|a| {
        a.map(|x| match x {
            Term::Var(v) if answers.contains(&v) => pseudo(v),
            _ => x,
        })
    }));
    let pc = policy_cons(t, p, &[frozen]);
    if pc.poisoned {
        return Cq::bottom();
    }
    let all = and_all(&pc.queries).expect("closure contains its seed");
    Cq::new(q.answer_vars.clone(), all.atoms.iter().map(|a| a.map(unpseudo)))
}

/// Splits `q` into groups of atoms linked by existential variables.
fn components(q: &Cq) -> Vec<Cq> {
    let ans = q.answer_var_names();
    let mut groups: Vec<(BTreeSet<Sym>, Vec<Atom>)> = Vec::new();
    for a in &q.atoms {
        let ex: BTreeSet<Sym> = a.vars().filter(|v| !ans.contains(v)).collect();
        let mut merged = (ex, vec![*a]);
        let mut i = 0;
        while i < groups.len() {
            if groups[i].0.is_disjoint(&merged.0) {
                i += 1;
            } else {
                let (vs, atoms) = groups.swap_remove(i);
                merged.0.extend(vs);
                merged.1.extend(atoms);
            }
        }
        groups.push(merged);
    }
    groups
        .into_iter()
        .map(|(_, atoms)| {
            let used: BTreeSet<Sym> = atoms.iter().flat_map(|a| a.vars().collect::<Vec<_>>()).collect();
            let mut free: Vec<Term> = Vec::new();
            for t in &q.answer_vars {
                if t.as_var().is_some_and(|v| used.contains(&v)) && !free.contains(t) {
                    free.push(*t);
                }
            }
            Cq::new(free, atoms)
        })
        .collect()
}

/// Emits formulas with bound variables that never capture a free one.
struct Builder<'a> {
    t: &'a TBox,
    p: &'a Policy,
    fresh: usize,
}

impl<'a> Builder<'a> {
    fn fresh(&mut self) -> Sym {
        let v = Sym::new(&format!("?e{}", self.fresh));
        self.fresh += 1;
        v
    }

    /// `PerfectRef(q, T)` with the answer variables of `q` left free.
    fn pr(&mut self, q: &Cq) -> FoFormula {
        if q.is_bottom() {
            return FoFormula::False;
        }
        let q = tbox_reduce(q, self.t);
        // parts sharing no existential variable are rewritten apart: the certain
        // answers of the conjunction are the intersection of theirs
        let parts = components(&q);
        if parts.len() > 1 {
            let conj: Vec<FoFormula> = parts.iter().map(|c| self.pr_connected(c)).collect();
            return FoFormula::and(conj);
        }
        self.pr_connected(&q)
    }

    fn pr_connected(&mut self, q: &Cq) -> FoFormula {
        let free = q.answer_vars.clone();
        let mut out = Vec::new();
        for r in minimize_ucq(Rewriting::of_cq(q, self.t).cqs) {
            if r.is_bottom() {
                continue;
            }
            let mut map: Vec<(Sym, Term)> = Vec::new();
            let mut eqs = Vec::new();
            for (x, a) in free.iter().zip(&r.answer_vars) {
                match *a {
                    Term::Var(v) if !map.iter().any(|m| m.0 == v) => map.push((v, *x)),
                    Term::Var(v) => {
                        let bound = map.iter().find(|m| m.0 == v).unwrap().1;
                        if bound != *x {
                            eqs.push(FoFormula::Eq(*x, bound));
                        }
                    }
                    c => {
                        if c != *x {
                            eqs.push(FoFormula::Eq(*x, c));
                        }
                    }
                }
            }
            let mut bound = Vec::new();
            for v in r.vars() {
                if !map.iter().any(|m| m.0 == v) {
                    let w = self.fresh();
                    map.push((v, Term::Var(w)));
                    bound.push(w);
                }
            }
            let rename = |t: Term| match t {
                Term::Var(v) => map.iter().find(|m| m.0 == v).map_or(t, |m| m.1),
                _ => t,
            };
            let atoms = r.atoms.iter().map(|a| FoFormula::Pred(a.map(rename)));
            out.push(FoFormula::exists(bound, FoFormula::and(atoms.chain(eqs))));
        }
        FoFormula::or(out)
    }

    fn clash(&mut self, qp: &[&Cq], qprime: &Cq) -> FoFormula {
        let pos = self.pr(&phi_pc(self.t, self.p, qprime));
        if pos == FoFormula::False {
            return FoFormula::False;
        }
        let mut parts = vec![pos];
        for qi in qp {
            let joint = and_all(&[qprime.clone(), (*qi).clone()]).expect("two conjuncts");
            parts.push(FoFormula::not(self.pr(&phi_pc(self.t, self.p, &joint))));
        }
        FoFormula::and(parts)
    }
}

/// `Clash(qp, q'(x), T, P)` with the answer variables of `qprime` free.
pub fn clash_formula(qp: &UnionQuery, qprime: &Cq, t: &TBox, p: &Policy) -> FoFormula {
    let mut b = Builder { t, p, fresh: 0 };
    let qs: Vec<&Cq> = qp.disjuncts.iter().collect();
    b.clash(&qs, qprime)
}

/// A nonempty subset of an ED-closure body with its universal variables marked.
struct Part {
    atoms: Vec<Atom>,
    universal: BTreeSet<Sym>,
    /// Existential variables also used by body atoms outside the subset.
    shared: BTreeSet<Sym>,
}

#[derive(Clone, Copy)]
enum Label {
    Const(Sym),
    Free(usize),
    Kept,
}

/// Candidate clash queries: each is a CQ whose answer variables are the free ones.
struct Candidates {
    keys: HashSet<Cq>,
    out: Vec<Cq>,
    ell: usize,
    cap: usize,
    steps: usize,
}

impl Candidates {
    fn add(&mut self, atoms: Vec<Atom>, free: Vec<Term>) -> Result<()> {
        self.steps += 1;
        if self.steps > self.cap.saturating_mul(50) {
            return Err(Error::limit("clash candidate enumeration", self.cap.saturating_mul(50)));
        }
        let q = core_of(&Cq::new(free.clone(), atoms));
        if q.len() > self.ell {
            return Ok(());
        }
        let marked = Cq::boolean(q.atoms.iter().copied().chain(free.iter().map(|&x| Atom::Concept(ind_pred(), x))));
        if self.keys.insert(canonical_key(&marked)) {
            self.out.push(q);
            if self.out.len() > self.cap {
                return Err(Error::limit("candidate clash queries", self.cap));
            }
        }
        Ok(())
    }
}

fn label_all(
    vars: &[(Sym, bool)],
    i: usize,
    labels: &mut Vec<Label>,
    blocks: usize,
    consts: &[Sym],
    emit: &mut dyn FnMut(&[Label], usize) -> Result<()>,
) -> Result<()> {
    if i == vars.len() {
        return emit(labels, blocks);
    }
    let (_, may_keep) = vars[i];
    if may_keep {
        labels.push(Label::Kept);
        label_all(vars, i + 1, labels, blocks, consts, emit)?;
        labels.pop();
        return Ok(());
    }
    for &c in consts {
        labels.push(Label::Const(c));
        label_all(vars, i + 1, labels, blocks, consts, emit)?;
        labels.pop();
    }
    for b in 0..=blocks {
        labels.push(Label::Free(b));
        label_all(vars, i + 1, labels, blocks.max(b + 1), consts, emit)?;
        labels.pop();
    }
    Ok(())
}

fn clash_candidates(
    t: &TBox,
    p: &Policy,
    q: &UnionQuery,
    m: usize,
    ell: usize,
    consts: &[Sym],
    cap: usize,
) -> Result<(Vec<Cq>, usize)> {
    let mut longest = 0;
    let mut cands = Candidates { keys: HashSet::new(), out: Vec::new(), ell, cap, steps: 0 };
    let mut preds: BTreeSet<(Sym, usize)> = q.predicates();
    preds.extend(p.predicates());
    preds.extend(t.predicates());
    for (pred, arity) in preds {
        let x = Term::var("x0");
        let atom = if arity == 1 { Atom::Concept(pred, x) } else { Atom::Role(pred, [x, Term::var("x1")]) };
        cands.add(vec![atom], Vec::new())?;
    }
    let mut parts: Vec<Part> = Vec::new();
    let mut seen: HashSet<Cq> = HashSet::new();
    for ed in ed_closure(p, t, DEFAULT_REWRITE_CAP)? {
        let body = &ed.body.atoms;
        let universal: BTreeSet<Sym> = ed.universals().into_iter().collect();
        let n = body.len();
        if n > 16 {
            return Err(Error::limit("ED-closure body length", 16));
        }
        for mask in 1u32..(1 << n) {
            let inside: Vec<Atom> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| body[i]).collect();
            let outside: BTreeSet<Sym> = (0..n).filter(|i| mask >> i & 1 == 0).flat_map(|i| body[i].vars()).collect();
            let part_vars: BTreeSet<Sym> = inside.iter().flat_map(|a| a.vars()).collect();
            let shared: BTreeSet<Sym> = part_vars
                .iter()
                .filter(|v| !universal.contains(v) && outside.contains(v))
                .copied()
                .collect();
            let key_atoms = inside.iter().copied().chain(
                part_vars
                    .iter()
                    .filter(|v| universal.contains(v) || shared.contains(v))
                    .map(|&v| Atom::Concept(ind_pred(), Term::Var(v))),
            );
            if seen.insert(canonical_key(&Cq::boolean(key_atoms))) {
                let universal = part_vars.iter().filter(|v| universal.contains(v)).copied().collect();
                parts.push(Part { atoms: inside, universal, shared });
            }
        }
    }
    // multisets of at most m parts
    let mut combo: Vec<usize> = Vec::new();
    fn combos(
        start: usize,
        left: usize,
        parts: &[Part],
        combo: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        if !combo.is_empty() {
            f(combo)?;
        }
        if left == 0 {
            return Ok(());
        }
        for i in start..parts.len() {
            combo.push(i);
            combos(i, left - 1, parts, combo, f)?;
            combo.pop();
        }
        Ok(())
    }
    combos(0, m, &parts, &mut combo, &mut |combo| {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut vars: Vec<(Sym, bool)> = Vec::new();
        for (j, &pi) in combo.iter().enumerate() {
            let part = &parts[pi];
            let rn = |v: Sym| Sym::new(&format!("?p{j}_{}", &v.as_str()[1..]));
            let pv: BTreeSet<Sym> = part.atoms.iter().flat_map(|a| a.vars()).collect();
            for v in pv {
                let keep = !part.universal.contains(&v) && !part.shared.contains(&v);
                vars.push((rn(v), keep));
            }
            atoms.extend(part.atoms.iter().map(|a| {
                a.map(|t| match t {
                    Term::Var(v) => Term::Var(rn(v)),
                    _ => t,
                })
            }));
        }
        longest = longest.max(atoms.len());
        if atoms.len() > ell {
            return Ok(());
        }
        let mut labels = Vec::new();
        label_all(&vars, 0, &mut labels, 0, consts, &mut |labels, blocks| {
            let free: Vec<Term> = (0..blocks).map(|b| Term::Var(Sym::new(&format!("?x{b}")))).collect();
            let sub = |t: Term| match t {
                Term::Var(v) => match vars.iter().position(|(w, _)| *w == v).map(|i| labels[i]) {
                    Some(Label::Const(c)) => Term::Const(c),
                    Some(Label::Free(b)) => free[b],
                    _ => t,
                },
                _ => t,
            };
            cands.add(atoms.iter().map(|a| a.map(sub)).collect(), free.clone())
        })
    })?;
    Ok((cands.out, longest))
}

/// The FO sentence that holds over an ABox exactly when the instance SC-entails `q`.
pub fn sc_rewriting(q: &UnionQuery, t: &TBox, p: &Policy, limits: &Limits) -> Result<(FoFormula, Manifest)> {
    if !is_acyclic(t, p) {
        return Err(Error::NotAcyclic);
    }
    let m = q.disjuncts.len();
    if m > 16 {
        return Err(Error::limit("query disjuncts", 16));
    }
    let k = p.max_len().max(1);
    let h = p.eds.len();
    let ell = m.saturating_mul(k.saturating_pow(h as u32));
    let mut consts: BTreeSet<Sym> = q.constants();
    consts.extend(p.constants());
    let consts: Vec<Sym> = consts.into_iter().collect();
    let (cands, longest) =
        if h == 0 { (Vec::new(), 0) } else { clash_candidates(t, p, q, m, ell, &consts, limits.q_cap)? };
    let manifest = Manifest { k, h, m, ell, q_size: cands.len(), longest, budget: limits.q_cap };

    let mut b = Builder { t, p, fresh: 0 };
    let prs: Vec<FoFormula> = q.disjuncts.iter().map(|qi| b.pr(qi)).collect();
    let mut disjuncts = Vec::new();
    for mask in 1u32..(1 << m) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let qp: Vec<&Cq> = (0..m).filter(|&i| inside(i)).map(|i| &q.disjuncts[i]).collect();
        let mut conj: Vec<FoFormula> = (0..m)
            .map(|i| if inside(i) { prs[i].clone() } else { FoFormula::not(prs[i].clone()) })
            .collect();
        for c in &cands {
            let xs: Vec<Sym> = c.answer_vars.iter().filter_map(Term::as_var).collect();
            let mut body = vec![b.clash(&qp, c)];
            for (i, &x) in xs.iter().enumerate() {
                body.push(FoFormula::Ind(Term::Var(x)));
                for &y in &xs[..i] {
                    body.push(FoFormula::not(FoFormula::Eq(Term::Var(x), Term::Var(y))));
                }
                for &k in &consts {
                    body.push(FoFormula::not(FoFormula::Eq(Term::Var(x), Term::Const(k))));
                }
            }
            conj.push(FoFormula::not(FoFormula::exists(xs, FoFormula::and(body))));
        }
        disjuncts.push(FoFormula::and(conj));
    }
    Ok((FoFormula::or(disjuncts), manifest))
}

/// The disjunction of the SC rewritings of each disjunct.
pub fn ic_rewriting(q: &UnionQuery, t: &TBox, p: &Policy, limits: &Limits) -> Result<(FoFormula, Manifest)> {
    let mut parts = Vec::new();
    let mut manifest: Option<Manifest> = None;
    for qi in &q.disjuncts {
        let (f, man) = sc_rewriting(&UnionQuery::single(qi.clone()), t, p, limits)?;
        parts.push(f);
        manifest = Some(match manifest {
            None => man,
            Some(acc) => Manifest { q_size: acc.q_size.max(man.q_size), longest: acc.longest.max(man.longest), ..acc },
        });
    }
    if parts.len() == 1 {
        return Ok((parts.pop().unwrap(), manifest.unwrap()));
    }
    let manifest = manifest.unwrap_or(Manifest {
        k: p.max_len().max(1),
        h: p.eds.len(),
        m: 1,
        ell: 0,
        q_size: 0,
        longest: 0,
        budget: limits.q_cap,
    });
    Ok((FoFormula::or(parts), manifest))
}
