//! Piece-unifier rewriting of CQs with `Ind` guards over existential rules.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{
    canonical_key, canonicalize, Atom, ConjunctiveQuery as Cq, EpistemicDependency as Ed, Policy, Sym, TBox, Term,
    Tgd,
};
use crate::unify::Unifier;

use super::tgd::tgd_translate;

/// The reserved unary predicate encoding `Ind` inside rewriting queries.
/// It cannot be written in a problem file.
pub fn ind_pred() -> Sym {
    static S: OnceLock<Sym> = OnceLock::new();
    *S.get_or_init(|| Sym::new("#Ind"))
}

fn is_ind(a: &Atom) -> bool {
    matches!(a, Atom::Concept(p, _) if *p == ind_pred())
}

/// The query without its `Ind` atoms.
pub fn no_ind(q: &Cq) -> Cq {
    Cq::new(q.answer_vars.clone(), q.atoms.iter().filter(|a| !is_ind(a)).copied())
}

fn ind_terms(q: &Cq) -> Vec<Term> {
    q.atoms.iter().filter(|a| is_ind(a)).map(|a| a.args()[0]).collect()
}

fn rename_tgd(tgd: &Tgd, used: &BTreeSet<Sym>) -> Tgd {
    let mut vars: BTreeSet<Sym> = BTreeSet::new();
    for a in tgd.body.iter().chain(&tgd.head) {
        vars.extend(a.vars());
    }
    let mut map: Vec<(Sym, Sym)> = Vec::new();
    let mut n = 0;
    for v in vars {
        let fresh = loop {
            let c = Sym::new(&format!("?t_{n}"));
            n += 1;
            if !used.contains(&c) {
                break c;
            }
        };
        map.push((v, fresh));
    }
    let r = |t: Term| match t {
        Term::Var(v) => Term::Var(map.iter().find(|(x, _)| *x == v).map_or(v, |m| m.1)),
        _ => t,
    };
    let rv = |v: &Sym| match r(Term::Var(*v)) {
        Term::Var(x) => x,
        _ => unreachable!(),
    };
    Tgd {
        body: tgd.body.iter().map(|a| a.map(r)).collect(),
        ind: tgd.ind.iter().map(rv).collect(),
        head: tgd.head.iter().map(|a| a.map(r)).collect(),
        existentials: tgd.existentials.iter().map(rv).collect(),
        frontier: tgd.frontier.iter().map(rv).collect(),
    }
}

/// Queries obtained from `cur` by one single-piece unifier with `tgd`.
fn rewrite_step(cur: &Cq, tgd: &Tgd, out: &mut dyn FnMut(Cq)) {
    let tgd = rename_tgd(tgd, &cur.vars());
    let atoms: Vec<Atom> = cur.atoms.iter().filter(|a| !is_ind(a)).copied().collect();
    let inds = ind_terms(cur);
    let answers: Vec<Term> = cur.answer_vars.clone();
    let cur_vars = cur.vars();
    let rank = |t: Term| -> u8 {
        match t {
            Term::Var(_) if answers.contains(&t) => 2,
            Term::Var(v) if cur_vars.contains(&v) => 1,
            _ => 0,
        }
    };
    // options[i]: head atoms atom i may be mapped to
    let options: Vec<Vec<usize>> = atoms
        .iter()
        .map(|a| {
            tgd.head
                .iter()
                .enumerate()
                .filter(|(_, h)| h.pred() == a.pred() && h.arity() == a.arity())
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let n = atoms.len();
    let mut choice: Vec<Option<usize>> = vec![None; n];
    fn each(i: usize, options: &[Vec<usize>], choice: &mut Vec<Option<usize>>, f: &mut dyn FnMut(&[Option<usize>])) {
        if i == options.len() {
            f(choice);
            return;
        }
        choice[i] = None;
        each(i + 1, options, choice, f);
        for &j in &options[i] {
            choice[i] = Some(j);
            each(i + 1, options, choice, f);
        }
        choice[i] = None;
    }
    each(0, &options, &mut choice, &mut |choice| {
        if choice.iter().all(Option::is_none) {
            return;
        }
        let mut u = Unifier::new();
        for (i, c) in choice.iter().enumerate() {
            if let Some(j) = c {
                for (x, y) in atoms[i].args().iter().zip(tgd.head[*j].args()) {
                    if !u.union(*x, *y, &rank) {
                        return;
                    }
                }
            }
        }
        let in_piece = |i: usize| choice[i].is_some();
        // terms occurring outside the piece, Ind atoms included
        let mut outside: BTreeSet<Term> = inds.iter().copied().collect();
        for (i, a) in atoms.iter().enumerate() {
            if !in_piece(i) {
                outside.extend(a.args().iter().copied());
            }
        }
        let mut terms: BTreeSet<Term> = cur_vars.iter().map(|&v| Term::Var(v)).collect();
        for a in &tgd.head {
            terms.extend(a.args().iter().copied());
        }
        for &z in &tgd.existentials {
            let rz = u.find(Term::Var(z));
            if !rz.is_var() {
                return;
            }
            for &t in &terms {
                if t == Term::Var(z) || u.find(t) != rz {
                    continue;
                }
                match t {
                    Term::Var(v) if tgd.existentials.contains(&v) || tgd.frontier.contains(&v) => return,
                    Term::Var(v) if cur_vars.contains(&v) => {
                        if answers.contains(&t) || outside.contains(&t) {
                            return;
                        }
                    }
                    Term::Var(_) => {}
                    _ => return,
                }
            }
        }
        // single piece: atoms connected through variables glued to existentials
        let ex_classes: BTreeSet<Term> = tgd.existentials.iter().map(|&z| u.find(Term::Var(z))).collect();
        let piece: Vec<usize> = (0..n).filter(|&i| in_piece(i)).collect();
        if piece.len() > 1 {
            let mut reached = vec![piece[0]];
            let mut k = 0;
            while k < reached.len() {
                let a = atoms[reached[k]];
                k += 1;
                for &b in &piece {
                    if reached.contains(&b) {
                        continue;
                    }
                    let linked = a.args().iter().any(|x| {
                        let rx = u.find(*x);
                        ex_classes.contains(&rx) && atoms[b].args().iter().any(|y| u.find(*y) == rx)
                    });
                    if linked {
                        reached.push(b);
                    }
                }
            }
            if reached.len() != piece.len() {
                return;
            }
        }
        let mut new_atoms: Vec<Atom> = tgd.body.iter().map(|a| a.map(|t| u.find(t))).collect();
        for (i, a) in atoms.iter().enumerate() {
            if !in_piece(i) {
                new_atoms.push(a.map(|t| u.find(t)));
            }
        }
        for t in inds.iter().copied().chain(tgd.ind.iter().map(|&v| Term::Var(v))) {
            let t = u.find(t);
            if !t.is_const() {
                new_atoms.push(Atom::Concept(ind_pred(), t));
            }
        }
        let answer = cur.answer_vars.iter().map(|&t| u.find(t)).collect();
        out(Cq::new(answer, new_atoms));
    });
}

/// Breadth-first piece rewriting of `q` (which may carry `Ind` atoms) under `tgds`,
/// deduplicated up to isomorphism. The input is the first element of the result.
pub fn ucq_rewrite(q: &Cq, tgds: &[Tgd], budget: usize) -> Result<Vec<Cq>> {
    let mut seen: HashSet<Cq> = HashSet::new();
    let start = canonicalize(q);
    seen.insert(canonical_key(&start));
    let mut out = vec![start];
    let mut i = 0;
    while i < out.len() {
        let cur = out[i].clone();
        i += 1;
        let mut fresh: Vec<Cq> = Vec::new();
        for tgd in tgds {
            rewrite_step(&cur, tgd, &mut |c| fresh.push(c));
        }
        for c in fresh {
            if seen.insert(canonical_key(&c)) {
                out.push(canonicalize(&c));
                if out.len() > budget {
                    return Err(Error::limit("UCQ rewriting", budget));
                }
            }
        }
    }
    Ok(out)
}

/// Each ED with its body replaced by every rewriting of it under `TGD(P) ∪ TGD(T)`.
///
/// Variables guarded by `Ind` in a rewriting stay universally quantified, as do the
/// images of the original universal variables; `Ind` atoms are then dropped.
pub fn ed_closure(p: &Policy, t: &TBox, budget: usize) -> Result<Vec<Ed>> {
    let tgds = tgd_translate(t, p);
    let mut out = Vec::new();
    for ed in &p.eds {
        let uni = ed.universals();
        for r in ucq_rewrite(&ed.body, &tgds, budget)? {
            let mut universals: Vec<Sym> = Vec::new();
            for t in r.answer_vars.iter().copied().chain(ind_terms(&r)) {
                if let Term::Var(v) = t {
                    if !universals.contains(&v) {
                        universals.push(v);
                    }
                }
            }
            let image = |v: Sym| uni.iter().position(|&x| x == v).map(|i| r.answer_vars[i]);
            // head existentials are renamed so they cannot meet a body variable
            let head = ed.head.as_ref().map(|h| {
                h.atoms
                    .iter()
                    .map(|a| a.map(|t| match t {
                        Term::Var(v) => image(v).unwrap_or_else(|| Term::Var(Sym::new(&format!("?h_{}", &v.as_str()[1..])))),
                        _ => t,
                    }))
                    .collect::<Vec<_>>()
            });
            let frontier: Vec<Sym> = ed
                .frontier
                .iter()
                .filter_map(|&v| image(v).and_then(|t| t.as_var()))
                .fold(Vec::new(), |mut acc, v| {
                    if !acc.contains(&v) {
                        acc.push(v);
                    }
                    acc
                });
            let body = no_ind(&r).atoms;
            out.push(Ed::with_universals(universals, body, head, frontier)?);
        }
    }
    Ok(out)
}
