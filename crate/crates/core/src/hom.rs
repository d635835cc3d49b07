//! Backtracking homomorphism search between atom sets.

use std::collections::HashMap;

use crate::model::{Atom, Sym, Term};

/// Variable bindings, kept as a small association list.
pub(crate) type Subst = Vec<(Sym, Term)>;

pub(crate) fn lookup(s: &Subst, v: Sym) -> Option<Term> {
    s.iter().rev().find(|(x, _)| *x == v).map(|&(_, t)| t)
}

pub(crate) fn apply(s: &Subst, t: Term) -> Term {
    match t {
        Term::Var(v) => lookup(s, v).unwrap_or(t),
        _ => t,
    }
}

/// Target atoms indexed by predicate.
pub(crate) struct Target {
    by_pred: HashMap<Sym, Vec<Atom>>,
}

impl Target {
    pub fn new<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut by_pred: HashMap<Sym, Vec<Atom>> = HashMap::new();
        for a in atoms {
            if let Some(p) = a.pred() {
                by_pred.entry(p).or_default().push(*a);
            }
        }
        Target { by_pred }
    }

    fn candidates(&self, p: Sym) -> &[Atom] {
        self.by_pred.get(&p).map_or(&[], |v| v.as_slice())
    }

    pub fn push(&mut self, a: Atom) {
        if let Some(p) = a.pred() {
            self.by_pred.entry(p).or_default().push(a);
        }
    }
}

/// Decides whether a source variable may be bound to a target term.
pub(crate) type Guard<'a> = &'a dyn Fn(Sym, &Term) -> bool;

fn bound_count(a: &Atom, s: &Subst) -> usize {
    a.args()
        .iter()
        .filter(|t| match t {
            Term::Var(v) => lookup(s, *v).is_some(),
            _ => true,
        })
        .count()
}

fn unify_atom(src: &Atom, tgt: &Atom, s: &mut Subst, guard: Guard) -> bool {
    if src.arity() != tgt.arity() {
        return false;
    }
    let mark = s.len();
    for (a, b) in src.args().iter().zip(tgt.args()) {
        let ok = match *a {
            Term::Var(v) => match lookup(s, v) {
                Some(t) => t == *b,
                None => {
                    if guard(v, b) {
                        s.push((v, *b));
                        true
                    } else {
                        false
                    }
                }
            },
            _ => a == b,
        };
        if !ok {
            s.truncate(mark);
            return false;
        }
    }
    true
}

fn go(
    src: &[Atom],
    done: &mut [bool],
    remaining: usize,
    tgt: &Target,
    s: &mut Subst,
    guard: Guard,
    visit: &mut dyn FnMut(&Subst) -> bool,
) -> bool {
    if remaining == 0 {
        return visit(s);
    }
    // most constrained atom next
    let mut pick = usize::MAX;
    let mut best = 0;
    for (i, a) in src.iter().enumerate() {
        if !done[i] {
            let c = bound_count(a, s);
            if pick == usize::MAX || c > best {
                pick = i;
                best = c;
            }
        }
    }
    let a = src[pick];
    let Some(p) = a.pred() else { return false };
    done[pick] = true;
    for cand in tgt.candidates(p) {
        let mark = s.len();
        if unify_atom(&a, cand, s, guard) && go(src, done, remaining - 1, tgt, s, guard, visit) {
            done[pick] = false;
            return true;
        }
        s.truncate(mark);
    }
    done[pick] = false;
    false
}

/// Calls `visit` on each homomorphism extending `s`; stops early when `visit` returns true.
/// Returns whether the search was stopped. Variables in `src` not yet bound are free;
/// constants and nulls in `src` must match exactly.
pub(crate) fn for_each(src: &[Atom], tgt: &Target, s: &mut Subst, guard: Guard, visit: &mut dyn FnMut(&Subst) -> bool) -> bool {
    if src.contains(&Atom::Bottom) {
        return false;
    }
    let mut done = vec![false; src.len()];
    go(src, &mut done, src.len(), tgt, s, guard, visit)
}

/// Finds one homomorphism; on success `s` holds it.
pub(crate) fn find(src: &[Atom], tgt: &Target, s: &mut Subst, guard: Guard) -> bool {
    let mut found: Option<Subst> = None;
    let stopped = for_each(src, tgt, s, guard, &mut |m| {
        found = Some(m.clone());
        true
    });
    if let Some(m) = found {
        *s = m;
    }
    stopped
}

pub(crate) fn exists(src: &[Atom], tgt: &Target, guard: Guard) -> bool {
    let mut s = Subst::new();
    for_each(src, tgt, &mut s, guard, &mut |_| true)
}

pub(crate) fn any_term(_: Sym, _: &Term) -> bool {
    true
}
