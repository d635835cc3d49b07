//! First-order formulas over the ABox vocabulary plus `Ind` and equality.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::hom::{lookup, Subst};
use crate::model::{ABox, Atom, ConjunctiveQuery as Cq, Sym, Term};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FoFormula {
    Pred(Atom),
    /// The term denotes a constant of the ABox signature.
    Ind(Term),
    Eq(Term, Term),
    And(Vec<FoFormula>),
    Or(Vec<FoFormula>),
    Not(Box<FoFormula>),
    Exists(Vec<Sym>, Box<FoFormula>),
    True,
    False,
}

impl FoFormula {
    /// Conjunction with `True` dropped, `False` absorbing and nested conjunctions flattened.
    pub fn and(parts: impl IntoIterator<Item = FoFormula>) -> FoFormula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                FoFormula::True => {}
                FoFormula::False => return FoFormula::False,
                FoFormula::And(xs) => out.extend(xs),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => FoFormula::True,
            1 => out.pop().unwrap(),
            _ => FoFormula::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = FoFormula>) -> FoFormula {
        let mut out = Vec::new();
        for p in parts {
            match p {
                FoFormula::False => {}
                FoFormula::True => return FoFormula::True,
                FoFormula::Or(xs) => out.extend(xs),
                p => out.push(p),
            }
        }
        match out.len() {
            0 => FoFormula::False,
            1 => out.pop().unwrap(),
            _ => FoFormula::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: FoFormula) -> FoFormula {
        match f {
            FoFormula::True => FoFormula::False,
            FoFormula::False => FoFormula::True,
            FoFormula::Not(g) => *g,
            f => FoFormula::Not(Box::new(f)),
        }
    }

    pub fn exists(vars: Vec<Sym>, f: FoFormula) -> FoFormula {
        match f {
            FoFormula::True | FoFormula::False => f,
            _ if vars.is_empty() => f,
            f => FoFormula::Exists(vars, Box::new(f)),
        }
    }

    /// `∃ existentials. atoms`, leaving the answer variables free. ⊥ becomes `False`.
    pub fn from_cq(q: &Cq) -> FoFormula {
        if q.is_bottom() {
            return FoFormula::False;
        }
        let body = FoFormula::and(q.atoms.iter().map(|&a| FoFormula::Pred(a)));
        FoFormula::exists(q.existential_vars(), body)
    }

    pub fn from_ucq<'a>(qs: impl IntoIterator<Item = &'a Cq>) -> FoFormula {
        FoFormula::or(qs.into_iter().map(FoFormula::from_cq))
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            FoFormula::And(xs) | FoFormula::Or(xs) => 1 + xs.iter().map(Self::size).sum::<usize>(),
            FoFormula::Not(f) | FoFormula::Exists(_, f) => 1 + f.size(),
            _ => 1,
        }
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.walk_terms(&mut |t| {
            if let Term::Const(c) = t {
                out.insert(c);
            }
        });
        out
    }

    fn walk_terms(&self, f: &mut dyn FnMut(Term)) {
        match self {
            FoFormula::Pred(a) => a.args().iter().for_each(|&t| f(t)),
            FoFormula::Ind(t) => f(*t),
            FoFormula::Eq(a, b) => {
                f(*a);
                f(*b)
            }
            FoFormula::And(xs) | FoFormula::Or(xs) => xs.iter().for_each(|x| x.walk_terms(f)),
            FoFormula::Not(g) | FoFormula::Exists(_, g) => g.walk_terms(f),
            FoFormula::True | FoFormula::False => {}
        }
    }
}

pub fn free_vars(f: &FoFormula) -> BTreeSet<Sym> {
    fn go(f: &FoFormula, bound: &mut Vec<Sym>, out: &mut BTreeSet<Sym>) {
        let mut term = |t: &Term, bound: &Vec<Sym>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(*v);
                }
            }
        };
        match f {
            FoFormula::Pred(a) => a.args().iter().for_each(|t| term(t, bound)),
            FoFormula::Ind(t) => term(t, bound),
            FoFormula::Eq(a, b) => {
                term(a, bound);
                term(b, bound);
            }
            FoFormula::And(xs) | FoFormula::Or(xs) => xs.iter().for_each(|x| go(x, bound, out)),
            FoFormula::Not(g) => go(g, bound, out),
            FoFormula::Exists(vs, g) => {
                let mark = bound.len();
                bound.extend(vs);
                go(g, bound, out);
                bound.truncate(mark);
            }
            FoFormula::True | FoFormula::False => {}
        }
    }
    let mut out = BTreeSet::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

/// Gives every quantified variable a distinct name so that scopes never collide.
fn rename_bound(f: &FoFormula, map: &mut Vec<(Sym, Sym)>, n: &mut usize) -> FoFormula {
    let r = |t: Term, map: &Vec<(Sym, Sym)>| match t {
        Term::Var(v) => Term::Var(map.iter().rev().find(|(x, _)| *x == v).map_or(v, |m| m.1)),
        _ => t,
    };
    match f {
        FoFormula::Pred(a) => FoFormula::Pred(a.map(|t| r(t, map))),
        FoFormula::Ind(t) => FoFormula::Ind(r(*t, map)),
        FoFormula::Eq(a, b) => FoFormula::Eq(r(*a, map), r(*b, map)),
        FoFormula::And(xs) => FoFormula::And(xs.iter().map(|x| rename_bound(x, map, n)).collect()),
        FoFormula::Or(xs) => FoFormula::Or(xs.iter().map(|x| rename_bound(x, map, n)).collect()),
        FoFormula::Not(g) => FoFormula::Not(Box::new(rename_bound(g, map, n))),
        FoFormula::Exists(vs, g) => {
            let mark = map.len();
            let mut fresh = Vec::new();
            for v in vs {
                let w = Sym::new(&format!("?%{n}"));
                *n += 1;
                map.push((*v, w));
                fresh.push(w);
            }
            let g = rename_bound(g, map, n);
            map.truncate(mark);
            FoFormula::Exists(fresh, Box::new(g))
        }
        FoFormula::True | FoFormula::False => f.clone(),
    }
}

struct Evaluator<'a> {
    facts: HashSet<Atom>,
    by_pred: HashMap<Sym, Vec<Atom>>,
    domain: Vec<Term>,
    free: HashMap<*const FoFormula, Vec<Sym>>,
    _root: std::marker::PhantomData<&'a FoFormula>,
}

fn resolve(env: &Subst, t: Term) -> Option<Term> {
    match t {
        Term::Var(v) => lookup(env, v),
        _ => Some(t),
    }
}

impl<'a> Evaluator<'a> {
    fn index_free(&mut self, f: &FoFormula) {
        self.free.insert(f as *const _, free_vars(f).into_iter().collect());
        match f {
            FoFormula::And(xs) | FoFormula::Or(xs) => xs.iter().for_each(|x| self.index_free(x)),
            FoFormula::Not(g) | FoFormula::Exists(_, g) => self.index_free(g),
            _ => {}
        }
    }

    fn ready(&self, f: &FoFormula, env: &Subst) -> bool {
        self.free[&(f as *const _)].iter().all(|&v| lookup(env, v).is_some())
    }

    /// Whether some extension of `env` makes every goal true.
    fn solve(&self, mut goals: Vec<&'a FoFormula>, env: &mut Subst) -> bool {
        // simplify structure and settle everything already decidable
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < goals.len() {
                let g = goals[i];
                match g {
                    FoFormula::True => {
                        goals.swap_remove(i);
                        changed = true;
                        continue;
                    }
                    FoFormula::False => return false,
                    FoFormula::And(xs) => {
                        goals.swap_remove(i);
                        goals.extend(xs.iter());
                        changed = true;
                        continue;
                    }
                    FoFormula::Exists(_, body) => {
                        goals[i] = body;
                        changed = true;
                        continue;
                    }
                    FoFormula::Eq(a, b) => match (resolve(env, *a), resolve(env, *b)) {
                        (Some(x), Some(y)) => {
                            if x != y {
                                return false;
                            }
                            goals.swap_remove(i);
                            changed = true;
                            continue;
                        }
                        (Some(x), None) | (None, Some(x)) => {
                            let v = if resolve(env, *a).is_none() { a } else { b };
                            env.push((v.as_var().expect("unbound term is a variable"), x));
                            goals.swap_remove(i);
                            changed = true;
                            continue;
                        }
                        (None, None) => {}
                    },
                    FoFormula::Pred(_) | FoFormula::Ind(_) | FoFormula::Not(_) if self.ready(g, env) => {
                        if !self.check(g, env) {
                            return false;
                        }
                        goals.swap_remove(i);
                        changed = true;
                        continue;
                    }
                    _ => {}
                }
                i += 1;
            }
            if !changed {
                break;
            }
        }
        if goals.is_empty() {
            return true;
        }
        // most bound predicate atom first
        let pick = goals
            .iter()
            .enumerate()
            .filter_map(|(i, g)| match g {
                FoFormula::Pred(a) => {
                    let bound = a.args().iter().filter(|&&t| resolve(env, t).is_some()).count();
                    Some((bound, i))
                }
                _ => None,
            })
            .max();
        if let Some((_, i)) = pick {
            let FoFormula::Pred(a) = goals[i] else { unreachable!() };
            let rest: Vec<&FoFormula> = goals.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, g)| *g).collect();
            let Some(p) = a.pred() else { return false };
            for cand in self.by_pred.get(&p).map_or(&[][..], |v| v.as_slice()) {
                let mark = env.len();
                let ok = a.args().iter().zip(cand.args()).all(|(&s, &t)| match resolve(env, s) {
                    Some(x) => x == t,
                    None => {
                        env.push((s.as_var().expect("unbound term is a variable"), t));
                        true
                    }
                });
                if ok && self.solve(rest.clone(), env) {
                    return true;
                }
                env.truncate(mark);
            }
            return false;
        }
        if let Some(i) = goals.iter().position(|g| matches!(g, FoFormula::Or(_))) {
            let FoFormula::Or(xs) = goals[i] else { unreachable!() };
            let rest: Vec<&FoFormula> = goals.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, g)| *g).collect();
            for x in xs {
                let mark = env.len();
                let mut next = rest.clone();
                next.push(x);
                if self.solve(next, env) {
                    return true;
                }
                env.truncate(mark);
            }
            return false;
        }
        // only guards remain: ground one open variable over the active domain
        let v = goals
            .iter()
            .flat_map(|g| self.free[&(*g as *const _)].iter())
            .find(|&&v| lookup(env, v).is_none())
            .copied()
            .expect("an unready goal has an unbound variable");
        for &d in &self.domain {
            let mark = env.len();
            env.push((v, d));
            if self.solve(goals.clone(), env) {
                return true;
            }
            env.truncate(mark);
        }
        false
    }

    fn check(&self, g: &'a FoFormula, env: &mut Subst) -> bool {
        match g {
            FoFormula::Pred(a) => self.facts.contains(&a.map(|t| resolve(env, t).expect("ready"))),
            FoFormula::Ind(t) => resolve(env, *t).expect("ready").is_const(),
            FoFormula::Not(inner) => {
                let mark = env.len();
                let r = !self.solve(vec![inner], env);
                env.truncate(mark);
                r
            }
            _ => unreachable!(),
        }
    }
}

/// Truth of a closed formula over the ABox, read as a finite structure whose domain is
/// its terms plus the formula's constants.
pub fn eval_fo(f: &FoFormula, abox: &ABox) -> Result<bool> {
    if let Some(v) = free_vars(f).into_iter().next() {
        return Err(Error::FreeVariable(v.to_string()));
    }
    let f = rename_bound(f, &mut Vec::new(), &mut 0);
    let mut by_pred: HashMap<Sym, Vec<Atom>> = HashMap::new();
    let mut domain: BTreeSet<Term> = BTreeSet::new();
    for a in &abox.atoms {
        if let Some(p) = a.pred() {
            by_pred.entry(p).or_default().push(*a);
        }
        domain.extend(a.args().iter().copied());
    }
    domain.extend(f.constants().into_iter().map(Term::Const));
    let mut ev = Evaluator {
        facts: abox.atoms.iter().copied().collect(),
        by_pred,
        domain: domain.into_iter().collect(),
        free: HashMap::new(),
        _root: std::marker::PhantomData,
    };
    ev.index_free(&f);
    Ok(ev.solve(vec![&f], &mut Subst::new()))
}
