//! Random small instances shared by the integration and acceptance tests.
#![allow(dead_code)]

use cqe::model::validate_instance;
use cqe::textio::parse_problem;
use cqe::{ABox, Atom, Basic, BasicConcept, ConjunctiveQuery as Cq, CqeInstance, Polarity, Role, Sym, TBox, Term, UnionQuery};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

const CONCEPTS: &[&str] = &["A", "B", "C"];
const ROLES: &[&str] = &["R", "S"];
const CONSTS: &[&str] = &["a", "b", "c"];

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_axioms: usize,
    pub max_facts: usize,
    pub min_eds: usize,
    pub max_eds: usize,
    /// Probability that a generated ABox argument is the labeled null `_n1`.
    pub null_rate: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { max_axioms: 2, max_facts: 5, min_eds: 1, max_eds: 2, null_rate: 0.1 }
    }
}

pub struct Case {
    pub text: String,
    pub e: CqeInstance,
    /// Boolean CQs first, then two-disjunct unions.
    pub bcqs: Vec<UnionQuery>,
    pub unions: Vec<UnionQuery>,
}

struct Sig {
    concepts: Vec<&'static str>,
    roles: Vec<&'static str>,
    consts: Vec<&'static str>,
}

fn signature(rng: &mut StdRng) -> Sig {
    // at most three predicates, at least one of them a role
    let n_roles = rng.gen_range(1..=2);
    let n_concepts = rng.gen_range(0..=3 - n_roles);
    let n_consts = rng.gen_range(1..=3);
    Sig {
        concepts: CONCEPTS[..n_concepts].to_vec(),
        roles: ROLES[..n_roles].to_vec(),
        consts: CONSTS[..n_consts].to_vec(),
    }
}

fn basic(rng: &mut StdRng, s: &Sig) -> String {
    let r = *s.roles.choose(rng).unwrap();
    match rng.gen_range(0..3) {
        0 if !s.concepts.is_empty() => s.concepts.choose(rng).unwrap().to_string(),
        1 => format!("exists {r}-"),
        _ => format!("exists {r}"),
    }
}

fn axiom(rng: &mut StdRng, s: &Sig) -> String {
    if s.roles.len() == 2 && rng.gen_bool(0.25) {
        let inv = if rng.gen_bool(0.3) { "-" } else { "" };
        return format!("R sub S{inv}");
    }
    let op = if rng.gen_bool(0.15) { "disj" } else { "sub" };
    format!("{} {op} {}", basic(rng, s), basic(rng, s))
}

fn atom(rng: &mut StdRng, s: &Sig, term: &mut dyn FnMut(&mut StdRng) -> String) -> String {
    let n = s.concepts.len() + s.roles.len();
    let i = rng.gen_range(0..n);
    if i < s.concepts.len() {
        format!("{}({})", s.concepts[i], term(rng))
    } else {
        format!("{}({}, {})", s.roles[i - s.concepts.len()], term(rng), term(rng))
    }
}

fn fact(rng: &mut StdRng, s: &Sig, null_rate: f64) -> String {
    atom(rng, s, &mut |rng: &mut StdRng| {
        if rng.gen_bool(null_rate) {
            "_n1".to_string()
        } else {
            s.consts.choose(rng).unwrap().to_string()
        }
    })
}

fn cq(rng: &mut StdRng, s: &Sig, vars: &[&str], const_rate: f64) -> Vec<String> {
    let len = rng.gen_range(1..=2);
    cq_of_len(rng, s, vars, const_rate, len)
}

fn cq_of_len(rng: &mut StdRng, s: &Sig, vars: &[&str], const_rate: f64, len: usize) -> Vec<String> {
    (0..len)
        .map(|_| {
            atom(rng, s, &mut |rng: &mut StdRng| {
                if rng.gen_bool(const_rate) {
                    s.consts.choose(rng).unwrap().to_string()
                } else {
                    vars.choose(rng).unwrap().to_string()
                }
            })
        })
        .collect()
}

fn ed(rng: &mut StdRng, s: &Sig) -> String {
    // two-atom bodies join facts, which is where censors start to compete
    let len = if rng.gen_bool(0.7) { 2 } else { 1 };
    let body = cq_of_len(rng, s, &["?x", "?y"], 0.15, len);
    let body_text = body.join(", ");
    let bound: Vec<&str> = ["?x", "?y"].into_iter().filter(|v| body_text.contains(v)).collect();
    if rng.gen_bool(0.35) || bound.is_empty() && rng.gen_bool(0.5) {
        return format!("ed frontier(): {body_text} -> bot");
    }
    let mut pool: Vec<&str> = bound.clone();
    pool.push("?z");
    let head = cq(rng, s, &pool, 0.1).join(", ");
    let frontier: Vec<&str> = bound.into_iter().filter(|v| head.contains(v)).collect();
    format!("ed frontier({}): {body_text} -> {head}", frontier.join(", "))
}

/// A random consistent instance with at most three predicates, three constants,
/// `shape.max_eds` EDs of length at most two, and a handful of queries.
pub fn random_case(rng: &mut StdRng, shape: Shape) -> Case {
    loop {
        let s = signature(rng);
        let mut text = String::from("TBOX\n");
        for _ in 0..rng.gen_range(0..=shape.max_axioms) {
            text += &format!("  {}\n", axiom(rng, &s));
        }
        text += "ABOX\n";
        for _ in 0..rng.gen_range(1..=shape.max_facts) {
            text += &format!("  {}.\n", fact(rng, &s, shape.null_rate));
        }
        text += "POLICY\n";
        for _ in 0..rng.gen_range(shape.min_eds..=shape.max_eds) {
            text += &format!("  {}\n", ed(rng, &s));
        }
        for i in 0..4 {
            text += &format!("query b{i}: {}\n", cq(rng, &s, &["?u", "?v"], 0.5).join(", "));
        }
        for i in 0..2 {
            let d1 = cq(rng, &s, &["?u", "?v"], 0.6).join(", ");
            let d2 = cq(rng, &s, &["?u", "?v"], 0.6).join(", ");
            text += &format!("query u{i}: {d1} | {d2}\n");
        }
        let Ok(pf) = parse_problem(&text) else { continue };
        let Ok(e) = validate_instance(pf.tbox.clone(), pf.abox.clone(), pf.policy.clone()) else { continue };
        let mut bcqs = Vec::new();
        let mut unions = Vec::new();
        for (name, q) in pf.named_queries {
            if name.starts_with('b') {
                bcqs.push(q);
            } else {
                unions.push(q);
            }
        }
        return Case { text, e, bcqs, unions };
    }
}

pub fn rng(seed: u64) -> StdRng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// A random consistent ABox for `e`'s TBox over its predicates and constants, plus
/// one extra constant and one labeled null.
pub fn random_abox(rng: &mut StdRng, e: &CqeInstance, max_facts: usize) -> ABox {
    let preds: Vec<(Sym, usize)> = e.predicates().into_iter().collect();
    let mut terms: Vec<Term> = e.constants().into_iter().map(Term::Const).collect();
    terms.push(Term::cst("d"));
    terms.push(Term::parse("_n1"));
    loop {
        let facts: Vec<Atom> = (0..rng.gen_range(1..=max_facts))
            .map(|_| {
                let (p, n) = *preds.choose(rng).unwrap();
                let mut t = || *terms.choose(rng).unwrap();
                if n == 1 {
                    Atom::concept(p.as_str(), t())
                } else {
                    let a = t();
                    Atom::role(p.as_str(), a, t())
                }
            })
            .collect();
        let abox = ABox::new(facts).expect("ground facts");
        if validate_instance(e.tbox.clone(), abox.clone(), e.policy.clone()).is_ok() {
            return abox;
        }
    }
}

/// Restricted chase of `facts` under the positive inclusions of `t`, `rounds` deep.
pub fn naive_chase(t: &TBox, facts: &[Atom], rounds: usize) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = facts.to_vec();
    let mut fresh = 0;
    for _ in 0..rounds {
        let mut added = Vec::new();
        for ax in t.axioms.iter().filter(|a| a.polarity == Polarity::Inclusion) {
            let present = |a: &Atom, added: &[Atom]| atoms.contains(a) || added.contains(a);
            match (ax.lhs, ax.rhs) {
                (Basic::Role(l), Basic::Role(r)) => {
                    for a in &atoms {
                        if let Some((x, y)) = role_pair(a, l) {
                            let new = r.atom(x, y);
                            if !present(&new, &added) {
                                added.push(new);
                            }
                        }
                    }
                }
                (Basic::Concept(l), Basic::Concept(r)) => {
                    for a in &atoms {
                        let Some(x) = member(a, l) else { continue };
                        let satisfied = atoms.iter().chain(&added).any(|b| member(b, r) == Some(x));
                        if satisfied {
                            continue;
                        }
                        let new = match r {
                            BasicConcept::Atomic(c) => Atom::Concept(c, x),
                            BasicConcept::Exists(role) => {
                                fresh += 1;
                                role.atom(x, Term::parse(&format!("_c{fresh}")))
                            }
                        };
                        added.push(new);
                    }
                }
                _ => unreachable!(),
            }
        }
        if added.is_empty() {
            break;
        }
        atoms.extend(added);
    }
    atoms
}

fn role_pair(a: &Atom, r: Role) -> Option<(Term, Term)> {
    match *a {
        Atom::Role(p, [x, y]) if p == r.name => Some(if r.inverse { (y, x) } else { (x, y) }),
        _ => None,
    }
}

fn member(a: &Atom, c: BasicConcept) -> Option<Term> {
    match c {
        BasicConcept::Atomic(n) => match *a {
            Atom::Concept(p, x) if p == n => Some(x),
            _ => None,
        },
        BasicConcept::Exists(r) => role_pair(a, r).map(|(x, _)| x),
    }
}

/// Backtracking homomorphism test of a Boolean CQ into `atoms`.
pub fn naive_holds(atoms: &[Atom], q: &Cq) -> bool {
    fn go(rest: &[Atom], atoms: &[Atom], env: &mut Vec<(Term, Term)>) -> bool {
        let Some((first, rest)) = rest.split_first() else { return true };
        for a in atoms {
            if a.pred() != first.pred() || a.arity() != first.arity() {
                continue;
            }
            let mark = env.len();
            let ok = first.args().iter().zip(a.args()).all(|(&s, &t)| {
                if !s.is_var() {
                    return s == t;
                }
                match env.iter().find(|(v, _)| *v == s) {
                    Some(&(_, bound)) => bound == t,
                    None => {
                        env.push((s, t));
                        true
                    }
                }
            });
            if ok && go(rest, atoms, env) {
                return true;
            }
            env.truncate(mark);
        }
        false
    }
    go(&q.atoms, atoms, &mut Vec::new())
}
