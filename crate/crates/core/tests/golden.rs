//! Worked examples with known outcomes, one per library entry point.

use cqe::censor::{censor_extends, optimal_censors, policy_cons};
use cqe::entail::{ic_entails, sc_entails, Mode};
use cqe::model::{is_isomorphic, validate_instance, Policy};
use cqe::privacy::indistinguishable_abox;
use cqe::reasoner::{entails, evaluate_bcq, Premise};
use cqe::rewrite::{dependency_graph, ed_closure, eval_fo, is_acyclic, phi_pc, sc_rewriting, EdgeTag, DEFAULT_REWRITE_CAP};
use cqe::textio::{parse_formula, parse_problem, parse_query, serialize_formula, ProblemFile};
use cqe::{Atom, ConjunctiveQuery as Cq, CqeInstance, Limits, Sym, TBox, Term, UnionQuery};

const PROFILING: &str = include_str!("../corpus/profiling.cqe");
const TWO_EDS: &str = include_str!("../corpus/two_eds.cqe");
const OFFICES_ACYCLIC: &str = include_str!("../corpus/offices_acyclic.cqe");
const OFFICES_CYCLIC: &str = include_str!("../corpus/offices_cyclic.cqe");

fn load(text: &str) -> (ProblemFile, CqeInstance) {
    let pf = parse_problem(text).unwrap();
    let e = validate_instance(pf.tbox.clone(), pf.abox.clone(), pf.policy.clone()).unwrap();
    (pf, e)
}

fn bcq(text: &str) -> Cq {
    parse_query(text).unwrap().disjuncts[0].clone()
}

fn c(s: &str) -> Term {
    Term::cst(s)
}

#[test]
fn parses_the_two_ed_instance() {
    let (pf, _) = load(TWO_EDS);
    assert_eq!(pf.abox.atoms.len(), 3);
    assert_eq!(pf.tbox.inclusions().count(), 1);
    let ed = &pf.policy.eds[0];
    assert!(ed.head.is_none());
    assert_eq!(ed.frontier, vec![Sym::new("?x")]);
}

#[test]
fn null_matches_an_existential() {
    let atoms = [Atom::role("citOf", c("p1"), Term::parse("_n1")), Atom::concept("SR", Term::parse("_n1"))];
    assert!(evaluate_bcq(&atoms, &bcq("citOf(p1, ?y), SR(?y)")));
}

#[test]
fn inclusion_forces_superclass() {
    let (pf, _) = load(TWO_EDS);
    let premise = [Atom::concept("A", c("o"))];
    assert!(entails(&pf.tbox, Premise::Atoms(&premise), &parse_query("D(o)").unwrap()));
}

// The closure holds ED consequences; what the TBox adds, such as D(o), follows from it.
#[test]
fn closure_of_conflicting_censor_is_poisoned() {
    let (pf, _) = load(TWO_EDS);
    let pc = policy_cons(&pf.tbox, &pf.policy, &[bcq("B(o)"), bcq("C(o)")]);
    assert!(pc.poisoned);
    for q in ["B(o)", "C(o)", "A(o)"] {
        assert!(pc.queries.contains(&bcq(q)), "{q} missing from closure");
    }
    assert!(entails(&pf.tbox, Premise::Queries(&pc.queries), &parse_query("D(o)").unwrap()));
}

#[test]
fn existential_seed_fires_nothing() {
    let (pf, _) = load(PROFILING);
    let policy = Policy::new([pf.policy.eds[0].clone()]);
    let seed = [bcq("profiledActivity(?y, act2)")];
    let pc = policy_cons(&TBox::default(), &policy, &seed);
    assert!(!pc.poisoned);
    assert_eq!(pc.queries.len(), 1);
    assert!(is_isomorphic(&pc.queries[0], &seed[0]));
}

#[test]
fn censor_extension_respects_the_policy() {
    let (_, e) = load(TWO_EDS);
    assert!(censor_extends(&e, &[bcq("B(o)")]));
    assert!(!censor_extends(&e, &[bcq("B(o)"), bcq("C(o)")]));
}

#[test]
fn some_censor_keeps_the_birth_date() {
    let (_, e) = load(PROFILING);
    let censors = optimal_censors(&e, 1, &Limits::default()).unwrap();
    let (date, name) = (bcq("dateB(p1, date1)"), bcq("name(p1, ann)"));
    assert!(censors.iter().any(|c| c.contains(&date) && !c.contains(&name)));
}

#[test]
fn profiling_answers() {
    let (pf, e) = load(PROFILING);
    let limits = Limits::default();
    for (name, sc, ic) in [("q1", true, true), ("q2", false, false), ("q3", true, true), ("q4", false, false), ("q5", true, false)] {
        let q = pf.query(name).unwrap();
        assert_eq!(sc_entails(&e, q, &limits).unwrap(), sc, "sc {name}");
        assert_eq!(ic_entails(&e, q, &limits).unwrap(), ic, "ic {name}");
    }
}

#[test]
fn two_ed_instance_hides_b() {
    let (pf, e) = load(TWO_EDS);
    assert!(!sc_entails(&e, pf.query("q").unwrap(), &Limits::default()).unwrap());
}

#[test]
fn dependency_edges_and_acyclicity() {
    let (pf, _) = load(OFFICES_ACYCLIC);
    let g = dependency_graph(&pf.tbox, &pf.policy);
    let s = Sym::new;
    assert!(g.edges.contains(&(s("collaborate"), s("hasPosition"), EdgeTag::P)));
    assert!(g.edges.contains(&(s("hasPosition"), s("worksIn"), EdgeTag::P)));
    assert!(is_acyclic(&pf.tbox, &pf.policy));

    let (pf, _) = load(OFFICES_CYCLIC);
    let g = dependency_graph(&pf.tbox, &pf.policy);
    assert!(g.edges.contains(&(s("worksIn"), s("collaborate"), EdgeTag::T)));
    assert!(!is_acyclic(&pf.tbox, &pf.policy));
}

#[test]
fn closure_rewrites_bodies_against_tbox_and_policy() {
    let (pf, _) = load(TWO_EDS);
    let closed = ed_closure(&pf.policy, &pf.tbox, DEFAULT_REWRITE_CAP).unwrap();
    let denial_bodies: Vec<Vec<&str>> = closed
        .iter()
        .filter(|ed| ed.head.is_none())
        .map(|ed| {
            let mut preds: Vec<&str> = ed.body.atoms.iter().filter_map(|a| a.pred()).map(|p| p.as_str()).collect();
            preds.sort();
            preds.dedup();
            preds
        })
        .collect();
    assert!(denial_bodies.contains(&vec!["A", "C"]), "{denial_bodies:?}");
    assert!(denial_bodies.contains(&vec!["B", "C"]), "{denial_bodies:?}");
}

#[test]
fn phi_pc_conjoins_the_closure() {
    let (pf, _) = load(TWO_EDS);
    let x = Term::var("x");
    let q = Cq::new(vec![x], [Atom::concept("B", x)]);
    let phi = phi_pc(&pf.tbox, &pf.policy, &q);
    assert_eq!(phi.answer_vars, vec![x]);
    assert!(phi.atoms.contains(&Atom::concept("B", x)) && phi.atoms.contains(&Atom::concept("A", x)));
    // D(x) holds under the TBox, with x read as a constant
    let frozen: Vec<Atom> = phi.atoms.iter().map(|a| a.map(|_| c("x0"))).collect();
    assert!(entails(&pf.tbox, Premise::Atoms(&frozen), &parse_query("D(x0)").unwrap()));

    let q = Cq::new(vec![x], [Atom::concept("C", x)]);
    assert_eq!(phi_pc(&pf.tbox, &pf.policy, &q).atoms, vec![Atom::concept("C", x)]);
}

#[test]
fn rewriting_hides_b_over_the_data() {
    let (pf, e) = load(TWO_EDS);
    let (f, _) = sc_rewriting(pf.query("q").unwrap(), &e.tbox, &e.policy, &Limits::default()).unwrap();
    assert!(!eval_fo(&f, &e.abox).unwrap());
}

#[test]
fn ind_never_holds_of_a_null() {
    let (_, e) = load(PROFILING);
    let f = parse_formula("(exists (?x) (and citOf(p1, ?x) (Ind ?x)))").unwrap();
    assert!(!eval_fo(&f, &e.abox).unwrap());
    let g = parse_formula("(exists (?x) citOf(p1, ?x))").unwrap();
    assert!(eval_fo(&g, &e.abox).unwrap());
}

#[test]
fn formula_text_round_trips() {
    let (pf, e) = load(PROFILING);
    let (f, _) = sc_rewriting(pf.query("q5").unwrap(), &e.tbox, &e.policy, &Limits::default()).unwrap();
    let text = serialize_formula(&f);
    assert_eq!(parse_formula(&text).unwrap(), f);
}

#[test]
fn lookalike_for_profiling_keeps_activity_but_not_q2() {
    let (pf, e) = load(PROFILING);
    let abox = indistinguishable_abox(&e, 1, Mode::Sc, &Limits::default()).unwrap();
    assert!(abox.atoms.iter().any(|a| a.pred() == Some(Sym::new("profiledActivity"))));
    let q2: &UnionQuery = pf.query("q2").unwrap();
    let atoms: Vec<Atom> = abox.atoms.iter().copied().collect();
    assert!(!evaluate_bcq(&atoms, &q2.disjuncts[0]));
}
