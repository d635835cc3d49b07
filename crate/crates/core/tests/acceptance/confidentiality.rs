use std::time::{Duration, Instant};

use cqe::censor::satisfies_policy;
use cqe::entail::{ic_entails, sc_entails, Mode};
use cqe::model::validate_instance;
use cqe::privacy::indistinguishable_abox;
use cqe::{ABox, Atom, ConjunctiveQuery as Cq, CqeInstance, Limits, Term, UnionQuery};

use crate::common::{random_case, rng, Shape};
use crate::golden::{load, DISJOINT_PAIR};
use crate::{ensure, within, Check};

const INSTANCES: usize = 30;
const K: usize = 2;
const UNION_SAMPLES: usize = 150;
const LIMIT: Duration = Duration::from_secs(120);
const SEED: u64 = 0x5eed_0007;

/// The ABox read as one BCQ, labeled nulls becoming variables.
fn as_query(abox: &ABox) -> Cq {
    Cq::boolean(abox.atoms.iter().map(|a| {
        a.map(|t| match t {
            Term::Null(n) => Term::var(&n.as_str()[1..]),
            _ => t,
        })
    }))
}

/// Every BCQ with at most `k` atoms over `e`'s predicates, its constants and two variables.
fn bcqs(e: &CqeInstance, k: usize) -> Vec<UnionQuery> {
    let mut terms: Vec<Term> = e.constants().into_iter().map(Term::Const).collect();
    terms.extend([Term::var("x"), Term::var("y")]);
    let mut atoms = Vec::new();
    for (p, n) in e.predicates() {
        for &a in &terms {
            if n == 1 {
                atoms.push(Atom::concept(p.as_str(), a));
            } else {
                for &b in &terms {
                    atoms.push(Atom::role(p.as_str(), a, b));
                }
            }
        }
    }
    let mut out: Vec<UnionQuery> = atoms.iter().map(|a| UnionQuery::single(Cq::boolean([*a]))).collect();
    if k >= 2 {
        for i in 0..atoms.len() {
            for b in &atoms[i + 1..] {
                out.push(UnionQuery::single(Cq::boolean([atoms[i], *b])));
            }
        }
    }
    out
}

fn indistinguishable(limits: &Limits) -> Check {
    let start = Instant::now();
    let mut rng = rng(SEED);
    let (mut bcq_checks, mut union_checks) = (0, 0);
    for i in 0..INSTANCES {
        let case = random_case(&mut rng, Shape::default());
        let e = &case.e;
        let err = |m: String| format!("instance {i}: {m}\n{}", case.text);
        let qs = bcqs(e, K);
        for mode in [Mode::Sc, Mode::Ic] {
            let abox = indistinguishable_abox(e, K, mode, limits).map_err(|x| err(x.to_string()))?;
            let other = validate_instance(e.tbox.clone(), abox.clone(), e.policy.clone())
                .map_err(|x| err(format!("{mode} ABox is not a valid instance: {x}")))?;
            ensure(satisfies_policy(&e.tbox, &[as_query(&abox)], &e.policy), || {
                err(format!("{mode} ABox {:?} violates the policy", abox.atoms))
            })?;
            match mode {
                Mode::Sc => {
                    for q in &qs {
                        let a = sc_entails(e, q, limits).map_err(|x| err(x.to_string()))?;
                        let b = sc_entails(&other, q, limits).map_err(|x| err(x.to_string()))?;
                        ensure(a == b, || err(format!("sc({q}) is {a} on A but {b} on A'")))?;
                        bcq_checks += 1;
                    }
                }
                Mode::Ic => {
                    for _ in 0..UNION_SAMPLES {
                        use rand::seq::SliceRandom;
                        let pick: Vec<Cq> = qs.choose_multiple(&mut rng, 2).map(|q| q.disjuncts[0].clone()).collect();
                        let q = UnionQuery::new(pick);
                        let a = ic_entails(e, &q, limits).map_err(|x| err(x.to_string()))?;
                        let b = ic_entails(&other, &q, limits).map_err(|x| err(x.to_string()))?;
                        ensure(a == b, || err(format!("ic({q}) is {a} on A but {b} on A'")))?;
                        union_checks += 1;
                    }
                }
            }
        }
    }
    let took = within(start, LIMIT)?;
    Ok(format!(
        "{INSTANCES} instances, {bcq_checks} BCQs (k = {K}) under sc, {union_checks} two-disjunct unions under ic, in {took:.1?}"
    ))
}

/// ABoxes of at most two atoms over C1, C2 and the terms o, p, _n1.
fn small_aboxes() -> Vec<ABox> {
    let terms = [Term::cst("o"), Term::cst("p"), Term::parse("_n1")];
    let atoms: Vec<Atom> = ["C1", "C2"].iter().flat_map(|c| terms.map(|t| Atom::concept(c, t))).collect();
    let mut out = vec![ABox::new(Vec::new()).unwrap()];
    for i in 0..atoms.len() {
        out.push(ABox::new(vec![atoms[i]]).unwrap());
        for b in &atoms[i + 1..] {
            out.push(ABox::new(vec![atoms[i], *b]).unwrap());
        }
    }
    out
}

/// The ABoxes that satisfy the policy and are `names`-indistinguishable from the
/// disjoint-pair instance under SC.
fn safe_lookalikes(names: &[&str], limits: &Limits) -> Result<Vec<ABox>, String> {
    let (pf, e) = load(DISJOINT_PAIR);
    let qs: Vec<&UnionQuery> = names.iter().map(|n| pf.query(n).expect("query present")).collect();
    let mut found = Vec::new();
    for abox in small_aboxes() {
        let Ok(other) = validate_instance(e.tbox.clone(), abox.clone(), e.policy.clone()) else { continue };
        if !satisfies_policy(&e.tbox, &[as_query(&abox)], &e.policy) {
            continue;
        }
        let mut same = true;
        for q in &qs {
            same &= sc_entails(&e, q, limits).map_err(|x| x.to_string())?
                == sc_entails(&other, q, limits).map_err(|x| x.to_string())?;
        }
        if same {
            found.push(abox);
        }
    }
    Ok(found)
}

fn no_lookalike(names: &[&str], limits: &Limits) -> Check {
    let start = Instant::now();
    let found = safe_lookalikes(names, limits)?;
    let searched = small_aboxes().len();
    ensure(found.is_empty(), || {
        format!(
            "{} of {searched} policy-satisfying ABoxes are indistinguishable on {names:?}, e.g. {:?}",
            found.len(),
            found[0].atoms
        )
    })?;
    let took = within(start, Duration::from_secs(10))?;
    Ok(format!("none of {searched} ABoxes of at most 2 atoms is a safe lookalike on {names:?} ({took:.2?})"))
}

pub struct Suite7 {
    pub propositions: Check,
    /// The witness as stated: only the union itself is compared.
    pub witness: Check,
    /// The witness with the union's two disjuncts compared as well.
    pub witness_with_disjuncts: Check,
}

pub fn run() -> Suite7 {
    let limits = Limits::default();
    Suite7 {
        propositions: indistinguishable(&limits),
        witness: no_lookalike(&["either"], &limits),
        witness_with_disjuncts: no_lookalike(&["either", "first", "second"], &limits),
    }
}
