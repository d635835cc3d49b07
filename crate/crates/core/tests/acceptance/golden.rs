use std::time::{Duration, Instant};

use cqe::entail::{ic_entails, sc_entails};
use cqe::model::validate_instance;
use cqe::rewrite::is_acyclic;
use cqe::textio::{parse_problem, ProblemFile};
use cqe::{CqeInstance, Limits};

use crate::{ensure, within, Check};

const LIMIT: Duration = Duration::from_secs(5);

pub fn load(text: &str) -> (ProblemFile, CqeInstance) {
    let pf = parse_problem(text).expect("corpus file parses");
    let e = validate_instance(pf.tbox.clone(), pf.abox.clone(), pf.policy.clone()).expect("corpus instance is valid");
    (pf, e)
}

pub const PROFILING: &str = include_str!("../../corpus/profiling.cqe");
pub const TWO_EDS: &str = include_str!("../../corpus/two_eds.cqe");
pub const OFFICES_ACYCLIC: &str = include_str!("../../corpus/offices_acyclic.cqe");
pub const OFFICES_CYCLIC: &str = include_str!("../../corpus/offices_cyclic.cqe");
pub const DISJOINT_PAIR: &str = include_str!("../../corpus/disjoint_pair.cqe");

pub fn run() -> Check {
    let start = Instant::now();
    let limits = Limits::default();
    let mut checked = 0;
    let mut expect = |file: &str, query: &str, sc: Option<bool>, ic: Option<bool>| -> Result<(), String> {
        let (pf, e) = load(file);
        let q = pf.query(query).expect("query present");
        if let Some(want) = sc {
            let got = sc_entails(&e, q, &limits).map_err(|err| err.to_string())?;
            ensure(got == want, || format!("sc({query}) = {got}, expected {want}"))?;
            checked += 1;
        }
        if let Some(want) = ic {
            let got = ic_entails(&e, q, &limits).map_err(|err| err.to_string())?;
            ensure(got == want, || format!("ic({query}) = {got}, expected {want}"))?;
            checked += 1;
        }
        Ok(())
    };

    // both semantics agree on the four BCQs
    for (q, want) in [("q1", true), ("q2", false), ("q3", true), ("q4", false)] {
        expect(PROFILING, q, Some(want), Some(want))?;
    }
    // the union name(p1,ann) ∨ dateB(p1,date1) splits them
    expect(PROFILING, "q5", Some(true), Some(false))?;
    expect(TWO_EDS, "q", Some(false), None)?;
    expect(DISJOINT_PAIR, "either", Some(true), Some(false))?;

    let (_, acyclic) = load(OFFICES_ACYCLIC);
    let (_, cyclic) = load(OFFICES_CYCLIC);
    ensure(is_acyclic(&acyclic.tbox, &acyclic.policy), || "offices policy with T = ∅ should be acyclic".into())?;
    ensure(!is_acyclic(&cyclic.tbox, &cyclic.policy), || "offices policy with worksIn ⊑ collaborate should be cyclic".into())?;
    checked += 2;

    let took = within(start, LIMIT)?;
    Ok(format!("{checked} answers exact in {took:.2?}"))
}
