use std::time::{Duration, Instant};

use cqe::entail::{ic_entails, sc_entails, CensorOracle};
use cqe::rewrite::{ed_closure, is_acyclic, DEFAULT_REWRITE_CAP};
use cqe::rewrite::Manifest;
use cqe::{CqeInstance, Limits};

use crate::common::{random_case, rng, Shape};
use crate::rewriting::Suite4;
use crate::{ensure, within, Check};

const INSTANCES: usize = 200;
const LIMIT: Duration = Duration::from_secs(60);
const SEED: u64 = 0x5eed_0002;

pub struct Suite2 {
    pub equivalence: Check,
    pub sc_is_ic: Check,
    /// Acyclic instances met along the way, for the structural bounds.
    pub acyclic: Vec<CqeInstance>,
}

pub fn run() -> Suite2 {
    let start = Instant::now();
    let limits = Limits::default();
    let mut rng = rng(SEED);
    let mut mismatches: Vec<String> = Vec::new();
    let mut not_ic: Vec<String> = Vec::new();
    let mut acyclic = Vec::new();
    let (mut questions, mut bcqs) = (0, 0);
    for i in 0..INSTANCES {
        let case = random_case(&mut rng, Shape::default());
        if is_acyclic(&case.e.tbox, &case.e.policy) {
            acyclic.push(case.e.clone());
        }
        let qs: Vec<_> = case.bcqs.iter().chain(&case.unions).collect();
        // one censor enumeration per instance, over a universe covering all its queries
        let oracle = match CensorOracle::new(&case.e, &qs, None, &limits) {
            Ok(o) => o,
            Err(err) => {
                mismatches.push(format!("instance {i}: {err}"));
                continue;
            }
        };
        for q in qs {
            let answers = (|| -> cqe::Result<[bool; 4]> {
                Ok([sc_entails(&case.e, q, &limits)?, oracle.sc(q), ic_entails(&case.e, q, &limits)?, oracle.ic(q)])
            })();
            questions += 1;
            let [sc, sc_o, ic, ic_o] = match answers {
                Ok(a) => a,
                Err(err) => {
                    mismatches.push(format!("instance {i}, {q}: {err}"));
                    continue;
                }
            };
            if sc != sc_o || ic != ic_o {
                mismatches.push(format!(
                    "instance {i}, {q}: sc {sc} vs oracle {sc_o}, ic {ic} vs oracle {ic_o}\n{}",
                    case.text
                ));
            }
            if q.disjuncts.len() == 1 {
                bcqs += 1;
                if sc != ic || sc_o != ic_o {
                    not_ic.push(format!("instance {i}, {q}: sc {sc} ic {ic}"));
                }
            }
        }
    }
    let took = start.elapsed();
    let equivalence = (|| {
        ensure(mismatches.is_empty(), || format!("{} disagreements, first: {}", mismatches.len(), mismatches[0]))?;
        ensure(took < LIMIT, || format!("took {took:.1?}, limit {LIMIT:?}"))?;
        Ok(format!("{INSTANCES} instances, {questions} queries, exact in {took:.1?}"))
    })();
    let sc_is_ic = if not_ic.is_empty() {
        Ok(format!("{bcqs} BCQs"))
    } else {
        Err(format!("{} BCQs differ, first: {}", not_ic.len(), not_ic[0]))
    };
    Suite2 { equivalence, sc_is_ic, acyclic }
}

/// Every body in the ED closure of `e` has at most `k^h` atoms.
pub fn closure_bound(e: &CqeInstance) -> Result<usize, String> {
    let k = e.policy.max_len().max(1);
    let h = e.policy.eds.len() as u32;
    let bound = k.pow(h);
    let closure = ed_closure(&e.policy, &e.tbox, DEFAULT_REWRITE_CAP).map_err(|err| err.to_string())?;
    for ed in &closure {
        ensure(ed.body.len() <= bound, || format!("closure body {} exceeds k^h = {bound}", ed.body))?;
    }
    Ok(closure.len())
}

/// `ell = m * k^h` and no candidate clash assembled from closure parts exceeds it.
pub fn clash_bound(m: &Manifest) -> Result<(), String> {
    let expect = m.m * m.k.pow(m.h as u32);
    ensure(m.ell == expect, || format!("ell {} but m * k^h = {expect}", m.ell))?;
    ensure(m.longest <= m.ell, || format!("a candidate clash has {} atoms, ell = {}", m.longest, m.ell))
}

pub fn bounds(s2: &Suite2, s4: &Suite4) -> Check {
    let start = Instant::now();
    let mut closures = 0;
    for e in s2.acyclic.iter().chain(&s4.instances) {
        closure_bound(e)?;
        closures += 1;
    }
    for m in &s4.manifests {
        clash_bound(m)?;
    }
    let took = within(start, Duration::from_secs(60))?;
    Ok(format!(
        "closure bodies within k^h on {closures} acyclic policies, ell on {} rewritings, in {took:.1?}",
        s4.manifests.len()
    ))
}
