use std::time::{Duration, Instant};

use cqe::entail::{ic_entails, sc_entails};
use cqe::model::validate_instance;
use cqe::rewrite::{eval_fo, ic_rewriting, is_acyclic, sc_rewriting, Manifest};
use cqe::{CqeInstance, Error, Limits};

use crate::common::{random_abox, random_case, rng, Shape};
use crate::{ensure, Check};

const INSTANCES: usize = 100;
const ABOXES_PER_REWRITING: usize = 5;
/// Instances whose SC rewriting of the first BCQ is also evaluated on fresh ABoxes.
const DATA_INDEPENDENCE_INSTANCES: usize = 20;
const LIMIT: Duration = Duration::from_secs(120);
const SEED: u64 = 0x5eed_0004;

pub struct Suite4 {
    pub equivalence: Check,
    pub instances: Vec<CqeInstance>,
    pub manifests: Vec<Manifest>,
}

pub fn run() -> Suite4 {
    let start = Instant::now();
    let limits = Limits::default();
    let mut rng = rng(SEED);
    let mut instances = Vec::new();
    let mut manifests = Vec::new();
    let mut errors: Vec<String> = Vec::new();
    let (mut skipped, mut evaluations, mut generated) = (0, 0, 0);
    while instances.len() < INSTANCES && generated < 50 * INSTANCES {
        generated += 1;
        let case = random_case(&mut rng, Shape::default());
        let e = &case.e;
        if !is_acyclic(&e.tbox, &e.policy) {
            continue;
        }
        let queries: Vec<_> = case.bcqs.iter().chain(&case.unions).collect();
        let rewritten = queries
            .iter()
            .map(|q| Ok((sc_rewriting(q, &e.tbox, &e.policy, &limits)?, ic_rewriting(q, &e.tbox, &e.policy, &limits)?)))
            .collect::<cqe::Result<Vec<_>>>();
        let rewritten = match rewritten {
            Ok(r) => r,
            Err(Error::ResourceLimit { .. }) => {
                skipped += 1;
                continue;
            }
            Err(err) => {
                errors.push(format!("{err}\n{}", case.text));
                continue;
            }
        };
        let n = instances.len();
        for (q, ((scf, scm), (icf, icm))) in queries.iter().zip(&rewritten) {
            let outcome = (|| -> cqe::Result<[bool; 4]> {
                Ok([eval_fo(scf, &e.abox)?, sc_entails(e, q, &limits)?, eval_fo(icf, &e.abox)?, ic_entails(e, q, &limits)?])
            })();
            evaluations += 2;
            match outcome {
                Ok([a, b, c, d]) if a == b && c == d => {}
                Ok([a, b, c, d]) => {
                    errors.push(format!("instance {n}, {q}: sc rewriting {a} vs {b}, ic rewriting {c} vs {d}\n{}", case.text))
                }
                Err(err) => errors.push(format!("instance {n}, {q}: {err}")),
            }
            manifests.push(scm.clone());
            manifests.push(icm.clone());
        }
        if n < DATA_INDEPENDENCE_INSTANCES {
            let (q, ((scf, _), _)) = (queries[0], &rewritten[0]);
            for _ in 0..ABOXES_PER_REWRITING {
                let abox = random_abox(&mut rng, e, 5);
                let other = validate_instance(e.tbox.clone(), abox.clone(), e.policy.clone()).expect("consistent");
                evaluations += 1;
                match (eval_fo(scf, &abox), sc_entails(&other, q, &limits)) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (a, b) => errors.push(format!("instance {n}, {q} on another ABox {:?}: {a:?} vs {b:?}", abox.atoms)),
                }
            }
        }
        instances.push(e.clone());
    }
    let took = start.elapsed();
    let equivalence = (|| {
        ensure(errors.is_empty(), || format!("{} failures, first: {}", errors.len(), errors[0]))?;
        ensure(instances.len() >= INSTANCES, || format!("only {} acyclic instances within budget", instances.len()))?;
        ensure(took < LIMIT, || format!("took {took:.1?}, limit {LIMIT:?}"))?;
        Ok(format!(
            "{} acyclic instances ({skipped} over budget skipped), {evaluations} evaluations, \
             {DATA_INDEPENDENCE_INSTANCES} rewritings on {ABOXES_PER_REWRITING} extra ABoxes each, in {took:.1?}",
            instances.len()
        ))
    })();
    Suite4 { equivalence, instances, manifests }
}
