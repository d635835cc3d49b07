use std::time::{Duration, Instant};

use cqe::reasoner::{entails, Premise};

use crate::common::{naive_chase, naive_holds, random_case, rng, Shape};
use crate::{ensure, within, Check};

const TRIPLES: usize = 200;
const LIMIT: Duration = Duration::from_secs(30);
const SEED: u64 = 0x5eed_0006;

pub fn run() -> Check {
    let start = Instant::now();
    let mut rng = rng(SEED);
    let shape = Shape { max_axioms: 4, max_facts: 4, min_eds: 0, max_eds: 0, null_rate: 0.15 };
    let (mut triples, mut positive) = (0, 0);
    while triples < TRIPLES {
        let case = random_case(&mut rng, shape);
        let facts: Vec<_> = case.e.abox.atoms.iter().copied().collect();
        for q in case.bcqs.iter().chain(&case.unions) {
            // a query of n atoms is decided within n + |T| + 1 rounds; the doubled depth
            // confirms the answer no longer moves
            let depth = q.max_len() + case.e.tbox.axioms.len() + 1;
            let oracle = |d: usize| {
                let chased = naive_chase(&case.e.tbox, &facts, d);
                q.disjuncts.iter().any(|cq| naive_holds(&chased, cq))
            };
            let (shallow, deep) = (oracle(depth), oracle(2 * depth));
            ensure(shallow == deep, || format!("chase not stationary at depth {depth} for {q}\n{}", case.text))?;
            let got = entails(&case.e.tbox, Premise::Abox(&case.e.abox), q);
            ensure(got == deep, || format!("PerfectRef says {got}, chase says {deep} for {q}\n{}", case.text))?;
            triples += 1;
            positive += deep as usize;
        }
    }
    let took = within(start, LIMIT)?;
    Ok(format!("{triples} triples ({positive} entailed), exact in {took:.2?}"))
}
