use std::time::{Duration, Instant};

use cqe::entail::sc_entails;
use cqe::harness::{dpll, gen_3cnf_instance, sat_brute, Cnf, Lit};
use cqe::{Limits, UnionQuery};
use rand::Rng;

use crate::common::rng;
use crate::{ensure, within, Check};

const MAX_VARS: usize = 3;
const MAX_CLAUSES: usize = 2;
const SAMPLED: usize = 40;
const SAMPLED_CLAUSES: usize = 3;
const LIMIT: Duration = Duration::from_secs(120);
const SEED: u64 = 0x5eed_0005;

/// Clauses as nondecreasing literal triples: every clause up to literal order.
fn clauses(n: usize) -> Vec<[Lit; 3]> {
    let lits: Vec<Lit> = (1..=n).flat_map(|v| [Lit::new(v, true), Lit::new(v, false)]).collect();
    let mut out = Vec::new();
    for i in 0..lits.len() {
        for j in i..lits.len() {
            for k in j..lits.len() {
                out.push([lits[i], lits[j], lits[k]]);
            }
        }
    }
    out
}

fn agree(phi: &Cnf, limits: &Limits) -> Result<(), String> {
    let (e, goal) = gen_3cnf_instance(phi).map_err(|err| err.to_string())?;
    let entailed = sc_entails(&e, &UnionQuery::single(goal), limits).map_err(|err| format!("{err} on {phi:?}"))?;
    let sat = sat_brute(phi);
    ensure(sat == dpll(phi), || format!("truth table and DPLL disagree on {phi:?}"))?;
    ensure(sat == !entailed, || format!("satisfiable = {sat} but sc(S(i1)) = {entailed} for {phi:?}"))
}

pub fn run() -> Check {
    let start = Instant::now();
    let limits = Limits::default();
    let mut exhaustive = 0;
    for n in 1..=MAX_VARS {
        let cs = clauses(n);
        agree(&Cnf::new(n, vec![]).unwrap(), &limits)?;
        exhaustive += 1;
        for i in 0..cs.len() {
            agree(&Cnf::new(n, vec![cs[i]]).unwrap(), &limits)?;
            exhaustive += 1;
            if MAX_CLAUSES >= 2 {
                for c in &cs[i..] {
                    agree(&Cnf::new(n, vec![cs[i], *c]).unwrap(), &limits)?;
                    exhaustive += 1;
                }
            }
        }
    }
    let mut rng = rng(SEED);
    let (mut sat, mut unsat) = (0, 0);
    for _ in 0..SAMPLED {
        let n = rng.gen_range(1..=4);
        // clauses repeat literals often enough that some samples are unsatisfiable
        let clauses = (0..SAMPLED_CLAUSES)
            .map(|_| {
                let distinct: Vec<Lit> =
                    (0..rng.gen_range(1..=3)).map(|_| Lit::new(rng.gen_range(1..=n), rng.gen_bool(0.5))).collect();
                [(); 3].map(|_| distinct[rng.gen_range(0..distinct.len())])
            })
            .collect();
        let phi = Cnf::new(n, clauses).unwrap();
        agree(&phi, &limits)?;
        if sat_brute(&phi) {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    let took = within(start, LIMIT)?;
    Ok(format!(
        "{exhaustive} formulas exhaustively, {SAMPLED} sampled with {SAMPLED_CLAUSES} clauses ({sat} sat, {unsat} unsat), in {took:.1?}"
    ))
}
