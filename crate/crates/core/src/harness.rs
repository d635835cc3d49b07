//! 3-CNF formulas, their encoding as CQE instances, and two SAT oracles.

use crate::error::{Error, Result};
use crate::model::{
    validate_instance, ABox, Atom, ConjunctiveQuery as Cq, CqeInstance, EpistemicDependency as Ed, Policy, Sym, TBox,
    Term,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lit {
    /// 1-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit { var, positive }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<[Lit; 3]>,
}

impl Cnf {
    pub fn new(num_vars: usize, clauses: Vec<[Lit; 3]>) -> Result<Cnf> {
        if num_vars == 0 {
            return Err(Error::InvalidQuery("a CNF needs at least one variable".into()));
        }
        for c in &clauses {
            if c.iter().any(|l| l.var == 0 || l.var > num_vars) {
                return Err(Error::InvalidQuery(format!("literal outside 1..={num_vars}")));
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| assignment[l.var - 1] == l.positive))
    }
}

fn clause_const(i: usize) -> Term {
    Term::cst(&format!("i{i}"))
}

fn var_const(v: usize) -> Term {
    Term::cst(&format!("v{v}"))
}

fn truth(b: bool) -> Term {
    Term::cst(if b { "t" } else { "f" })
}

/// The hardness-reduction instance for `phi` and its goal `S(i1)`, which the instance
/// SC-entails exactly when `phi` is unsatisfiable.
pub fn gen_3cnf_instance(phi: &Cnf) -> Result<(CqeInstance, Cq)> {
    let (x, y, v, z) = (Term::var("x"), Term::var("y"), Term::var("v"), Term::var("z"));
    let mut eds = Vec::new();
    for j in 1..=3 {
        let body = vec![
            Atom::role(&format!("C{j}"), x, y),
            Atom::role(&format!("V{j}"), x, v),
            Atom::role("V", y, v),
            Atom::role("N", x, z),
            Atom::concept("S", x),
        ];
        eds.push(Ed::new(body, Some(vec![Atom::concept("S", z)]), vec![Sym::new("?z")])?);
    }
    eds.push(Ed::new(vec![Atom::role("V", x, truth(false)), Atom::role("V", x, truth(true))], None, vec![])?);

    let mut facts = Vec::new();
    for (i, clause) in phi.clauses.iter().enumerate() {
        let c = clause_const(i + 1);
        for (j, l) in clause.iter().enumerate() {
            facts.push(Atom::role(&format!("C{}", j + 1), c, var_const(l.var)));
            facts.push(Atom::role(&format!("V{}", j + 1), c, truth(l.positive)));
        }
    }
    let mut used: Vec<usize> = phi.clauses.iter().flatten().map(|l| l.var).collect();
    used.sort();
    used.dedup();
    for a in used {
        facts.push(Atom::role("V", var_const(a), truth(false)));
        facts.push(Atom::role("V", var_const(a), truth(true)));
    }
    for i in 1..=phi.clauses.len() {
        facts.push(Atom::concept("S", clause_const(i)));
        facts.push(Atom::role("N", clause_const(i), clause_const(i + 1)));
    }
    let e = validate_instance(TBox::default(), ABox::new(facts)?, Policy::new(eds))?;
    Ok((e, Cq::boolean([Atom::concept("S", clause_const(1))])))
}

/// Truth-table satisfiability.
pub fn sat_brute(phi: &Cnf) -> bool {
    assert!(phi.num_vars <= 20, "truth tables are limited to 20 variables");
    (0u32..1 << phi.num_vars).any(|bits| {
        let asg: Vec<bool> = (0..phi.num_vars).map(|i| bits >> i & 1 == 1).collect();
        phi.satisfied_by(&asg)
    })
}

/// Satisfiability by unit propagation and splitting.
pub fn dpll(phi: &Cnf) -> bool {
    fn go(clauses: &[Vec<Lit>], asg: &mut Vec<Option<bool>>) -> bool {
        let mut simplified: Vec<Vec<Lit>> = Vec::new();
        for c in clauses {
            if c.iter().any(|l| asg[l.var - 1] == Some(l.positive)) {
                continue;
            }
            let rest: Vec<Lit> = c.iter().filter(|l| asg[l.var - 1].is_none()).copied().collect();
            if rest.is_empty() {
                return false;
            }
            simplified.push(rest);
        }
        let Some(first) = simplified.first() else { return true };
        let pick = simplified.iter().find(|c| c.len() == 1).map_or(first[0], |c| c[0]);
        for value in [pick.positive, !pick.positive] {
            asg[pick.var - 1] = Some(value);
            if go(&simplified, asg) {
                return true;
            }
            asg[pick.var - 1] = None;
            if simplified.iter().any(|c| c.len() == 1 && c[0] == pick) {
                break;
            }
        }
        false
    }
    let clauses: Vec<Vec<Lit>> = phi.clauses.iter().map(|c| c.to_vec()).collect();
    go(&clauses, &mut vec![None; phi.num_vars])
}

/// DIMACS CNF restricted to clauses of exactly three literals.
pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut num_vars = None;
    let mut lits: Vec<i64> = Vec::new();
    let mut clauses = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        let syntax = |col: usize, expected: &str| Error::Syntax { line: ln + 1, col, expected: expected.into() };
        if line.starts_with('%') {
            break;
        }
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "cnf" {
                return Err(syntax(1, "`p cnf <vars> <clauses>`"));
            }
            num_vars = Some(parts[1].parse::<usize>().map_err(|_| syntax(1, "a variable count"))?);
            continue;
        }
        for tok in line.split_whitespace() {
            let n: i64 = tok.parse().map_err(|_| syntax(1, "an integer literal"))?;
            if n != 0 {
                lits.push(n);
                continue;
            }
            if lits.len() != 3 {
                return Err(syntax(1, "exactly three literals per clause"));
            }
            let l = |n: i64| Lit::new(n.unsigned_abs() as usize, n > 0);
            clauses.push([l(lits[0]), l(lits[1]), l(lits[2])]);
            lits.clear();
        }
    }
    if !lits.is_empty() {
        return Err(Error::Syntax { line: text.lines().count(), col: 1, expected: "a terminating 0".into() });
    }
    let num_vars = num_vars.ok_or(Error::Syntax { line: 1, col: 1, expected: "a `p cnf` header".into() })?;
    Cnf::new(num_vars, clauses)
}
