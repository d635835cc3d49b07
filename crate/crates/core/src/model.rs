//! Terms, atoms, queries, ontologies and policies.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::hom::{self, Subst, Target};

/// Interned name. Comparison is by string content, so ordering is lexicographic.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(&'static str);

fn interner() -> &'static Mutex<HashSet<&'static str>> {
    static POOL: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
    POOL.get_or_init(Default::default)
}

impl Sym {
    pub fn new(s: &str) -> Sym {
        let mut pool = interner().lock().unwrap_or_else(|e| e.into_inner());
        if let Some(&hit) = pool.get(s) {
            return Sym(hit);
        }
        let leaked: &'static str = Box::leak(s.to_owned().into_boxed_str());
        pool.insert(leaked);
        Sym(leaked)
    }

    pub fn as_str(&self) -> &'static str {
        self.0
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

// Small pools of generated names so hot paths skip the interner lock.
fn pooled(cache: &'static OnceLock<Vec<Sym>>, prefix: &str, i: usize) -> Sym {
    let pool = cache.get_or_init(|| (0..256).map(|i| Sym::new(&format!("{prefix}{i}"))).collect());
    pool.get(i).copied().unwrap_or_else(|| Sym::new(&format!("{prefix}{i}")))
}

/// `?_i`, the i-th canonical existential variable.
pub(crate) fn canon_var(i: usize) -> Sym {
    static C: OnceLock<Vec<Sym>> = OnceLock::new();
    pooled(&C, "?_", i)
}

/// `?a_i`, the canonical name of the i-th answer position.
pub(crate) fn canon_answer(i: usize) -> Sym {
    static C: OnceLock<Vec<Sym>> = OnceLock::new();
    pooled(&C, "?a_", i)
}

/// `_n<i>`, a null produced by [`freeze`].
pub(crate) fn frozen_null(i: usize) -> Sym {
    static C: OnceLock<Vec<Sym>> = OnceLock::new();
    pooled(&C, "_n", i)
}

/// A term. The derived order puts constants before nulls before variables.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Sym),
    Null(Sym),
    Var(Sym),
}

impl Term {
    /// Builds a term from its surface form: `?x` variable, `_n` null, else constant.
    pub fn parse(s: &str) -> Term {
        if s.starts_with('?') {
            Term::Var(Sym::new(s))
        } else if s.starts_with('_') {
            Term::Null(Sym::new(s))
        } else {
            Term::Const(Sym::new(s))
        }
    }

    pub fn var(name: &str) -> Term {
        if name.starts_with('?') {
            Term::Var(Sym::new(name))
        } else {
            Term::Var(Sym::new(&format!("?{name}")))
        }
    }

    pub fn cst(name: &str) -> Term {
        Term::Const(Sym::new(name))
    }

    pub fn name(&self) -> Sym {
        match *self {
            Term::Const(s) | Term::Null(s) | Term::Var(s) => s,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn as_var(&self) -> Option<Sym> {
        match *self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name().as_str())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name().as_str())
    }
}

/// Concept atom, role atom, or the unsatisfiable query ⊥.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    Concept(Sym, Term),
    Role(Sym, [Term; 2]),
    Bottom,
}

impl Atom {
    pub fn concept(p: &str, t: Term) -> Atom {
        Atom::Concept(Sym::new(p), t)
    }

    pub fn role(p: &str, a: Term, b: Term) -> Atom {
        Atom::Role(Sym::new(p), [a, b])
    }

    pub fn pred(&self) -> Option<Sym> {
        match *self {
            Atom::Concept(p, _) | Atom::Role(p, _) => Some(p),
            Atom::Bottom => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Atom::Concept(_, t) => std::slice::from_ref(t),
            Atom::Role(_, ts) => ts,
            Atom::Bottom => &[],
        }
    }

    pub fn arity(&self) -> usize {
        self.args().len()
    }

    pub fn map(&self, mut f: impl FnMut(Term) -> Term) -> Atom {
        match *self {
            Atom::Concept(p, t) => Atom::Concept(p, f(t)),
            Atom::Role(p, [a, b]) => Atom::Role(p, [f(a), f(b)]),
            Atom::Bottom => Atom::Bottom,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args().iter().all(Term::is_const)
    }

    pub fn vars(&self) -> impl Iterator<Item = Sym> + '_ {
        self.args().iter().filter_map(Term::as_var)
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |a: &Atom| (a.pred().is_none(), a.pred().map(|p| p.as_str()), a.arity());
        key(self)
            .cmp(&key(other))
            .then_with(|| self.args().cmp(other.args()))
    }
}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Concept(p, t) => write!(f, "{p}({t})"),
            Atom::Role(p, [a, b]) => write!(f, "{p}({a},{b})"),
            Atom::Bottom => f.write_str("bot"),
        }
    }
}

/// A conjunctive query. `atoms` is kept sorted and duplicate-free.
///
/// `answer_vars` normally lists distinct variables; rewriting may specialize an
/// answer position to a constant or repeat a variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConjunctiveQuery {
    pub answer_vars: Vec<Term>,
    pub atoms: Vec<Atom>,
}

pub type Cq = ConjunctiveQuery;

impl ConjunctiveQuery {
    pub fn new(answer_vars: Vec<Term>, atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        if atoms.contains(&Atom::Bottom) {
            return Self::bottom();
        }
        atoms.sort();
        atoms.dedup();
        ConjunctiveQuery { answer_vars, atoms }
    }

    pub fn boolean(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Self::new(Vec::new(), atoms)
    }

    pub fn bottom() -> Self {
        ConjunctiveQuery {
            answer_vars: Vec::new(),
            atoms: vec![Atom::Bottom],
        }
    }

    pub fn is_bottom(&self) -> bool {
        self.atoms.first() == Some(&Atom::Bottom)
    }

    pub fn is_boolean(&self) -> bool {
        self.answer_vars.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Sym> {
        self.atoms.iter().flat_map(|a| a.vars().collect::<Vec<_>>()).collect()
    }

    pub fn answer_var_names(&self) -> BTreeSet<Sym> {
        self.answer_vars.iter().filter_map(Term::as_var).collect()
    }

    pub fn existential_vars(&self) -> Vec<Sym> {
        let ans = self.answer_var_names();
        self.vars().into_iter().filter(|v| !ans.contains(v)).collect()
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        let mut out: BTreeSet<Sym> = self
            .atoms
            .iter()
            .flat_map(|a| a.args().iter())
            .filter(|t| t.is_const())
            .map(|t| t.name())
            .collect();
        out.extend(self.answer_vars.iter().filter(|t| t.is_const()).map(|t| t.name()));
        out
    }

    pub fn predicates(&self) -> BTreeSet<(Sym, usize)> {
        self.atoms
            .iter()
            .filter_map(|a| a.pred().map(|p| (p, a.arity())))
            .collect()
    }

    pub fn substitute(&self, mut f: impl FnMut(Term) -> Term) -> Self {
        let answer = self.answer_vars.iter().map(|&t| f(t)).collect();
        let atoms: Vec<Atom> = self.atoms.iter().map(|a| a.map(&mut f)).collect();
        Self::new(answer, atoms)
    }

    /// Checks the structural invariants of a user-facing query.
    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidQuery("empty conjunction".into()));
        }
        if self.is_bottom() {
            return Ok(());
        }
        let vars = self.vars();
        for t in &self.answer_vars {
            if let Term::Var(v) = t {
                if !vars.contains(v) {
                    return Err(Error::InvalidQuery(format!("answer variable {v} not in body")));
                }
            }
        }
        if self.atoms.iter().flat_map(|a| a.args()).any(|t| matches!(t, Term::Null(_))) {
            return Err(Error::InvalidQuery("labeled null in query".into()));
        }
        Ok(())
    }
}

impl fmt::Debug for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.answer_vars.is_empty() {
            let ans: Vec<String> = self.answer_vars.iter().map(|t| t.to_string()).collect();
            write!(f, "({}) ", ans.join(","))?;
        }
        let atoms: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        f.write_str(&atoms.join(", "))
    }
}

/// A union of conjunctive queries sharing one answer arity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnionQuery {
    pub disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    pub fn new(disjuncts: impl IntoIterator<Item = ConjunctiveQuery>) -> Self {
        let mut disjuncts: Vec<_> = disjuncts.into_iter().collect();
        disjuncts.sort();
        disjuncts.dedup();
        UnionQuery { disjuncts }
    }

    pub fn single(q: ConjunctiveQuery) -> Self {
        UnionQuery { disjuncts: vec![q] }
    }

    pub fn max_len(&self) -> usize {
        self.disjuncts.iter().map(|q| q.len()).max().unwrap_or(0)
    }

    pub fn is_boolean(&self) -> bool {
        self.disjuncts.iter().all(|q| q.is_boolean())
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        self.disjuncts.iter().flat_map(|q| q.constants()).collect()
    }

    pub fn predicates(&self) -> BTreeSet<(Sym, usize)> {
        self.disjuncts.iter().flat_map(|q| q.predicates()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.disjuncts.first() else {
            return Err(Error::InvalidQuery("empty union".into()));
        };
        for q in &self.disjuncts {
            q.validate()?;
            if q.answer_vars.len() != first.answer_vars.len() {
                return Err(Error::InvalidQuery("disjuncts differ in arity".into()));
            }
        }
        Ok(())
    }
}

impl From<ConjunctiveQuery> for UnionQuery {
    fn from(q: ConjunctiveQuery) -> Self {
        UnionQuery::single(q)
    }
}

impl fmt::Debug for UnionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for UnionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.disjuncts.iter().map(|q| q.to_string()).collect();
        f.write_str(&parts.join(" | "))
    }
}

/// A role name, possibly inverted.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Role {
    pub name: Sym,
    pub inverse: bool,
}

impl Role {
    pub fn new(name: &str, inverse: bool) -> Role {
        Role { name: Sym::new(name), inverse }
    }

    pub fn inv(self) -> Role {
        Role { name: self.name, inverse: !self.inverse }
    }

    /// The atom `R(a,b)`, flipping the arguments for an inverse role.
    pub fn atom(self, a: Term, b: Term) -> Atom {
        if self.inverse {
            Atom::Role(self.name, [b, a])
        } else {
            Atom::Role(self.name, [a, b])
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BasicConcept {
    Atomic(Sym),
    Exists(Role),
}

impl BasicConcept {
    /// The atom asserting membership of `t`, using `fresh` for the unnamed role filler.
    pub fn atom(self, t: Term, fresh: Term) -> Atom {
        match self {
            BasicConcept::Atomic(a) => Atom::Concept(a, t),
            BasicConcept::Exists(r) => r.atom(t, fresh),
        }
    }

    pub fn pred(self) -> Sym {
        match self {
            BasicConcept::Atomic(a) => a,
            BasicConcept::Exists(r) => r.name,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Basic {
    Concept(BasicConcept),
    Role(Role),
}

impl Basic {
    pub fn pred(self) -> Sym {
        match self {
            Basic::Concept(c) => c.pred(),
            Basic::Role(r) => r.name,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Polarity {
    Inclusion,
    Disjointness,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct TBoxAxiom {
    pub lhs: Basic,
    pub rhs: Basic,
    pub polarity: Polarity,
}

impl TBoxAxiom {
    pub fn new(lhs: Basic, rhs: Basic, polarity: Polarity) -> Result<Self> {
        match (lhs, rhs) {
            (Basic::Concept(_), Basic::Concept(_)) | (Basic::Role(_), Basic::Role(_)) => {
                Ok(TBoxAxiom { lhs, rhs, polarity })
            }
            _ => Err(Error::MalformedAxiom("mixes a concept and a role".into())),
        }
    }

    pub fn concept_sub(lhs: BasicConcept, rhs: BasicConcept) -> Self {
        TBoxAxiom { lhs: Basic::Concept(lhs), rhs: Basic::Concept(rhs), polarity: Polarity::Inclusion }
    }

    pub fn role_sub(lhs: Role, rhs: Role) -> Self {
        TBoxAxiom { lhs: Basic::Role(lhs), rhs: Basic::Role(rhs), polarity: Polarity::Inclusion }
    }

    pub fn is_inclusion(&self) -> bool {
        self.polarity == Polarity::Inclusion
    }
}

#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct TBox {
    pub axioms: Vec<TBoxAxiom>,
}

impl TBox {
    pub fn new(axioms: impl IntoIterator<Item = TBoxAxiom>) -> Self {
        TBox { axioms: axioms.into_iter().collect() }
    }

    pub fn inclusions(&self) -> impl Iterator<Item = &TBoxAxiom> {
        self.axioms.iter().filter(|a| a.is_inclusion())
    }

    pub fn predicates(&self) -> BTreeSet<(Sym, usize)> {
        let mut out = BTreeSet::new();
        for ax in &self.axioms {
            for b in [ax.lhs, ax.rhs] {
                match b {
                    Basic::Concept(BasicConcept::Atomic(a)) => out.insert((a, 1)),
                    Basic::Concept(BasicConcept::Exists(r)) | Basic::Role(r) => out.insert((r.name, 2)),
                };
            }
        }
        out
    }

    pub fn role_names(&self) -> BTreeSet<Sym> {
        self.predicates().into_iter().filter(|p| p.1 == 2).map(|p| p.0).collect()
    }
}

/// A quantified ABox: ground atoms over constants and labeled nulls.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct ABox {
    pub atoms: BTreeSet<Atom>,
}

impl ABox {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
        for a in &atoms {
            if *a == Atom::Bottom || a.args().iter().any(Term::is_var) {
                return Err(Error::InvalidQuery(format!("`{a}` is not an ABox assertion")));
            }
        }
        Ok(ABox { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        self.atoms
            .iter()
            .flat_map(|a| a.args().iter())
            .filter(|t| t.is_const())
            .map(|t| t.name())
            .collect()
    }

    pub fn predicates(&self) -> BTreeSet<(Sym, usize)> {
        self.atoms.iter().filter_map(|a| a.pred().map(|p| (p, a.arity()))).collect()
    }
}

/// `∀x1,x2 (K body(x1,x2) → K head(x2))`.
///
/// `body.answer_vars` are the universally quantified variables; any other body
/// variable is existential. `head` is `None` for ⊥.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EpistemicDependency {
    pub body: ConjunctiveQuery,
    pub head: Option<ConjunctiveQuery>,
    pub frontier: Vec<Sym>,
}

pub type Ed = EpistemicDependency;

impl EpistemicDependency {
    /// Every body variable is universally quantified.
    pub fn new(body: Vec<Atom>, head: Option<Vec<Atom>>, frontier: Vec<Sym>) -> Result<Self> {
        let universals: Vec<Sym> = ConjunctiveQuery::boolean(body.clone()).vars().into_iter().collect();
        Self::with_universals(universals, body, head, frontier)
    }

    pub fn with_universals(
        universals: Vec<Sym>,
        body: Vec<Atom>,
        head: Option<Vec<Atom>>,
        frontier: Vec<Sym>,
    ) -> Result<Self> {
        if body.is_empty() || body.contains(&Atom::Bottom) {
            return Err(Error::MalformedEd("body must be a nonempty conjunction".into()));
        }
        let body = ConjunctiveQuery::new(universals.iter().map(|&v| Term::Var(v)).collect(), body);
        let body_vars = body.vars();
        for v in &universals {
            if !body_vars.contains(v) {
                return Err(Error::MalformedEd(format!("universal variable {v} absent from body")));
            }
        }
        for v in &frontier {
            if !universals.contains(v) {
                return Err(Error::MalformedEd(format!("frontier variable {v} absent from body")));
            }
        }
        let head = match head {
            None => None,
            Some(atoms) => {
                if atoms.is_empty() || atoms.contains(&Atom::Bottom) {
                    return Err(Error::MalformedEd("head must be a nonempty conjunction or bot".into()));
                }
                let head_vars = ConjunctiveQuery::boolean(atoms.clone()).vars();
                let answer = frontier
                    .iter()
                    .filter(|v| head_vars.contains(v))
                    .map(|&v| Term::Var(v))
                    .collect();
                Some(ConjunctiveQuery::new(answer, atoms))
            }
        };
        Ok(EpistemicDependency { body, head, frontier })
    }

    pub fn universals(&self) -> Vec<Sym> {
        self.body.answer_vars.iter().filter_map(Term::as_var).collect()
    }

    pub fn max_len(&self) -> usize {
        self.body.len().max(self.head.as_ref().map_or(1, |h| h.len()))
    }

    /// The head instance for an assignment of the universal variables (by position).
    pub fn head_instance(&self, universal_values: &[Term]) -> ConjunctiveQuery {
        let Some(head) = &self.head else {
            return ConjunctiveQuery::bottom();
        };
        let uni = self.universals();
        let atoms: Vec<Atom> = head
            .atoms
            .iter()
            .map(|a| {
                a.map(|t| match t {
                    Term::Var(v) => uni
                        .iter()
                        .position(|&u| u == v)
                        .map_or(t, |i| universal_values[i]),
                    _ => t,
                })
            })
            .collect();
        ConjunctiveQuery::boolean(atoms)
    }

    pub fn predicates(&self) -> BTreeSet<(Sym, usize)> {
        let mut out = self.body.predicates();
        if let Some(h) = &self.head {
            out.extend(h.predicates());
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        let mut out = self.body.constants();
        if let Some(h) = &self.head {
            out.extend(h.constants());
        }
        out
    }
}

impl fmt::Debug for EpistemicDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for EpistemicDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fr: Vec<&str> = self.frontier.iter().map(|v| v.as_str()).collect();
        let body: Vec<String> = self.body.atoms.iter().map(|a| a.to_string()).collect();
        write!(f, "ed frontier({}): {} -> ", fr.join(","), body.join(", "))?;
        match &self.head {
            None => f.write_str("bot"),
            Some(h) => {
                let head: Vec<String> = h.atoms.iter().map(|a| a.to_string()).collect();
                f.write_str(&head.join(", "))
            }
        }
    }
}

#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct Policy {
    pub eds: Vec<EpistemicDependency>,
}

impl Policy {
    pub fn new(eds: impl IntoIterator<Item = EpistemicDependency>) -> Self {
        Policy { eds: eds.into_iter().collect() }
    }

    pub fn max_len(&self) -> usize {
        self.eds.iter().map(|e| e.max_len()).max().unwrap_or(0)
    }

    pub fn predicates(&self) -> BTreeSet<(Sym, usize)> {
        self.eds.iter().flat_map(|e| e.predicates()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        self.eds.iter().flat_map(|e| e.constants()).collect()
    }

    /// True when some ED body has a variable that is not universally quantified.
    pub fn has_existential_bodies(&self) -> bool {
        self.eds.iter().any(|e| !e.body.existential_vars().is_empty())
    }
}

/// Outcome of the `T ⊨_EQL P` check performed at construction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EqlCheck {
    /// A DL-Lite_R TBox alone entails no ground atom, so no ED body ever fires.
    VacuouslySatisfied,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CqeInstance {
    pub tbox: TBox,
    pub abox: ABox,
    pub policy: Policy,
    pub eql_check: EqlCheck,
}

impl CqeInstance {
    pub fn predicates(&self) -> BTreeSet<(Sym, usize)> {
        let mut out = self.tbox.predicates();
        out.extend(self.abox.predicates());
        out.extend(self.policy.predicates());
        out
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        let mut out = self.abox.constants();
        out.extend(self.policy.constants());
        out
    }
}

// ---------------------------------------------------------------------------
// Canonical forms

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Desc {
    Same,
    Fixed(Term),
    Ex(usize),
}

/// Renames the variables in `ex` to `?_0, ?_1, ...` so that isomorphic inputs
/// (with the same fixed terms) yield identical sorted atom lists.
fn canonical_atoms(atoms: &[Atom], ex: &[Sym]) -> Vec<Atom> {
    if ex.is_empty() {
        let mut out = atoms.to_vec();
        out.sort();
        out.dedup();
        return out;
    }
    let index: BTreeMap<Sym, usize> = ex.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let slot = |t: &Term| t.as_var().and_then(|v| index.get(&v).copied());
    // occurrences[i] = (atom, position) pairs mentioning ex[i]
    let mut occ: Vec<Vec<(usize, usize)>> = vec![Vec::new(); ex.len()];
    for (ai, a) in atoms.iter().enumerate() {
        for (pi, t) in a.args().iter().enumerate() {
            if let Some(i) = slot(t) {
                occ[i].push((ai, pi));
            }
        }
    }
    let refine = |colors: &mut Vec<usize>| loop {
        let before = colors.iter().collect::<BTreeSet<_>>().len();
        let sigs: Vec<(usize, Vec<(Sym, usize, usize, Desc)>)> = (0..ex.len())
            .map(|i| {
                let mut s: Vec<_> = occ[i]
                    .iter()
                    .map(|&(ai, pi)| {
                        let a = &atoms[ai];
                        let other = if a.arity() == 2 {
                            let t = &a.args()[1 - pi];
                            match slot(t) {
                                Some(j) if j == i => Desc::Same,
                                Some(j) => Desc::Ex(colors[j]),
                                None => Desc::Fixed(*t),
                            }
                        } else {
                            Desc::Same
                        };
                        (a.pred().unwrap(), a.arity(), pi, other)
                    })
                    .collect();
                s.sort();
                (colors[i], s)
            })
            .collect();
        let ranks: Vec<_> = sigs.iter().collect::<BTreeSet<_>>().into_iter().collect();
        for i in 0..ex.len() {
            colors[i] = ranks.binary_search(&&sigs[i]).unwrap();
        }
        if ranks.len() == before {
            break;
        }
    };
    fn search(
        colors: Vec<usize>,
        atoms: &[Atom],
        slot: &dyn Fn(&Term) -> Option<usize>,
        refine: &dyn Fn(&mut Vec<usize>),
        best: &mut Option<Vec<Atom>>,
    ) {
        let mut colors = colors;
        refine(&mut colors);
        let n = colors.len();
        let mut counts = vec![0usize; n];
        for &c in &colors {
            counts[c] += 1;
        }
        match (0..n).find(|&c| counts[c] > 1) {
            None => {
                let mut out: Vec<Atom> = atoms
                    .iter()
                    .map(|a| a.map(|t| slot(&t).map_or(t, |i| Term::Var(canon_var(colors[i])))))
                    .collect();
                out.sort();
                out.dedup();
                if best.as_ref().is_none_or(|b| out < *b) {
                    *best = Some(out);
                }
            }
            Some(c) => {
                for v in (0..n).filter(|&i| colors[i] == c) {
                    let split: Vec<usize> = (0..n)
                        .map(|u| 2 * colors[u] + usize::from(colors[u] == c && u != v))
                        .collect();
                    search(split, atoms, slot, refine, best);
                }
            }
        }
    }
    let mut best = None;
    search(vec![0; ex.len()], atoms, &slot, &refine, &mut best);
    best.expect("at least one labeling")
}

/// Renames existential variables canonically and sorts atoms; answer variables keep their names.
pub fn canonicalize(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    if q.is_bottom() {
        return q.clone();
    }
    let ex = q.existential_vars();
    ConjunctiveQuery {
        answer_vars: q.answer_vars.clone(),
        atoms: canonical_atoms(&q.atoms, &ex),
    }
}

/// A key equal for two queries iff they are isomorphic (answer positions matched in order).
pub fn canonical_key(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    if q.is_bottom() {
        return q.clone();
    }
    let mut rename: BTreeMap<Sym, Sym> = BTreeMap::new();
    for (i, t) in q.answer_vars.iter().enumerate() {
        if let Term::Var(v) = t {
            rename.entry(*v).or_insert_with(|| canon_answer(i));
        }
    }
    let r = |t: Term| match t {
        Term::Var(v) => Term::Var(rename.get(&v).copied().unwrap_or(v)),
        _ => t,
    };
    let answer: Vec<Term> = q.answer_vars.iter().map(|&t| r(t)).collect();
    let atoms: Vec<Atom> = q.atoms.iter().map(|a| a.map(r)).collect();
    let ex = q.existential_vars();
    ConjunctiveQuery {
        answer_vars: answer,
        atoms: canonical_atoms(&atoms, &ex),
    }
}

pub fn is_isomorphic(q1: &ConjunctiveQuery, q2: &ConjunctiveQuery) -> bool {
    q1.answer_vars.len() == q2.answer_vars.len() && canonical_key(q1) == canonical_key(q2)
}

/// Identity substitution on the answer variables of `q`.
fn fix_answers(q: &ConjunctiveQuery) -> Subst {
    let mut s = Subst::new();
    for v in q.answer_var_names() {
        s.push((v, Term::Var(v)));
    }
    s
}

/// The core: repeatedly retract onto the image of an endomorphism that drops an atom.
pub fn core_of(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    if q.is_bottom() || q.atoms.len() < 2 {
        return ConjunctiveQuery::new(q.answer_vars.clone(), q.atoms.clone());
    }
    let mut atoms = q.atoms.clone();
    atoms.sort();
    atoms.dedup();
    'outer: loop {
        for i in 0..atoms.len() {
            let rest: Vec<Atom> = atoms.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, a)| *a).collect();
            let target = Target::new(&rest);
            let mut sub = fix_answers(q);
            if hom::find(&atoms, &target, &mut sub, &|_, _| true) {
                let mut image: Vec<Atom> = atoms.iter().map(|a| a.map(|t| hom::apply(&sub, t))).collect();
                image.sort();
                image.dedup();
                atoms = image;
                continue 'outer;
            }
        }
        break;
    }
    ConjunctiveQuery::new(q.answer_vars.clone(), atoms)
}

/// Core of `q` with existentials renamed canonically.
pub fn canonical_core(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    canonicalize(&core_of(q))
}

/// All BCQs made of a nonempty subset of `q`'s atoms, deduplicated up to isomorphism.
pub fn subqueries(q: &ConjunctiveQuery) -> Result<Vec<ConjunctiveQuery>> {
    if q.is_bottom() {
        return Err(Error::InvalidQuery("subqueries of bot".into()));
    }
    let n = q.atoms.len();
    if n > 20 {
        return Err(Error::limit("subquery enumeration", 20));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let atoms: Vec<Atom> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| q.atoms[i]).collect();
        let sub = ConjunctiveQuery::boolean(atoms);
        if seen.insert(canonical_key(&sub)) {
            out.push(sub);
        }
    }
    out.sort();
    Ok(out)
}

/// Conjunction of `qs`, renaming existential variables apart. ⊥ absorbs.
pub fn and_all(qs: &[ConjunctiveQuery]) -> Result<ConjunctiveQuery> {
    if qs.is_empty() {
        return Err(Error::InvalidQuery("conjunction of nothing".into()));
    }
    if qs.iter().any(|q| q.is_bottom()) {
        return Ok(ConjunctiveQuery::bottom());
    }
    let mut answer: Vec<Term> = Vec::new();
    for q in qs {
        for t in &q.answer_vars {
            if !answer.contains(t) {
                answer.push(*t);
            }
        }
    }
    let taken: BTreeSet<Sym> = answer.iter().filter_map(Term::as_var).collect();
    let mut counter = 0usize;
    let mut atoms = Vec::new();
    for q in qs {
        let mut rename: BTreeMap<Sym, Sym> = BTreeMap::new();
        for v in q.existential_vars() {
            let fresh = loop {
                let cand = canon_var(counter);
                counter += 1;
                if !taken.contains(&cand) {
                    break cand;
                }
            };
            rename.insert(v, fresh);
        }
        atoms.extend(q.atoms.iter().map(|a| {
            a.map(|t| match t {
                Term::Var(v) => Term::Var(rename.get(&v).copied().unwrap_or(v)),
                _ => t,
            })
        }));
    }
    Ok(ConjunctiveQuery::new(answer, atoms))
}

/// Atoms of `qs` with each member's variables replaced by fresh nulls `_n1, _n2, ...`.
pub(crate) fn freeze_atoms<'a>(qs: impl IntoIterator<Item = &'a ConjunctiveQuery>) -> Result<Vec<Atom>> {
    let mut counter = 0usize;
    let mut out = Vec::new();
    for q in qs {
        if q.is_bottom() {
            return Err(Error::InvalidQuery("cannot freeze bot".into()));
        }
        let mut rename: Vec<(Sym, Sym)> = Vec::new();
        for a in &q.atoms {
            out.push(a.map(|t| match t {
                Term::Var(v) => {
                    let n = match rename.iter().find(|(x, _)| *x == v) {
                        Some(&(_, n)) => n,
                        None => {
                            counter += 1;
                            let n = frozen_null(counter);
                            rename.push((v, n));
                            n
                        }
                    };
                    Term::Null(n)
                }
                _ => t,
            }));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn freeze(qs: &[ConjunctiveQuery]) -> Result<ABox> {
    Ok(ABox { atoms: freeze_atoms(qs)?.into_iter().collect() })
}

/// Checks well-formedness and consistency, producing an instance.
pub fn validate_instance(tbox: TBox, abox: ABox, policy: Policy) -> Result<CqeInstance> {
    for a in &abox.atoms {
        if *a == Atom::Bottom || a.args().iter().any(Term::is_var) {
            return Err(Error::InvalidQuery(format!("`{a}` is not an ABox assertion")));
        }
    }
    for ed in &policy.eds {
        let uni = ed.universals();
        if let Some(v) = ed.frontier.iter().find(|v| !uni.contains(v)) {
            return Err(Error::MalformedEd(format!("frontier variable {v} absent from body")));
        }
    }
    if !crate::reasoner::is_consistent(&tbox, &abox.atoms.iter().copied().collect::<Vec<_>>()) {
        return Err(Error::InconsistentOntology);
    }
    Ok(CqeInstance { tbox, abox, policy, eql_check: EqlCheck::VacuouslySatisfied })
}

/// A tuple-generating dependency `body ∧ Ind(ind) → ∃existentials head`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Tgd {
    pub body: Vec<Atom>,
    /// Body variables that must be bound to constants.
    pub ind: Vec<Sym>,
    pub head: Vec<Atom>,
    pub existentials: Vec<Sym>,
    pub frontier: Vec<Sym>,
}

impl Tgd {
    pub fn new(body: Vec<Atom>, ind: Vec<Sym>, head: Vec<Atom>) -> Self {
        let body_vars = ConjunctiveQuery::boolean(body.clone()).vars();
        let head_vars = ConjunctiveQuery::boolean(head.clone()).vars();
        let existentials = head_vars.iter().filter(|v| !body_vars.contains(v)).copied().collect();
        let frontier = head_vars.iter().filter(|v| body_vars.contains(v)).copied().collect();
        Tgd { body, ind, head, existentials, frontier }
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut body: Vec<String> = self.body.iter().map(|a| a.to_string()).collect();
        body.extend(self.ind.iter().map(|v| format!("Ind({v})")));
        let head: Vec<String> = self.head.iter().map(|a| a.to_string()).collect();
        let ex: Vec<&str> = self.existentials.iter().map(|v| v.as_str()).collect();
        if ex.is_empty() {
            write!(f, "{} -> {}", body.join(", "), head.join(", "))
        } else {
            write!(f, "{} -> exists {}. {}", body.join(", "), ex.join(","), head.join(", "))
        }
    }
}
