//! Problem files and the prefix syntax of rewritten formulas.
//!
//! ```text
//! TBOX
//!   A sub D
//!   exists R- disj B
//! ABOX
//!   A(o). R(o,p).
//! POLICY
//!   ed frontier(?x): D(?x), C(?x) -> bot
//! query q: B(o) | R(o,?y)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{
    ABox, Atom, Basic, BasicConcept, ConjunctiveQuery as Cq, EpistemicDependency as Ed, Policy, Polarity, Role, Sym,
    TBox, TBoxAxiom, Term, UnionQuery,
};
use crate::rewrite::FoFormula;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    pub tbox: TBox,
    pub abox: ABox,
    pub policy: Policy,
    /// Queries in file order.
    pub named_queries: Vec<(String, UnionQuery)>,
}

impl ProblemFile {
    pub fn query(&self, name: &str) -> Option<&UnionQuery> {
        self.named_queries.iter().find(|(n, _)| n == name).map(|(_, q)| q)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Null(String),
    Punct(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const KEYWORDS: &[&str] = &["TBOX", "ABOX", "POLICY", "query", "ed", "sub", "disj", "exists", "bot"];
const SECTIONS: &[&str] = &["TBOX", "ABOX", "POLICY", "query"];

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn lex(text: &str, extra: &[char]) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, col) = (ln + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            let word = |start: usize| {
                let mut j = start;
                while j < chars.len() && (is_word(chars[j]) || extra.contains(&chars[j])) {
                    j += 1;
                }
                (chars[start..j].iter().collect::<String>(), j)
            };
            let tok = if c == '?' || c == '_' {
                let (w, j) = word(i + 1);
                if w.is_empty() {
                    return Err(Error::Syntax { line, col, expected: "a name after the prefix".into() });
                }
                i = j;
                if c == '?' {
                    Tok::Var(w)
                } else {
                    Tok::Null(w)
                }
            } else if is_word(c) || extra.contains(&c) {
                let (w, j) = word(i);
                i = j;
                Tok::Ident(w)
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                i += 2;
                Tok::Punct("->")
            } else {
                let p = match c {
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    '.' => ".",
                    ':' => ":",
                    '|' => "|",
                    '-' => "-",
                    '=' => "=",
                    _ => return Err(Error::Syntax { line, col, expected: "a token".into() }),
                };
                i += 1;
                Tok::Punct(p)
            };
            out.push(Token { tok, line, col });
        }
    }
    Ok(out)
}

/// A TBox side before the concept/role question is settled.
#[derive(Clone, Copy, Debug)]
enum RawBasic {
    Name(Sym),
    Exists(Role),
    Inverse(Sym),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn new(text: &str, extra: &[char]) -> Result<Self> {
        let toks = lex(text, extra)?;
        let lines = text.lines().count().max(1);
        let last = text.lines().last().map_or(0, |l| l.chars().count());
        Ok(Parser { toks, pos: 0, end: (lines, last + 1) })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn err(&self, expected: &str) -> Error {
        let (line, col) = self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.col));
        Error::Syntax { line, col, expected: expected.into() }
    }

    fn punct(&mut self, p: &'static str) -> Result<()> {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("`{p}`")))
        }
    }

    fn eat(&mut self, p: &'static str) -> bool {
        if self.peek() == Some(&Tok::Punct(p)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == kw)
    }

    fn at_section(&self) -> bool {
        SECTIONS.iter().any(|s| self.at_keyword(s))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        if self.at_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("`{kw}`")))
        }
    }

    /// A non-keyword identifier.
    fn name(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(w)) if !KEYWORDS.contains(&w.as_str()) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.err(what)),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let t = match self.peek() {
            Some(Tok::Var(v)) => Term::var(v),
            Some(Tok::Null(n)) => Term::Null(Sym::new(&format!("_{n}"))),
            Some(Tok::Ident(w)) if !KEYWORDS.contains(&w.as_str()) => Term::cst(w),
            _ => return Err(self.err("a term")),
        };
        self.pos += 1;
        Ok(t)
    }

    fn atom(&mut self) -> Result<Atom> {
        let p = self.name("a predicate")?;
        self.punct("(")?;
        let a = self.term()?;
        let atom = if self.eat(",") {
            let b = self.term()?;
            Atom::role(&p, a, b)
        } else {
            Atom::concept(&p, a)
        };
        self.punct(")")?;
        Ok(atom)
    }

    fn atom_list(&mut self) -> Result<Vec<Atom>> {
        let mut out = vec![self.atom()?];
        while self.eat(",") {
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn raw_basic(&mut self) -> Result<RawBasic> {
        if self.at_keyword("exists") {
            self.pos += 1;
            let name = self.name("a role name")?;
            let inverse = self.eat("-");
            return Ok(RawBasic::Exists(Role::new(&name, inverse)));
        }
        let name = self.name("a concept or role name")?;
        if self.eat("-") {
            Ok(RawBasic::Inverse(Sym::new(&name)))
        } else {
            Ok(RawBasic::Name(Sym::new(&name)))
        }
    }
}

struct Arities {
    known: BTreeMap<Sym, usize>,
}

impl Arities {
    fn note(&mut self, p: Sym, arity: usize) -> Result<()> {
        match self.known.insert(p, arity) {
            Some(a) if a != arity => Err(Error::ArityMismatch(p.to_string())),
            _ => Ok(()),
        }
    }

    fn atoms<'a>(&mut self, atoms: impl IntoIterator<Item = &'a Atom>) -> Result<()> {
        for a in atoms {
            if let Some(p) = a.pred() {
                self.note(p, a.arity())?;
            }
        }
        Ok(())
    }
}

fn resolve_tbox(raw: &[(RawBasic, RawBasic, Polarity)], ar: &mut Arities) -> Result<TBox> {
    for (l, r, _) in raw {
        for side in [l, r] {
            match *side {
                RawBasic::Exists(role) => ar.note(role.name, 2)?,
                RawBasic::Inverse(name) => ar.note(name, 2)?,
                RawBasic::Name(_) => {}
            }
        }
    }
    // an unqualified name is a role when the other side of its axiom is one
    loop {
        let mut changed = false;
        for (l, r, _) in raw {
            let role_side = |b: &RawBasic, ar: &Arities| match b {
                RawBasic::Inverse(_) => true,
                RawBasic::Name(n) => ar.known.get(n) == Some(&2),
                RawBasic::Exists(_) => false,
            };
            for (a, b) in [(l, r), (r, l)] {
                if let RawBasic::Name(n) = a {
                    if !ar.known.contains_key(n) && role_side(b, ar) {
                        ar.known.insert(*n, 2);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut axioms = Vec::new();
    for &(l, r, pol) in raw {
        let conv = |b: RawBasic, ar: &mut Arities| -> Result<Basic> {
            Ok(match b {
                RawBasic::Exists(role) => Basic::Concept(BasicConcept::Exists(role)),
                RawBasic::Inverse(n) => Basic::Role(Role { name: n, inverse: true }),
                RawBasic::Name(n) => match ar.known.get(&n) {
                    Some(2) => Basic::Role(Role { name: n, inverse: false }),
                    _ => {
                        ar.note(n, 1)?;
                        Basic::Concept(BasicConcept::Atomic(n))
                    }
                },
            })
        };
        let (lb, rb) = (conv(l, ar)?, conv(r, ar)?);
        let ax = TBoxAxiom::new(lb, rb, pol).map_err(|_| {
            let n = if matches!(lb, Basic::Role(_)) { rb.pred() } else { lb.pred() };
            Error::ArityMismatch(n.to_string())
        })?;
        axioms.push(ax);
    }
    Ok(TBox::new(axioms))
}

pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let mut p = Parser::new(text, &[])?;
    let mut raw_tbox = Vec::new();
    let mut facts = Vec::new();
    let mut eds: Vec<(Vec<Atom>, Option<Vec<Atom>>, Vec<Sym>)> = Vec::new();
    let mut queries: Vec<(String, Vec<Vec<Atom>>)> = Vec::new();
    while p.peek().is_some() {
        if p.at_keyword("TBOX") {
            p.pos += 1;
            while p.peek().is_some() && !p.at_section() {
                let l = p.raw_basic()?;
                let pol = if p.at_keyword("sub") {
                    Polarity::Inclusion
                } else if p.at_keyword("disj") {
                    Polarity::Disjointness
                } else {
                    return Err(p.err("`sub` or `disj`"));
                };
                p.pos += 1;
                let r = p.raw_basic()?;
                raw_tbox.push((l, r, pol));
            }
        } else if p.at_keyword("ABOX") {
            p.pos += 1;
            while p.peek().is_some() && !p.at_section() {
                let start = p.pos;
                let a = p.atom()?;
                if a.args().iter().any(Term::is_var) {
                    p.pos = start;
                    return Err(p.err("a fact over constants and nulls"));
                }
                p.punct(".")?;
                facts.push(a);
            }
        } else if p.at_keyword("POLICY") {
            p.pos += 1;
            while p.at_keyword("ed") {
                p.pos += 1;
                p.keyword("frontier")?;
                p.punct("(")?;
                let mut frontier = Vec::new();
                if !p.eat(")") {
                    loop {
                        match p.peek() {
                            Some(Tok::Var(v)) => {
                                frontier.push(Sym::new(&format!("?{v}")));
                                p.pos += 1;
                            }
                            _ => return Err(p.err("a variable")),
                        }
                        if p.eat(")") {
                            break;
                        }
                        p.punct(",")?;
                    }
                }
                p.punct(":")?;
                let body = p.atom_list()?;
                p.punct("->")?;
                let head = if p.at_keyword("bot") {
                    p.pos += 1;
                    None
                } else {
                    Some(p.atom_list()?)
                };
                eds.push((body, head, frontier));
            }
            if p.peek().is_some() && !p.at_section() {
                return Err(p.err("`ed` or a section keyword"));
            }
        } else if p.at_keyword("query") {
            p.pos += 1;
            let name = p.name("a query name")?;
            if queries.iter().any(|(n, _)| *n == name) {
                return Err(Error::DuplicateQueryName(name));
            }
            p.punct(":")?;
            let mut disjuncts = vec![p.atom_list()?];
            while p.eat("|") {
                disjuncts.push(p.atom_list()?);
            }
            queries.push((name, disjuncts));
        } else {
            return Err(p.err("`TBOX`, `ABOX`, `POLICY` or `query`"));
        }
    }

    let mut ar = Arities { known: BTreeMap::new() };
    ar.atoms(&facts)?;
    for (body, head, _) in &eds {
        ar.atoms(body)?;
        ar.atoms(head.iter().flatten())?;
    }
    for (_, ds) in &queries {
        ar.atoms(ds.iter().flatten())?;
    }
    let tbox = resolve_tbox(&raw_tbox, &mut ar)?;
    let abox = ABox::new(facts)?;
    let policy = Policy::new(
        eds.into_iter()
            .map(|(b, h, f)| Ed::new(b, h, f))
            .collect::<Result<Vec<_>>>()?,
    );
    let named_queries = queries
        .into_iter()
        .map(|(n, ds)| {
            let q = UnionQuery::new(ds.into_iter().map(Cq::boolean));
            q.validate().map(|_| (n, q))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProblemFile { tbox, abox, policy, named_queries })
}

/// A Boolean UCQ in query syntax: `A(?x), R(?x,o) | B(o)`.
pub fn parse_query(text: &str) -> Result<UnionQuery> {
    let pf = parse_problem(&format!("query q: {text}"))?;
    Ok(pf.named_queries.into_iter().next().expect("one query").1)
}

fn role_text(r: &Role) -> String {
    if r.inverse {
        format!("{}-", r.name)
    } else {
        r.name.to_string()
    }
}

fn basic_text(b: &Basic) -> String {
    match b {
        Basic::Concept(BasicConcept::Atomic(a)) => a.to_string(),
        Basic::Concept(BasicConcept::Exists(r)) => format!("exists {}", role_text(r)),
        Basic::Role(r) => role_text(r),
    }
}

pub fn serialize_problem(pf: &ProblemFile) -> String {
    let mut out = String::new();
    if !pf.tbox.axioms.is_empty() {
        out.push_str("TBOX\n");
        for ax in &pf.tbox.axioms {
            let op = if ax.is_inclusion() { "sub" } else { "disj" };
            let _ = writeln!(out, "  {} {op} {}", basic_text(&ax.lhs), basic_text(&ax.rhs));
        }
    }
    if !pf.abox.is_empty() {
        out.push_str("ABOX\n");
        for a in &pf.abox.atoms {
            let _ = writeln!(out, "  {a}.");
        }
    }
    if !pf.policy.eds.is_empty() {
        out.push_str("POLICY\n");
        for ed in &pf.policy.eds {
            let _ = writeln!(out, "  {ed}");
        }
    }
    for (name, q) in &pf.named_queries {
        let _ = writeln!(out, "query {name}: {q}");
    }
    out
}

/// Fully parenthesized prefix form, e.g. `(not (exists (?x) (and C(?x) (Ind ?x))))`.
pub fn serialize_formula(f: &FoFormula) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

fn write_formula(f: &FoFormula, out: &mut String) {
    match f {
        FoFormula::Pred(a) => {
            let _ = write!(out, "{a}");
        }
        FoFormula::Ind(t) => {
            let _ = write!(out, "(Ind {t})");
        }
        FoFormula::Eq(a, b) => {
            let _ = write!(out, "(= {a} {b})");
        }
        FoFormula::And(xs) | FoFormula::Or(xs) => {
            out.push_str(if matches!(f, FoFormula::And(_)) { "(and" } else { "(or" });
            for x in xs {
                out.push(' ');
                write_formula(x, out);
            }
            out.push(')');
        }
        FoFormula::Not(g) => {
            out.push_str("(not ");
            write_formula(g, out);
            out.push(')');
        }
        FoFormula::Exists(vs, g) => {
            let names: Vec<&str> = vs.iter().map(|v| v.as_str()).collect();
            let _ = write!(out, "(exists ({}) ", names.join(" "));
            write_formula(g, out);
            out.push(')');
        }
        FoFormula::True => out.push_str("true"),
        FoFormula::False => out.push_str("false"),
    }
}

/// Inverse of [`serialize_formula`].
pub fn parse_formula(text: &str) -> Result<FoFormula> {
    let mut p = Parser::new(text, &['%'])?;
    let f = formula(&mut p)?;
    if p.peek().is_some() {
        return Err(p.err("end of formula"));
    }
    Ok(f)
}

fn formula_term(p: &mut Parser) -> Result<Term> {
    let t = match p.peek() {
        Some(Tok::Var(v)) => Term::var(v),
        Some(Tok::Null(n)) => Term::Null(Sym::new(&format!("_{n}"))),
        Some(Tok::Ident(w)) => Term::cst(w),
        _ => return Err(p.err("a term")),
    };
    p.pos += 1;
    Ok(t)
}

fn formula(p: &mut Parser) -> Result<FoFormula> {
    match p.peek().cloned() {
        Some(Tok::Ident(w)) if p.peek_at(1) == Some(&Tok::Punct("(")) => {
            p.pos += 2;
            let a = formula_term(p)?;
            let atom = if p.eat(",") {
                Atom::role(&w, a, formula_term(p)?)
            } else {
                Atom::concept(&w, a)
            };
            p.punct(")")?;
            Ok(FoFormula::Pred(atom))
        }
        Some(Tok::Ident(w)) if w == "true" => {
            p.pos += 1;
            Ok(FoFormula::True)
        }
        Some(Tok::Ident(w)) if w == "false" => {
            p.pos += 1;
            Ok(FoFormula::False)
        }
        Some(Tok::Punct("(")) => {
            p.pos += 1;
            let f = if p.eat("=") {
                let a = formula_term(p)?;
                FoFormula::Eq(a, formula_term(p)?)
            } else {
                let head = match p.peek() {
                    Some(Tok::Ident(w)) => w.clone(),
                    _ => return Err(p.err("a connective")),
                };
                p.pos += 1;
                match head.as_str() {
                    "and" | "or" => {
                        let mut xs = Vec::new();
                        while p.peek() != Some(&Tok::Punct(")")) {
                            xs.push(formula(p)?);
                        }
                        if head == "and" {
                            FoFormula::And(xs)
                        } else {
                            FoFormula::Or(xs)
                        }
                    }
                    "not" => FoFormula::Not(Box::new(formula(p)?)),
                    "Ind" => FoFormula::Ind(formula_term(p)?),
                    "exists" => {
                        p.punct("(")?;
                        let mut vs = Vec::new();
                        while let Some(Tok::Var(v)) = p.peek() {
                            vs.push(Sym::new(&format!("?{v}")));
                            p.pos += 1;
                        }
                        p.punct(")")?;
                        FoFormula::Exists(vs, Box::new(formula(p)?))
                    }
                    _ => {
                        p.pos -= 1;
                        return Err(p.err("`and`, `or`, `not`, `exists`, `Ind` or `=`"));
                    }
                }
            };
            p.punct(")")?;
            Ok(f)
        }
        _ => Err(p.err("a formula")),
    }
}
