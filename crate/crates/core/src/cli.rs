//! The `cqe` command line.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::censor::optimal_censors;
use crate::entail::{ic_entails, sc_entails_explain, Mode, Witness};
use crate::error::Error;
use crate::harness::{gen_3cnf_instance, parse_dimacs};
use crate::model::{validate_instance, CqeInstance, UnionQuery};
use crate::privacy::indistinguishable_abox;
use crate::reasoner::is_consistent;
use crate::rewrite::{eval_fo, ic_rewriting, is_acyclic, sc_rewriting, FoFormula, Manifest};
use crate::textio::{parse_problem, serialize_formula, serialize_problem, ProblemFile};
use crate::Limits;

#[derive(Parser, Debug)]
#[command(name = "cqe", version, about = "Controlled query evaluation over DL-Lite_R ontologies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct Budget {
    /// Candidate BCQs generated while building a universe
    #[arg(long, global = true, default_value_t = Limits::default().universe_cap)]
    universe_cap: usize,
    /// Candidate clash queries in a rewriting
    #[arg(long, global = true, default_value_t = Limits::default().q_cap)]
    q_cap: usize,
    /// Search nodes visited while exploring censors
    #[arg(long, global = true, default_value_t = Limits::default().subset_cap)]
    subset_cap: usize,
}

impl From<Budget> for Limits {
    fn from(b: Budget) -> Limits {
        Limits { universe_cap: b.universe_cap, q_cap: b.q_cap, subset_cap: b.subset_cap }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Sc,
    Ic,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Sc => Mode::Sc,
            ModeArg::Ic => Mode::Ic,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Auto,
    Search,
    Rewrite,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report consistency and policy acyclicity
    Check {
        file: PathBuf,
    },
    /// Decide SC- or IC-entailment of a named query
    Ask {
        file: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, value_enum, default_value = "sc")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Print a counterexample censor when the answer is false
        #[arg(long)]
        explain: bool,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        budget: Budget,
    },
    /// Print the first-order rewriting of a named query and its manifest
    Rewrite {
        file: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, value_enum, default_value = "sc")]
        mode: ModeArg,
        #[command(flatten)]
        budget: Budget,
    },
    /// List the optimal censors cut to the k-universe
    Censors {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        budget: Budget,
    },
    /// Print an ABox indistinguishable from the file's on queries of length k
    Indist {
        file: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "sc")]
        mode: ModeArg,
        #[command(flatten)]
        budget: Budget,
    },
    /// Encode a 3-CNF formula as a problem file
    Gen3cnf {
        #[arg(long)]
        dimacs: PathBuf,
    },
}

fn load(path: &PathBuf) -> anyhow::Result<ProblemFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_problem(&text)?)
}

fn instance(pf: &ProblemFile) -> anyhow::Result<CqeInstance> {
    Ok(validate_instance(pf.tbox.clone(), pf.abox.clone(), pf.policy.clone())?)
}

fn named<'a>(pf: &'a ProblemFile, name: &str) -> anyhow::Result<&'a UnionQuery> {
    pf.query(name).ok_or_else(|| anyhow!("no query named `{name}`"))
}

fn rewriting(q: &UnionQuery, e: &CqeInstance, mode: Mode, limits: &Limits) -> crate::Result<(FoFormula, Manifest)> {
    match mode {
        Mode::Sc => sc_rewriting(q, &e.tbox, &e.policy, limits),
        Mode::Ic => ic_rewriting(q, &e.tbox, &e.policy, limits),
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    match cli.command {
        Command::Check { file } => {
            let pf = load(&file)?;
            let abox: Vec<_> = pf.abox.atoms.iter().copied().collect();
            writeln!(out, "consistent: {}", is_consistent(&pf.tbox, &abox))?;
            writeln!(out, "acyclic: {}", is_acyclic(&pf.tbox, &pf.policy))?;
            writeln!(out, "axioms: {}", pf.tbox.axioms.len())?;
            writeln!(out, "facts: {}", pf.abox.len())?;
            writeln!(out, "eds: {}", pf.policy.eds.len())?;
            writeln!(out, "queries: {}", pf.named_queries.len())?;
        }
        Command::Ask { file, query, mode, method, explain, json, budget } => {
            let pf = load(&file)?;
            let e = instance(&pf)?;
            let q = named(&pf, &query)?;
            let limits = Limits::from(budget);
            let mode = Mode::from(mode);
            let rewritten = match method {
                Method::Search => None,
                Method::Rewrite => Some(rewriting(q, &e, mode, &limits)?),
                Method::Auto if is_acyclic(&e.tbox, &e.policy) => match rewriting(q, &e, mode, &limits) {
                    Ok(r) => Some(r),
                    Err(Error::ResourceLimit { .. }) => None,
                    Err(err) => return Err(err.into()),
                },
                Method::Auto => None,
            };
            let (answer, used, witness) = match rewritten {
                Some((f, _)) => (eval_fo(&f, &e.abox)?, "rewrite", None),
                None => match mode {
                    Mode::Sc => {
                        let v = sc_entails_explain(&e, q, &limits)?;
                        (v.answer, "search", v.witness)
                    }
                    Mode::Ic => (ic_entails(&e, q, &limits)?, "search", None),
                },
            };
            if json {
                let v = json!({ "query": query, "mode": mode.to_string(), "answer": answer, "method": used });
                writeln!(out, "{v}")?;
            } else {
                writeln!(out, "{answer}")?;
            }
            if explain && !answer {
                match witness {
                    Some(Witness::NotEntailed) => writeln!(out, "# not entailed by the ontology")?,
                    Some(Witness::Kernel(atoms)) => {
                        writeln!(out, "# ground atoms of a censor that does not entail the query:")?;
                        for a in atoms {
                            writeln!(out, "#   {a}")?;
                        }
                    }
                    Some(Witness::Censor(qs)) => {
                        writeln!(out, "# a censor that does not entail the query:")?;
                        for c in qs {
                            writeln!(out, "#   {c}")?;
                        }
                    }
                    None => writeln!(out, "# no witness is produced by this method")?,
                }
            }
        }
        Command::Rewrite { file, query, mode, budget } => {
            let pf = load(&file)?;
            let q = named(&pf, &query)?;
            let e = CqeInstance { tbox: pf.tbox.clone(), abox: pf.abox.clone(), policy: pf.policy.clone(), eql_check: crate::model::EqlCheck::VacuouslySatisfied };
            let (f, manifest) = rewriting(q, &e, Mode::from(mode), &Limits::from(budget))?;
            writeln!(out, "{}", serialize_formula(&f))?;
            writeln!(out, "{}", manifest.to_json())?;
        }
        Command::Censors { file, k, budget } => {
            let pf = load(&file)?;
            let e = instance(&pf)?;
            let censors = optimal_censors(&e, k, &Limits::from(budget))?;
            for (i, c) in censors.iter().enumerate() {
                writeln!(out, "censor {}:", i + 1)?;
                for q in c {
                    writeln!(out, "  {q}")?;
                }
            }
        }
        Command::Indist { file, k, mode, budget } => {
            let pf = load(&file)?;
            let e = instance(&pf)?;
            let abox = indistinguishable_abox(&e, k, Mode::from(mode), &Limits::from(budget))?;
            let only = ProblemFile { tbox: Default::default(), abox, policy: Default::default(), named_queries: vec![] };
            write!(out, "{}", serialize_problem(&only))?;
        }
        Command::Gen3cnf { dimacs } => {
            let text = std::fs::read_to_string(&dimacs).with_context(|| format!("reading {}", dimacs.display()))?;
            let (e, goal) = gen_3cnf_instance(&parse_dimacs(&text)?)?;
            let pf = ProblemFile {
                tbox: e.tbox,
                abox: e.abox,
                policy: e.policy,
                named_queries: vec![("goal".into(), UnionQuery::single(goal))],
            };
            write!(out, "{}", serialize_problem(&pf))?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::ResourceLimit { .. }) => 2,
        Some(Error::InconsistentOntology) => 3,
        _ => 1,
    }
}

/// Runs the command line with `args` (program name first), writing answers to stdout.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}
