use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("predicate `{0}` used with inconsistent arity")]
    ArityMismatch(String),
    #[error("duplicate query name `{0}`")]
    DuplicateQueryName(String),
    #[error("TBox and ABox are inconsistent")]
    InconsistentOntology,
    #[error("malformed epistemic dependency: {0}")]
    MalformedEd(String),
    #[error("malformed axiom: {0}")]
    MalformedAxiom(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("{what} exceeded its budget of {cap}")]
    ResourceLimit { what: &'static str, cap: usize },
    #[error("policy is not acyclic for the TBox")]
    NotAcyclic,
    #[error("formula has free variable {0}")]
    FreeVariable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn limit(what: &'static str, cap: usize) -> Self {
        Error::ResourceLimit { what, cap }
    }
}
