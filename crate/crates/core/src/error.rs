use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which part of the legality condition on the objective a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Sublevel sets of the objective must be bounded.
    Boundedness,
    /// Every duration inside a sublevel set must be strictly positive.
    StrictPositiveness,
    /// Shape or range problems that make the objective undefined.
    Structure,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::Boundedness => f.write_str("bounded sublevel sets"),
            Clause::StrictPositiveness => f.write_str("strictly positive durations"),
            Clause::Structure => f.write_str("well-formed problem"),
        }
    }
}

/// One reason a problem was rejected.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub field: String,
    pub clause: Clause,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, clause: Clause, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            clause,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (breaks {})", self.field, self.message, self.clause)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation time {t} outside segment [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },

    #[error("invalid problem: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("degenerate free-variable block: R_PP is singular (pivot {pivot:e}, norm {norm:e})")]
    DegenerateFreeBlock { pivot: f64, norm: f64 },

    #[error("no free variables: every boundary entry is fixed")]
    NoFreeVariables,

    #[error("degenerate segment {segment}: cost has no interior minimizer in duration")]
    DegenerateSegment { segment: usize },

    #[error("cost has no interior minimizer in duration")]
    NoInteriorMinimizer,

    #[error("numerical conditioning: rational cost residual {residual:e} exceeds {tolerance:e}")]
    Conditioning { residual: f64, tolerance: f64 },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by a malformed or illegal problem rather than
    /// by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Parse { .. })
    }
}
