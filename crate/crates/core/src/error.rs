use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid network: {0}")]
    Validation(String),

    #[error("network contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no value `{value}`")]
    UnknownValue { variable: String, value: String },

    #[error("malformed {what}: {message}")]
    Syntax { what: &'static str, message: String },

    #[error("instantiation is incomplete: variable `{0}` is unassigned")]
    IncompleteInstantiation(String),

    #[error("conflicting assignments for variable `{0}`")]
    ConflictingAssignment(String),

    #[error("{0} is not a probability in [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("evidence has zero probability")]
    ZeroEvidence,

    #[error("probability {value} is outside the open interval (0, 1) required by {what}")]
    Boundary { what: &'static str, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state space of {states} exceeds the enumeration cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u128 },
}

impl Error {
    /// Input errors (malformed text, unknown names, invalid documents) as
    /// opposed to semantic failures on well-formed input.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::ZeroEvidence
                | Error::Boundary { .. }
                | Error::Domain(_)
                | Error::StateSpaceTooLarge { .. }
        )
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse_error",
            Error::Validation(_) => "invalid_network",
            Error::Cycle(_) => "cycle",
            Error::UnknownVariable(_) => "unknown_variable",
            Error::UnknownValue { .. } => "unknown_value",
            Error::Syntax { .. } => "syntax_error",
            Error::IncompleteInstantiation(_) => "incomplete_instantiation",
            Error::ConflictingAssignment(_) => "conflicting_assignment",
            Error::InvalidProbability(_) => "invalid_probability",
            Error::InvalidConstraint(_) => "invalid_constraint",
            Error::ZeroEvidence => "zero_evidence",
            Error::Boundary { .. } => "boundary_probability",
            Error::Domain(_) => "domain_error",
            Error::StateSpaceTooLarge { .. } => "state_space_too_large",
        }
    }
}
