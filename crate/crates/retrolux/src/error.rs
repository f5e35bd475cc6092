//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building or running a simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value is out of range or inconsistent (bad mode
    /// index, mismatched mode counts, empty keep set, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An optical element failed the unitarity check at construction.
    #[error("element on modes ({i},{j}) is not unitary: max |M\u{2020}M - I| entry = {deviation:.3e}")]
    NonUnitaryElement { i: usize, j: usize, deviation: f64 },

    /// Normalization was requested for a state with zero norm.
    #[error("cannot normalize a state with zero norm")]
    DegenerateState,

    /// A state or matrix does not live in the basis it was paired with.
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    /// A detection record is inconsistent with every surviving history.
    #[error("impossible observation: {0}")]
    ImpossibleObservation(String),

    /// The request would exceed a hard size limit.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A scenario file could not be tokenized.
    #[error("scenario syntax error at line {line}: {message}")]
    ScenarioSyntax { line: usize, message: String },

    /// A scenario file parsed but describes an invalid experiment.
    #[error("scenario error: {0}")]
    ScenarioSemantic(String),

    /// A runtime self-check (norm drift, oracle deviation) failed.
    #[error("numerical validation failure: {0}")]
    NumericalValidation(String),

    /// A module error raised while running a named scenario.
    #[error("in scenario '{scenario}': {source}")]
    InScenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid<S: Into<String>>(msg: S) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_scenario(self, name: &str) -> Self {
        Error::InScenario {
            scenario: name.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping any scenario context layers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InScenario { source, .. } => source.root(),
            other => other,
        }
    }
}
