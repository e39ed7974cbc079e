use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants fall into two families that the CLI maps onto exit codes:
/// validation problems (bad input documents, inconsistent configs) and
/// numerical failures (singular matrices, diverging simulations).
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation in {context}: {message}")]
    Schema { context: String, message: String },

    #[error("{kind} '{element}' references undefined bus '{bus}'")]
    DanglingReference {
        kind: &'static str,
        element: String,
        bus: String,
    },

    #[error("branch '{0}' has zero impedance")]
    ZeroImpedance(String),

    #[error("network must contain exactly one slack bus, found {count}")]
    SlackCount { count: usize },

    #[error("invalid {element}: {message}")]
    Invalid { element: String, message: String },

    #[error("unknown element '{0}'")]
    UnknownElement(String),

    #[error("weights must lie in (0,1) and sum to one: {0}")]
    WeightConstraint(String),

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("bus '{0}' is isolated from every source")]
    IsolatedBus(String),

    #[error("zero Thevenin impedance at bus '{0}'")]
    ZeroThevenin(String),

    #[error("power flow did not converge after {iterations} iterations (max mismatch {max_mismatch:.3e} pu)")]
    NotConverged {
        iterations: usize,
        max_mismatch: f64,
    },

    #[error("initialization of machine '{machine}' failed: {message}")]
    Initialization { machine: String, message: String },

    #[error("simulation diverged at t = {time:.4} s in state '{state}'")]
    Diverged { state: String, time: f64 },

    #[error("network solution failed at t = {time:.4} s: {message}")]
    NetworkSolve { time: f64, message: String },

    #[error("record file {path}, line {line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("signal alignment failed: {0}")]
    Alignment(String),

    #[error("missing reference for {0}")]
    MissingReference(String),

    #[error("{0}")]
    Precondition(String),

    #[error("{stage}: all {evaluations} evaluated candidates failed; the search box admits no solvable equivalent")]
    Infeasible { stage: String, evaluations: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn invalid(element: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            element: element.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularJacobian(_)
                | Error::IsolatedBus(_)
                | Error::ZeroThevenin(_)
                | Error::NotConverged { .. }
                | Error::Diverged { .. }
                | Error::NetworkSolve { .. }
                | Error::Infeasible { .. }
        )
    }

    /// Process exit code used by the CLI: 2 for validation, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            3
        } else {
            2
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
