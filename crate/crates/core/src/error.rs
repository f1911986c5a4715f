use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CdtError {
    /// An argument lies outside the open interval where a function is defined.
    #[error("{what} = {value} lies outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    /// The dual variable vanished where it appears in a denominator.
    #[error("singular dual variable: {0}")]
    Singular(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Safeguarded Newton ran out of iterations; carries the best bracket.
    #[error("root refinement did not converge in {iterations} iterations, bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    /// No dual root was found for a strictly positive load.
    #[error("no root of the dual algebraic equation found for tau^2 = {tau_sq}")]
    NoRoot { tau_sq: f64 },

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("strain field is not integrable: curl residual {residual:e} at node ({i}, {j}) exceeds {tol:e}")]
    NonIntegrable {
        residual: f64,
        tol: f64,
        i: usize,
        j: usize,
    },

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    /// Problem configuration rejected; `key` names the offending entry.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
}

pub type Result<T> = std::result::Result<T, CdtError>;

impl CdtError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CdtError::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
