use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid function spec `{spec}`: {reason}")]
    InvalidSpec { spec: String, reason: String },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("cannot differentiate constant truncation below order 0")]
    DifferentiateConstant,

    #[error("evaluator not analytic on sampling circle (non-finite sample at index {index})")]
    NonAnalyticSample { index: usize },

    #[error("inconclusive fixed-point search after {steps} steps (last iterate {last_re}{last_im:+}i)")]
    InconclusiveFixedPoint { steps: usize, last_re: f64, last_im: f64 },

    #[error("QR iteration did not converge after {iterations} iterations (active block ending at row {index})")]
    EigenNonConvergence { iterations: usize, index: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec { .. } | Error::OutOfRange(_) => 2,
            Error::Inapplicable(_) => 4,
            _ => 3,
        }
    }
}
