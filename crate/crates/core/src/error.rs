use thiserror::Error;

/// Errors produced by the numerical pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("family `{0}` has no shift structure")]
    NoShiftStructure(&'static str),

    #[error("family `{family}` is one-sided; site {n} is negative")]
    NegativeSite { family: &'static str, n: i64 },

    #[error("family `{0}` has no phase torus to sweep")]
    NotErgodic(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("inverse iteration stagnated for eigenvalue #{index} (residual {residual:e} after {attempts} attempts)")]
    Stagnated {
        index: usize,
        residual: f64,
        attempts: usize,
    },

    #[error("t-grid [{lo}, {hi}] does not cover the spectral hull [{need_lo}, {need_hi}]")]
    Coverage {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("key `{key}`: {msg}")]
    Parse { key: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
