use thiserror::Error;

/// Errors raised by the solver and its diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-integrable kernel: exponent s = {0} must satisfy 0 <= s < 1/2")]
    NonIntegrable(f64),

    #[error("stencil radius p = {given} is too small for horizon {horizon}; need p >= {required}")]
    StencilTooSmall {
        given: usize,
        required: usize,
        horizon: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("singular damping factor at depth {depth}")]
    Singular { depth: usize },

    #[error("time step {dt} violates the CFL bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("non-finite value detected at step {step}")]
    Unstable { step: usize },

    #[error("reference domain too small: enlargement {given} admits t <= {t_max}, need factor >= {required}")]
    Enlargement {
        given: usize,
        required: usize,
        t_max: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
