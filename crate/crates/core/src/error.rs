use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the transport/noise computations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("scaling factor became non-positive (rho = {rho:.3e} at t = {t:.6e} s)")]
    Singular { rho: f64, t: f64 },

    #[error("integration produced a non-finite value at t = {t:.6e} s")]
    NonFinite { t: f64 },

    #[error("time step too coarse: dt = {dt:.3e} exceeds {limit:.3e} ({constraint})")]
    Resolution {
        dt: f64,
        limit: f64,
        constraint: &'static str,
    },

    #[error("quadrature did not converge in {context}: estimate {estimate:.9e}, error bound {bound:.3e}")]
    QuadratureNonConvergence {
        context: String,
        estimate: f64,
        bound: f64,
    },

    #[error("no sign change of G1 - G2 on the search bracket for tau = {tau:.6e} s")]
    NoCrossing { tau: f64 },

    #[error("minimizer pinned to the bracket edge after {expansions} expansions")]
    BracketEdge { expansions: u32 },

    #[error("{failed} of {total} realizations failed (first failure: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
