use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("J_{nu}({x}): no evaluation regime converged")]
    BesselNoConvergence { nu: f64, x: f64 },

    #[error("quadrature did not converge: value {value:e}, error estimate {err_est:e} (target {target:e})")]
    Quadrature { value: f64, err_est: f64, target: f64 },

    #[error("mode sum not converged: last modes contribute {tail:e} > {tol:e}")]
    TruncationNotConverged { tail: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
