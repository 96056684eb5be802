use thiserror::Error;

/// Errors raised by the enumeration, sampling and numerics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("enumeration budget of {budget} node expansions exceeded")]
    Budget { budget: u64 },

    #[error("{what} outside the supported domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("quadrature failed to reach tolerance {tolerance:e} within {subdivisions} subdivisions (estimate {estimate:e})")]
    Quadrature {
        tolerance: f64,
        subdivisions: usize,
        estimate: f64,
    },

    #[error("no root of the truncated renewal sum in (0, log 2]")]
    NoRoot,

    #[error("acceptance collapsed: {accepted} accepted after {attempts} attempts")]
    Timeout { accepted: usize, attempts: u64 },

    #[error("step size collapsed at radius {radius} (dt_min = {dt_min:e})")]
    StepCollapse { radius: f64, dt_min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
