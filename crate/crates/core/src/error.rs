use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A size parameter is outside the range the operation supports.
    #[error("{what} = {value} is outside the supported range {min}..={cap}{hint}")]
    Size {
        what: &'static str,
        value: usize,
        min: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Validation(String),

    /// Adaptive quadrature stopped short of the requested tolerance.
    #[error("quadrature of {integrand} reached error estimate {achieved:e} > tolerance {tolerance:e} (estimate {estimate})")]
    Precision {
        integrand: &'static str,
        estimate: f64,
        achieved: f64,
        tolerance: f64,
    },

    #[error("moment table covers n <= {covered}, but n = {requested} was requested")]
    MissingRows { covered: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_size(
    what: &'static str,
    value: usize,
    min: usize,
    cap: usize,
    hint: &'static str,
) -> Result<()> {
    if value < min || value > cap {
        Err(Error::Size {
            what,
            value,
            min,
            cap,
            hint,
        })
    } else {
        Ok(())
    }
}
