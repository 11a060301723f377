use thiserror::Error;

use crate::params::Regime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("linear value of {sequence} overflows f64 at n = {n} (log value {log_value}); request the log-domain value")]
    Overflow {
        sequence: &'static str,
        n: usize,
        log_value: f64,
    },

    #[error("n = {n} is outside the cached range 1..={horizon}")]
    OutOfRange { n: usize, horizon: usize },

    #[error("the drift sequence a_n is undefined from n = {from} on (gamma_{k} = 0)", k = from - 1)]
    DriftUndefined { from: usize },

    #[error("the martingale decomposition is singular for these parameters (beta = a(beta+1))")]
    SingularDecomposition,

    #[error("{quantity} is only defined in the {expected} regime, parameters are {actual}")]
    WrongRegime {
        quantity: &'static str,
        expected: &'static str,
        actual: Regime,
    },

    #[error("step history was not stored for this walk")]
    HistoryUnavailable,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
