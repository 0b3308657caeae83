use thiserror::Error;

use crate::constructors::BandSequence;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation did not converge: {0}")]
    NonConvergent(String),

    #[error("angle {0} outside [0, pi]")]
    InvalidAngle(f64),

    #[error("tail of the counting measure does not converge: {0}")]
    UnboundedTail(String),

    #[error("log M(r) = {log_max} <= 1 at log r = {lr}; eps(r) is undefined")]
    DomainTooSmall { lr: f64, log_max: f64 },

    #[error("B(r1, u) = {0} is not positive; threshold too high")]
    ThresholdTooHigh(f64),

    #[error("specification is not monotone: {0}")]
    NonMonotoneSpec(String),

    /// Band recurrence left the two-level log representation. `partial` holds
    /// every band that was still representable.
    #[error("band recurrence overflowed after {representable} representable bands")]
    OverflowHorizon {
        representable: usize,
        partial: Box<BandSequence>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
