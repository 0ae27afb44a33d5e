use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("log weight of region {region} is not representable at beta = {beta}")]
    Overflow { beta: f64, region: usize },
    #[error("no inverse temperature makes well {well} dominant (epsilon too large)")]
    ScheduleInfeasible { well: usize },
    #[error("continuous minimizer {value} lies below well index 1")]
    OutOfRange { value: f64 },
    #[error("regime violation: well {well} {reason} (log half-width {log_half_width})")]
    RegimeViolation {
        well: usize,
        log_half_width: f64,
        reason: &'static str,
    },
    #[error("invalid lattice dimensions: {0}")]
    InvalidDims(&'static str),
}
