use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system specification: {}", format_violations(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("t_R = {t_r} must be positive")]
    NonPositiveRightHopping { t_r: f64 },

    #[error("beta = sqrt(t_R/t_L) is undefined for t_L = {t_l} <= 0")]
    UndefinedBeta { t_l: f64 },

    #[error("no emitter labelled {0:?}")]
    UnknownLabel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid integrator configuration: {0}")]
    InvalidIntegrator(String),

    #[error("non-finite amplitudes at t = {time}; last good sample at t = {last_good}")]
    NonFinite { time: f64, last_good: f64 },

    #[error("step limit of {max_steps} reached at t = {time}")]
    StepLimit { max_steps: usize, time: f64 },

    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64 },

    #[error("branch ambiguous at band edge (z = {re}{im:+}i)")]
    BranchAmbiguous { re: f64, im: f64 },

    #[error("contour passes through a pole: z = {re} lies inside the band with zero imaginary part")]
    SingularContour { re: f64 },

    #[error("singular pivot at index {index}")]
    SingularPivot { index: usize },

    #[error("no observables requested")]
    EmptyRequest,

    #[error("observable not recorded: {0}")]
    NotRecorded(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
