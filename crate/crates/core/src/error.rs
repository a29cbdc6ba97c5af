use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("t = {t} is outside (0, {end}]")]
    OutOfDomain { t: f64, end: f64 },

    #[error("kernel returned {value} at (t, s) = ({t}, {s})")]
    KernelEvaluation { t: f64, s: f64, value: f64 },

    #[error("nonlinearity returned a non-finite value at y = {y}")]
    NonFiniteEvaluation { y: f64 },

    #[error("no nontrivial collocation solution at step {step}")]
    NoNontrivialSolution { step: usize },

    #[error("fixed point escaped the scan range at step {step}")]
    StepDivergence { step: usize },

    #[error("negative argument of the nonlinearity at step {step}")]
    NegativeArgument { step: usize },

    #[error("damped iteration did not converge at step {step}")]
    NonConvergence { step: usize },

    #[error("reference solution has nonpositive integral")]
    DegenerateReference,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Solver-side failures, as opposed to bad input.
    pub fn is_solver_error(&self) -> bool {
        matches!(
            self,
            Error::NoNontrivialSolution { .. }
                | Error::StepDivergence { .. }
                | Error::NegativeArgument { .. }
                | Error::NonConvergence { .. }
                | Error::NonFiniteEvaluation { .. }
                | Error::KernelEvaluation { .. }
                | Error::DegenerateReference
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
