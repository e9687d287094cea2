use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Mean spin vector too short to define a tangent frame.
    #[error("degenerate mean-spin direction: |<J>| = {length:e} is below threshold {threshold:e}")]
    DegenerateDirection { length: f64, threshold: f64 },

    #[error("Fock cutoff overflow: top-level population {population:e} with n_max = {n_max}; rerun with n_max >= {required}")]
    CutoffOverflow {
        n_max: usize,
        required: usize,
        population: f64,
    },

    #[error("integrator step size too coarse: {0}")]
    StepSize(String),

    /// Motion did not return to its initial state at the end of the gate.
    #[error("open phase-space loop: motional return fidelity {fidelity} for M_J = {m}")]
    OpenLoop { m: f64, fidelity: f64 },

    #[error("resource limit: {0}")]
    Resource(String),
}

impl Error {
    /// Process exit code for the CLI: 2 usage/config, 3 numerical health, 4 resource.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::DegenerateDirection { .. }
            | Error::CutoffOverflow { .. }
            | Error::StepSize(_)
            | Error::OpenLoop { .. } => 3,
            Error::Resource(_) => 4,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
