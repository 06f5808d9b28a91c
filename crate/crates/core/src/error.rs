use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, grids, lattices or representations do not line up.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} bound states but only {found} have negative energy on this grid")]
    Capacity { requested: usize, found: usize },

    #[error("numerical instability at step {step}: non-finite amplitudes")]
    NumericalInstability { step: usize },

    #[error("imaginary-time relaxation did not converge within {steps} steps (last |dE| = {last_delta:e})")]
    Convergence { steps: usize, last_delta: f64 },

    #[error("flux record is not converged: interior norm still changing by {rate:e} per step")]
    StaleFlux { rate: f64 },

    #[error("enhancement baseline P_l + P_n is zero")]
    UndefinedBaseline,

    #[error("probe frequency {omega_p}: {source}")]
    FragPoint {
        omega_p: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    /// Wraps a failure with the pipeline stage it came from.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
