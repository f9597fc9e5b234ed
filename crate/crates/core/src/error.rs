use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot normalize to gamma units: total atomic decay is zero")]
    ZeroGamma,

    #[error("no third-order exceptional point for these rates (g^2 radicand = {radicand})")]
    NoEp3 { radicand: f64 },

    #[error("eigenvalue {index} is zero; analytic eigenvector component is singular")]
    SingularComponent { index: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error(
        "Fock cutoff too small: top level holds {occupancy:e} of the population (limit {limit:e})"
    )]
    CutoffTooSmall { occupancy: f64, limit: f64 },

    #[error("steady state is not unique (stationarity system is singular)")]
    DegenerateSteadyState,

    #[error("trajectory integrator failure: {0}")]
    IntegratorStep(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoEp3 { .. }
                | Error::SingularComponent { .. }
                | Error::Singular(_)
                | Error::CutoffTooSmall { .. }
                | Error::DegenerateSteadyState
                | Error::IntegratorStep(_)
                | Error::FitFailure(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
