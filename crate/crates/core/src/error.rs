use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("k = {k} lies within the pole guard of light line h = ({hx}, {hy}) with |Q| = {q}")]
    PoleProximity { k: f64, q: f64, hx: i64, hy: i64 },
    #[error("J_{order}(k zeta) is too close to a zero for every zeta tried")]
    BadZeta { order: usize },
    #[error("accelerated ({accelerated}) and spectral ({spectral}) values disagree")]
    MethodMismatch { accelerated: f64, spectral: f64 },
    #[error("Bloch ratio is 0/0 at k = {k}")]
    DegenerateRatio { k: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("identical light-line indices")]
    IdenticalModes,
    #[error("degeneracy lines are parallel (D_x = 0)")]
    ParallelLines,
    #[error("cone fit residual {residual:e} exceeds bound")]
    FitResidual { residual: f64 },
    #[error("pins {0} and {1} coincide")]
    DuplicatePins(usize, usize),
    #[error("cluster matrix near singular (condition estimate {condition:e})")]
    NearSingular {
        condition: f64,
        solution: Box<crate::cluster::ClusterSolution>,
    },
    #[error("all localisation weight sits on one pin")]
    DegenerateWeights,
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "Domain",
            Error::Overflow(_) => "Overflow",
            Error::InvalidInput(_) => "InvalidInput",
            Error::PoleProximity { .. } => "PoleProximity",
            Error::BadZeta { .. } => "BadZeta",
            Error::MethodMismatch { .. } => "MethodMismatch",
            Error::DegenerateRatio { .. } => "DegenerateRatio",
            Error::NoConvergence(_) => "NoConvergence",
            Error::IdenticalModes => "IdenticalModes",
            Error::ParallelLines => "ParallelLines",
            Error::FitResidual { .. } => "FitResidual",
            Error::DuplicatePins(..) => "DuplicatePins",
            Error::NearSingular { .. } => "NearSingular",
            Error::DegenerateWeights => "DegenerateWeights",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
