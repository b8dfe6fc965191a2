use thiserror::Error;

/// Errors raised by model construction and the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("weak specification fails: the shift is not irreducible")]
    WeakSpecificationFails,

    #[error("fundamental group is Z: excluded case (first Betti number {betti})")]
    ElementaryFundamentalGroup { betti: i64 },

    #[error("word is not admissible: {0}")]
    NotAdmissible(String),

    #[error("points belong to different systems: {0}")]
    SystemMismatch(String),

    #[error("power iteration did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },

    #[error("insufficient unwinding: time {t} needs more than {window} edges")]
    InsufficientUnwinding { t: f64, window: usize },

    #[error("radius {rho} is above the expansivity scale {scale}")]
    AboveExpansivityScale { rho: f64, scale: f64 },

    #[error("no closed orbits yet with period at most {0}")]
    NoClosedOrbits(f64),

    #[error("statistics depth mismatch: have {have}, need {need}")]
    DepthMismatch { have: usize, need: usize },

    #[error("observable is not fiber-representable: {0}")]
    NotFiberRepresentable(String),

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("increase t: {0}")]
    IncreaseT(String),

    #[error("infeasible tolerance: eta {eta} is below the achievable {min_eta}")]
    Infeasible { eta: f64, min_eta: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that reject the input model rather than a computation.
    pub fn is_model_rejection(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::WeakSpecificationFails
                | Error::ElementaryFundamentalGroup { .. }
                | Error::NotAdmissible(_)
                | Error::SystemMismatch(_)
        )
    }

    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
