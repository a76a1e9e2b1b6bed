use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("classical amplitude denominator vanishes (kappa = 0 and delta = {delta} sits on a drive sideband)")]
    SingularDenominator { delta: f64 },

    #[error("classical amplitude {which} is not real: |Im|/|a| = {ratio:e}")]
    ComplexAmplitude { which: &'static str, ratio: f64 },

    #[error("coupling mismatch for {which}: g1 * a = {derived}, modulation amplitude = {given}")]
    CouplingMismatch {
        which: &'static str,
        derived: f64,
        given: f64,
    },

    #[error("unstable: {0}")]
    Unstable(String),

    #[error("operation requires {expected} drift mode")]
    WrongMode { expected: &'static str },

    #[error("modulation frequencies are incommensurate; no finite period")]
    Incommensurate,

    #[error("covariance integration diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("integration step underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("singular linear system (pivot {pivot:e})")]
    Singular { pivot: f64 },

    #[error("Lyapunov residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("QR iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("nonphysical state: {0}")]
    Nonphysical(String),

    #[error("sweep grid is empty")]
    EmptyGrid,

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("optimum sits at a grid endpoint; no bracket to refine")]
    EndpointOptimum,

    #[error("sweep has no stable rows")]
    NoStableRows,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs or the physics.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::StepUnderflow { .. }
                | Error::Singular { .. }
                | Error::Residual { .. }
                | Error::NoConvergence { .. }
                | Error::Nonphysical(_)
        )
    }
}
