//! Linearized covariance dynamics of a hybrid three-mode optomechanical
//! system driven by two tones and a modulated mechanical coupling.
//!
//! The cavity fluctuation mode `d` and the second mechanical mode `b2` are
//! entangled through an intermediate mechanical mode `b1` that acts as an
//! engineered reservoir for their Bogoliubov modes.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
mod eigen;
pub mod error;
pub mod matrices;
pub mod measures;
pub mod model;
pub mod stability;
pub mod sweep;

pub use dynamics::{evolve, lyapunov_steady_state, thermal_initial_state, CovarianceState, Trajectory};
pub use error::{Error, Result};
pub use matrices::{diffusion, DiffusionMatrix, DriftMode, DriftModel};
pub use measures::{entanglement_report, EntanglementReport, ReducedCovariance};
pub use model::{direct_couplings, effective_couplings, DriveSpec, EffectiveCouplings, SystemParams};
pub use stability::{floquet, hurwitz_stable, FloquetResult};
