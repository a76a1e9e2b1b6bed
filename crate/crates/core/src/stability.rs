//! Stability of the homogeneous dynamics `dR/dt = M(t) R`.
//!
//! The constant RWA drift is stable when it is Hurwitz; the periodic full
//! drift is stable when every Floquet multiplier lies strictly inside the
//! unit circle.

use nalgebra::{DMatrix, Matrix6};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrices::{DriftMode, DriftModel};

pub use crate::eigen::eigenvalues;

/// Largest real part that still counts as strictly negative.
pub const HURWITZ_MARGIN: f64 = -1e-12;

/// Bound on `|Pi|` entries before the propagator is declared divergent.
pub const PROPAGATOR_LIMIT: f64 = 1e12;

pub fn eigenvalues6(m: &Matrix6<f64>) -> Result<Vec<Complex64>> {
    eigenvalues(&DMatrix::from_iterator(6, 6, m.iter().copied()))
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(m: &Matrix6<f64>) -> Result<f64> {
    Ok(eigenvalues6(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn is_hurwitz(m: &Matrix6<f64>) -> Result<bool> {
    Ok(spectral_abscissa(m)? < HURWITZ_MARGIN)
}

/// Hurwitz test of the constant RWA drift matrix.
pub fn hurwitz_stable(model: &DriftModel) -> Result<bool> {
    if model.mode != DriftMode::Rwa {
        return Err(Error::WrongMode { expected: "rwa" });
    }
    is_hurwitz(&model.drift(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloquetResult {
    pub multipliers: Vec<Complex64>,
    pub period: f64,
    pub max_modulus: f64,
    pub stable: bool,
}

impl FloquetResult {
    fn from_multipliers(multipliers: Vec<Complex64>, period: f64) -> Self {
        let max_modulus = multipliers.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Self {
            multipliers,
            period,
            max_modulus,
            stable: max_modulus < 1.0,
        }
    }
}

/// Number of RK4 steps over one period: at most `T_min/100` per step, and
/// small enough that `h * |M| <= 0.01`.
pub fn floquet_steps(period: f64, shortest: Option<f64>, drift_norm: f64) -> usize {
    let mut h = period / 100.0;
    if let Some(tmin) = shortest {
        h = h.min(tmin / 100.0);
    }
    if drift_norm > 0.0 {
        h = h.min(0.01 / drift_norm);
    }
    (period / h).ceil().max(1.0) as usize
}

/// One-period principal matrix solution `Pi(T)` with `Pi(0) = I`, integrated
/// with `steps` classical RK4 steps.
pub fn monodromy<F>(drift: F, period: f64, steps: usize) -> Result<Matrix6<f64>>
where
    F: Fn(f64) -> Matrix6<f64>,
{
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::invalid("period", format!("must be positive and finite, got {period}")));
    }
    let steps = steps.max(1);
    let h = period / steps as f64;
    let mut pi = Matrix6::<f64>::identity();
    let mut m0 = drift(0.0);
    for k in 0..steps {
        let t = k as f64 * h;
        let mh = drift(t + 0.5 * h);
        let m1 = drift((k + 1) as f64 * h);
        let k1 = m0 * pi;
        let k2 = mh * (pi + k1 * (0.5 * h));
        let k3 = mh * (pi + k2 * (0.5 * h));
        let k4 = m1 * (pi + k3 * h);
        pi += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        if pi.iter().any(|v| !(v.abs() <= PROPAGATOR_LIMIT)) {
            return Err(Error::Divergence { t: t + h });
        }
        m0 = m1;
    }
    Ok(pi)
}

/// Floquet multipliers of an arbitrary `period`-periodic drift.
pub fn floquet_multipliers<F>(drift: F, period: f64, steps: usize) -> Result<FloquetResult>
where
    F: Fn(f64) -> Matrix6<f64>,
{
    let pi = monodromy(drift, period, steps)?;
    Ok(FloquetResult::from_multipliers(eigenvalues6(&pi)?, period))
}

/// Floquet analysis of the full periodic drift.
pub fn floquet(model: &DriftModel) -> Result<FloquetResult> {
    if model.mode != DriftMode::Full {
        return Err(Error::WrongMode { expected: "full" });
    }
    let period = model.period().ok_or(Error::Incommensurate)?;
    // All exponentials equal 1 at t = 0, where the couplings are largest.
    let norm = model.drift(0.0).abs().row_sum().max();
    let steps = floquet_steps(period, model.shortest_period(), norm);
    floquet_multipliers(|t| model.drift(t), period, steps)
}

/// Floquet analysis of a constant drift over an arbitrary period.
pub fn floquet_constant(m: &Matrix6<f64>, period: f64) -> Result<FloquetResult> {
    let norm = m.abs().row_sum().max();
    let steps = floquet_steps(period, None, norm);
    floquet_multipliers(|_| *m, period, steps)
}
