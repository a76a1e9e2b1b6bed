//! Covariance-matrix dynamics `dsigma/dt = M sigma + sigma M^T + D`.

use nalgebra::{DMatrix, DVector, Matrix6};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrices::{DiffusionMatrix, DriftMode, DriftModel};
use crate::measures::{self, symplectic_spectrum, ReducedCovariance};
use crate::model::SystemParams;
use crate::stability;

/// Entry magnitude beyond which an integration is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Integration steps per shortest oscillation period of `M(t)`.
pub const STEPS_PER_OSCILLATION: f64 = 50.0;

/// Minimum LU pivot, relative to the largest entry of the Lyapunov operator.
pub const PIVOT_TOL: f64 = 1e-14;

/// Required steady-state residual relative to `max |D|`.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceState {
    /// Time in units of `1/gamma1`; infinite for a stationary state.
    pub t: f64,
    pub sigma: Matrix6<f64>,
}

impl CovarianceState {
    pub fn new(t: f64, sigma: Matrix6<f64>) -> Self {
        Self { t, sigma }
    }

    pub fn reduced(&self) -> ReducedCovariance {
        measures::reduce(self)
    }

    /// Smallest symplectic eigenvalue of the full three-mode state.
    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        let s = DMatrix::from_iterator(6, 6, self.sigma.iter().copied());
        Ok(symplectic_spectrum(&s)?[0])
    }

    fn symmetrize(&mut self) {
        self.sigma = (self.sigma + self.sigma.transpose()) * 0.5;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<CovarianceState>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn last(&self) -> Option<&CovarianceState> {
        self.samples.last()
    }
}

/// Every mode in equilibrium with its own bath.
pub fn thermal_initial_state(params: &SystemParams) -> CovarianceState {
    let v = |n: f64| (2.0 * n + 1.0) / 2.0;
    let (d, b1, b2) = (v(params.nbar_d), v(params.nbar_1), v(params.nbar_2));
    let diag = nalgebra::Vector6::new(d, d, b1, b1, b2, b2);
    CovarianceState::new(0.0, Matrix6::from_diagonal(&diag))
}

/// Largest RK4 step allowed for `model`.
pub fn max_step(model: &DriftModel) -> f64 {
    let fallback = || {
        let p = &model.params;
        let fastest = p
            .kappa
            .max(p.gamma1)
            .max(p.gamma2)
            .max(model.couplings.g_minus)
            .max(p.delta.abs());
        0.01 / fastest
    };
    match model.mode {
        DriftMode::Rwa => fallback(),
        DriftMode::Full => model
            .shortest_period()
            .map(|t| t / STEPS_PER_OSCILLATION)
            .unwrap_or_else(fallback),
    }
}

/// Integrates from `init` to `t_end`, collecting a sample at `init.t` and every
/// `dt_out` thereafter (the last one at `t_end`).
pub fn evolve(
    model: &DriftModel,
    diffusion: &DiffusionMatrix,
    init: &CovarianceState,
    t_end: f64,
    dt_out: f64,
) -> Result<Trajectory> {
    let mut samples = Vec::new();
    evolve_with(model, diffusion, init, t_end, dt_out, |s| samples.push(*s))?;
    Ok(Trajectory { samples })
}

/// Streaming form of [`evolve`]: `observe` sees each emitted sample in order.
/// Returns the final state.
pub fn evolve_with<F>(
    model: &DriftModel,
    diffusion: &DiffusionMatrix,
    init: &CovarianceState,
    t_end: f64,
    dt_out: f64,
    observe: F,
) -> Result<CovarianceState>
where
    F: FnMut(&CovarianceState),
{
    evolve_with_step(model, diffusion, init, t_end, dt_out, max_step(model), observe)
}

/// [`evolve_with`] with an explicit cap on the RK4 step.
pub fn evolve_with_step<F>(
    model: &DriftModel,
    diffusion: &DiffusionMatrix,
    init: &CovarianceState,
    t_end: f64,
    dt_out: f64,
    step_cap: f64,
    mut observe: F,
) -> Result<CovarianceState>
where
    F: FnMut(&CovarianceState),
{
    if !(t_end > init.t) || !t_end.is_finite() {
        return Err(Error::invalid("t_end", format!("must exceed the initial time {}", init.t)));
    }
    if !(dt_out > 0.0) || !dt_out.is_finite() {
        return Err(Error::invalid("dt_out", "must be positive"));
    }
    let h_max = step_cap.min(dt_out);
    if !(h_max > 0.0) || !h_max.is_finite() {
        return Err(Error::StepUnderflow { t: init.t, h: h_max });
    }

    let d = diffusion.to_matrix();
    let constant = model.mode == DriftMode::Rwa;
    let m_const = model.drift(init.t);
    let (w1, w2) = model.phase_rates();
    let rhs = |m: &Matrix6<f64>, s: &Matrix6<f64>| {
        let k = m * s;
        k + k.transpose() + d
    };

    let mut state = *init;
    state.symmetrize();
    observe(&state);

    let t0 = init.t;
    let n_out = ((t_end - t0) / dt_out - 1e-9).ceil().max(1.0) as usize;
    for j in 1..=n_out {
        let target = if j == n_out { t_end } else { t0 + j as f64 * dt_out };
        let start = state.t;
        let span = target - start;
        let substeps = (span / h_max).ceil().max(1.0);
        let h = span / substeps;
        if !(h > 0.0) || start + h == start {
            return Err(Error::StepUnderflow { t: start, h });
        }
        let substeps = substeps as usize;
        // Phase factors advance by a fixed rotation per half step and are
        // resynchronized exactly at every output time.
        let (r1, r2) = (Complex64::cis(0.5 * w1 * h), Complex64::cis(0.5 * w2 * h));
        let (mut e1, mut e2) = (Complex64::cis(w1 * start), Complex64::cis(w2 * start));
        let mut m0 = if constant { m_const } else { model.drift_at_phases(e1, e2) };
        let mut advance = || {
            if constant {
                m_const
            } else {
                e1 *= r1;
                e2 *= r2;
                model.drift_at_phases(e1, e2)
            }
        };
        let mut sigma = state.sigma;
        for k in 0..substeps {
            let t1 = start + (k + 1) as f64 * h;
            let mh = advance();
            let m1 = advance();
            let k1 = rhs(&m0, &sigma);
            let k2 = rhs(&mh, &(sigma + k1 * (0.5 * h)));
            let k3 = rhs(&mh, &(sigma + k2 * (0.5 * h)));
            let k4 = rhs(&m1, &(sigma + k3 * h));
            sigma += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
            sigma = (sigma + sigma.transpose()) * 0.5;
            if sigma.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
                return Err(Error::Divergence { t: t1 });
            }
            m0 = m1;
        }
        state = CovarianceState::new(target, sigma);
        observe(&state);
    }
    Ok(state)
}

/// Solves `M X + X M^T + D = 0` through the 36x36 vectorized system.
pub fn solve_lyapunov(m: &Matrix6<f64>, d: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    let md = DMatrix::from_iterator(6, 6, m.iter().copied());
    let eye = DMatrix::<f64>::identity(6, 6);
    // Column-major vec: vec(M X) = (I (x) M) vec X, vec(X M^T) = (M (x) I) vec X.
    let op = eye.kronecker(&md) + md.kronecker(&eye);
    let rhs = DVector::from_iterator(36, d.iter().map(|v| -v));

    let scale = op.amax();
    let lu = op.clone().lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(min_pivot >= PIVOT_TOL * scale) {
        return Err(Error::Singular { pivot: min_pivot });
    }
    let mut x = lu.solve(&rhs).ok_or(Error::Singular { pivot: min_pivot })?;
    // A couple of refinement sweeps tighten the residual on ill-conditioned drifts.
    for _ in 0..2 {
        let r = &rhs - &op * &x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    let mut sigma = Matrix6::from_iterator(x.iter().copied());
    sigma = (sigma + sigma.transpose()) * 0.5;
    Ok(sigma)
}

/// `max |M sigma + sigma M^T + D|`.
pub fn lyapunov_residual(m: &Matrix6<f64>, sigma: &Matrix6<f64>, d: &Matrix6<f64>) -> f64 {
    (m * sigma + sigma * m.transpose() + d).amax()
}

/// Stationary covariance of the RWA dynamics.
pub fn lyapunov_steady_state(model: &DriftModel, diffusion: &DiffusionMatrix) -> Result<CovarianceState> {
    if model.mode != DriftMode::Rwa {
        return Err(Error::WrongMode { expected: "rwa" });
    }
    let m = model.drift(0.0);
    let abscissa = stability::spectral_abscissa(&m)?;
    if !(abscissa < stability::HURWITZ_MARGIN) {
        return Err(Error::Unstable(format!(
            "RWA drift is not Hurwitz (max Re lambda = {abscissa:e})"
        )));
    }
    let d = diffusion.to_matrix();
    let sigma = solve_lyapunov(&m, &d)?;
    let residual = lyapunov_residual(&m, &sigma, &d);
    let tolerance = LYAPUNOV_RESIDUAL_TOL * diffusion.max_abs();
    if !(residual <= tolerance) {
        return Err(Error::Residual { residual, tolerance });
    }
    Ok(CovarianceState::new(f64::INFINITY, sigma))
}
