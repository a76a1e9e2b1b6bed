//! Drift and diffusion matrices of the quadrature Langevin equations.
//!
//! Quadrature ordering throughout the crate is
//! `[Q_d, P_d, Q_b1, P_b1, Q_b2, P_b2]`.

use std::f64::consts::PI;

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::{EffectiveCouplings, SystemParams};

/// Largest denominator accepted when rationalizing frequency ratios.
pub const PERIOD_MAX_DENOMINATOR: u64 = 10_000;
/// Largest common denominator (product of the reduced denominators' lcm).
pub const PERIOD_MAX_LCM: u64 = 1_000_000;
/// Relative error allowed in each rational approximation.
pub const PERIOD_RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftMode {
    /// Full time-dependent coefficients including counter-rotating terms.
    Full,
    /// Rotating-wave approximation: every oscillating term dropped.
    Rwa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    pub params: SystemParams,
    pub couplings: EffectiveCouplings,
    pub mode: DriftMode,
}

impl DriftModel {
    pub fn new(params: SystemParams, couplings: EffectiveCouplings, mode: DriftMode) -> Self {
        Self {
            params,
            couplings,
            mode,
        }
    }

    pub fn with_mode(&self, mode: DriftMode) -> Self {
        Self { mode, ..*self }
    }

    /// The four complex coupling combinations `G1..G4` at time `t`.
    pub fn g_terms(&self, t: f64) -> [Complex64; 4] {
        let (w1, w2) = self.phase_rates();
        self.g_terms_at_phases(Complex64::cis(w1 * t), Complex64::cis(w2 * t))
    }

    /// Angular rates of the two phase factors `e1 = exp(2i omega1 t)` and
    /// `e2 = exp(2i (omega2 + delta) t)` that generate every oscillating term.
    pub fn phase_rates(&self) -> (f64, f64) {
        let p = &self.params;
        (2.0 * p.omega1, 2.0 * (p.omega2 + p.delta))
    }

    /// `G1..G4` from the phase factors; they are ignored in RWA mode.
    pub fn g_terms_at_phases(&self, e1: Complex64, e2: Complex64) -> [Complex64; 4] {
        let gp = self.couplings.g_plus;
        let gm = self.couplings.g_minus;
        match self.mode {
            DriftMode::Rwa => [gp.into(), gm.into(), gp.into(), gm.into()],
            DriftMode::Full => {
                let one = Complex64::new(1.0, 0.0);
                [
                    gp + gm * e1,
                    gm + gp * e1.conj(),
                    gp * (one + e1 * e2) + gm * (e2 + e1),
                    gm * (one + e1 * e2.conj()) + gp * (e2.conj() + e1),
                ]
            }
        }
    }

    pub fn drift_at_phases(&self, e1: Complex64, e2: Complex64) -> Matrix6<f64> {
        drift_from_g_terms(&self.params, &self.g_terms_at_phases(e1, e2))
    }

    /// Drift matrix `M(t)`.
    pub fn drift(&self, t: f64) -> Matrix6<f64> {
        drift_from_g_terms(&self.params, &self.g_terms(t))
    }

    /// Magnitudes of the angular frequencies present in `M(t)`, zeros included.
    pub fn frequencies(&self) -> [f64; 4] {
        let p = &self.params;
        [
            (2.0 * p.omega1).abs(),
            (2.0 * (p.omega2 + p.delta)).abs(),
            (2.0 * (p.omega1 + p.omega2 + p.delta)).abs(),
            (2.0 * (p.omega1 - p.omega2 - p.delta)).abs(),
        ]
    }

    /// Common period of `M(t)`; `None` in RWA mode or when the modulation
    /// frequencies are incommensurate.
    pub fn period(&self) -> Option<f64> {
        match self.mode {
            DriftMode::Rwa => None,
            DriftMode::Full => commensurate_period(&self.frequencies()),
        }
    }

    /// Period of the fastest oscillation in `M(t)`; `None` when constant.
    pub fn shortest_period(&self) -> Option<f64> {
        match self.mode {
            DriftMode::Rwa => None,
            DriftMode::Full => {
                let fastest = self.frequencies().into_iter().fold(0.0, f64::max);
                (fastest > 0.0).then(|| 2.0 * PI / fastest)
            }
        }
    }
}

/// Assembles `M` from the coupling combinations `G1..G4`.
pub fn drift_from_g_terms(p: &SystemParams, g: &[Complex64; 4]) -> Matrix6<f64> {
    let [g1, g2, g3, g4] = *g;
    let (k, d) = (p.kappa / 2.0, p.delta);
    let (c1, c2) = (p.gamma1 / 2.0, p.gamma2 / 2.0);
    let s12 = g1 + g2;
    let d21 = g2 - g1;
    let s34 = g3 + g4;
    let d43 = g4 - g3;
    #[rustfmt::skip]
    let m = Matrix6::new(
        -k,        d,         s12.im,    d21.re,  0.0,       0.0,
        -d,        -k,        -s12.re,   d21.im,  0.0,       0.0,
        -d21.im,   d21.re,    -c1,       0.0,     s34.im,    d43.re,
        -s12.re,   -s12.im,   0.0,       -c1,     -s34.re,   d43.im,
        0.0,       0.0,       -d43.im,   d43.re,  -c2,       -d,
        0.0,       0.0,       -s34.re,   -s34.im, d,         -c2,
    );
    m
}

/// Diagonal diffusion matrix of the vacuum/thermal input noises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(Vector6<f64>);

impl DiffusionMatrix {
    pub fn from_diagonal(diag: Vector6<f64>) -> Self {
        Self(diag)
    }

    pub fn diagonal(&self) -> &Vector6<f64> {
        &self.0
    }

    pub fn to_matrix(&self) -> Matrix6<f64> {
        Matrix6::from_diagonal(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0 * factor)
    }
}

pub fn diffusion(p: &SystemParams) -> DiffusionMatrix {
    let cav = p.kappa * (2.0 * p.nbar_d + 1.0) / 2.0;
    let m1 = p.gamma1 * (2.0 * p.nbar_1 + 1.0) / 2.0;
    let m2 = p.gamma2 * (2.0 * p.nbar_2 + 1.0) / 2.0;
    DiffusionMatrix(Vector6::new(cav, cav, m1, m1, m2, m2))
}

/// Period `2 pi / f_gcd` of a set of angular frequencies, treating zeros as
/// constant terms. `None` if any ratio has no small-denominator rational form.
pub fn commensurate_period(freqs: &[f64]) -> Option<f64> {
    let nonzero: Vec<f64> = freqs.iter().map(|f| f.abs()).filter(|&f| f > 0.0).collect();
    let smallest = nonzero.iter().copied().fold(f64::INFINITY, f64::min);
    if !smallest.is_finite() {
        return None;
    }
    let mut fracs = Vec::with_capacity(nonzero.len());
    for &f in &nonzero {
        fracs.push(rationalize(f / smallest)?);
    }
    let mut common: u64 = 1;
    for &(_, q) in &fracs {
        common = lcm(common, q);
        if common > PERIOD_MAX_LCM {
            return None;
        }
    }
    let divisor = fracs
        .iter()
        .map(|&(p, q)| p * (common / q))
        .fold(0, gcd);
    let f_gcd = smallest * divisor as f64 / common as f64;
    Some(2.0 * PI / f_gcd)
}

/// Smallest-denominator fraction `p/q` within `PERIOD_RATIO_TOL` of `x`.
fn rationalize(x: f64) -> Option<(u64, u64)> {
    (1..=PERIOD_MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        let err = (p / q as f64 - x).abs();
        (p >= 1.0 && err <= PERIOD_RATIO_TOL * x).then(|| {
            let p = p as u64;
            let g = gcd(p, q);
            (p / g, q / g)
        })
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}
