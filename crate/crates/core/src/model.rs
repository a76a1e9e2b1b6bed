//! Physical parameters and the effective couplings of the linearized model.
//!
//! All rates and frequencies are expressed in units of the intermediate
//! mechanical damping rate `gamma1`, which is therefore exactly 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum relative imaginary part tolerated in a classical amplitude.
pub const REAL_AMPLITUDE_TOL: f64 = 1e-6;

/// Relative tolerance for the modulation/drive matching condition.
pub const MATCHING_TOL: f64 = 1e-9;

/// Ratio by which the mode frequencies must exceed the couplings for the
/// rotating-wave flag to be set.
pub const RWA_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Intermediate mechanical frequency.
    pub omega1: f64,
    /// Frequency of the second mechanical (or microwave) mode.
    pub omega2: f64,
    /// Cavity-drive detuning.
    pub delta: f64,
    /// Cavity decay rate.
    pub kappa: f64,
    /// Intermediate mechanical damping; the unit of every other rate.
    pub gamma1: f64,
    pub gamma2: f64,
    pub nbar_d: f64,
    pub nbar_1: f64,
    pub nbar_2: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega1: 0.0,
            omega2: 0.0,
            delta: 0.0,
            kappa: 0.0,
            gamma1: 1.0,
            gamma2: 0.0,
            nbar_d: 0.0,
            nbar_1: 0.0,
            nbar_2: 0.0,
        }
    }
}

impl SystemParams {
    /// Checks finiteness, non-negativity and the `gamma1 = 1` unit convention.
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("kappa", self.kappa),
            ("gamma2", self.gamma2),
            ("nbar_d", self.nbar_d),
            ("nbar_1", self.nbar_1),
            ("nbar_2", self.nbar_2),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
            if v < 0.0 {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        if self.gamma1 != 1.0 {
            return Err(Error::invalid(
                "gamma1",
                format!("is the unit of rates and must equal 1, got {}", self.gamma1),
            ));
        }
        Ok(())
    }

    /// Whether the counter-rotating terms are far enough off resonance for the
    /// rotating-wave approximation. Advisory only.
    pub fn rwa_valid(&self, couplings: &EffectiveCouplings) -> bool {
        let slowest = self
            .omega1
            .min(self.omega2)
            .min((self.omega1 - self.omega2 - self.delta).abs());
        slowest >= RWA_RATIO * couplings.g_plus.max(couplings.g_minus)
    }
}

/// Two-tone cavity drive plus the modulated mechanical coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub epsilon_plus: Complex64,
    pub epsilon_minus: Complex64,
    /// Single-photon optomechanical coupling.
    pub g1: f64,
    /// Modulation amplitude of the sum-frequency component.
    pub g2_a: f64,
    /// Modulation amplitude of the difference-frequency component.
    pub g2_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCouplings {
    pub g_plus: f64,
    pub g_minus: f64,
    /// Classical cavity amplitudes, when derived from a drive.
    pub a_plus: Option<Complex64>,
    pub a_minus: Option<Complex64>,
    /// Two-mode squeezing parameter `atanh(G+/G-)`.
    pub squeezing: f64,
    /// Bogoliubov-mode coupling `sqrt(G-^2 - G+^2)`.
    pub bogoliubov_coupling: f64,
}

impl EffectiveCouplings {
    /// No effective coupling at all (`G+ = G- = 0`).
    pub fn uncoupled() -> Self {
        Self {
            g_plus: 0.0,
            g_minus: 0.0,
            a_plus: None,
            a_minus: None,
            squeezing: 0.0,
            bogoliubov_coupling: 0.0,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.g_plus / self.g_minus
    }
}

/// Steady classical amplitudes of the two drive tones at `w_d +/- omega1`.
pub fn classical_amplitudes(params: &SystemParams, drive: &DriveSpec) -> Result<(Complex64, Complex64)> {
    if params.kappa < 0.0 {
        return Err(Error::invalid("kappa", "must be >= 0"));
    }
    let i = Complex64::i();
    let base = Complex64::new(-params.kappa / 2.0, -params.delta);
    let scale = 1.0 + params.delta.abs() + params.omega1.abs();
    let amplitude = |eps: Complex64, sign: f64| -> Result<Complex64> {
        let den = base + i * (sign * params.omega1);
        if den.norm() <= 1e-14 * scale {
            return Err(Error::SingularDenominator { delta: params.delta });
        }
        Ok(i * eps / den)
    };
    Ok((
        amplitude(drive.epsilon_plus, 1.0)?,
        amplitude(drive.epsilon_minus, -1.0)?,
    ))
}

/// Derives `G+/-` from the drive and checks the matching condition
/// `g1 a+ = g2_a`, `g1 a- = g2_b`.
pub fn effective_couplings(params: &SystemParams, drive: &DriveSpec) -> Result<EffectiveCouplings> {
    let (a_plus, a_minus) = classical_amplitudes(params, drive)?;
    for (which, a) in [("a_plus", a_plus), ("a_minus", a_minus)] {
        let norm = a.norm();
        if norm > 0.0 {
            let ratio = a.im.abs() / norm;
            if ratio >= REAL_AMPLITUDE_TOL {
                return Err(Error::ComplexAmplitude { which, ratio });
            }
        }
    }
    let g_plus = drive.g1 * a_plus.re;
    let g_minus = drive.g1 * a_minus.re;
    for (which, derived, given) in [("G_plus", g_plus, drive.g2_a), ("G_minus", g_minus, drive.g2_b)] {
        let scale = derived.abs().max(given.abs());
        if (derived - given).abs() > MATCHING_TOL * scale {
            return Err(Error::CouplingMismatch { which, derived, given });
        }
    }
    let mut couplings = direct_couplings(g_plus, g_minus)?;
    couplings.a_plus = Some(a_plus);
    couplings.a_minus = Some(a_minus);
    Ok(couplings)
}

/// Builds couplings directly from `G+` and `G-`, bypassing the drive.
pub fn direct_couplings(g_plus: f64, g_minus: f64) -> Result<EffectiveCouplings> {
    if !g_plus.is_finite() || g_plus < 0.0 {
        return Err(Error::invalid("g_plus", format!("must be finite and >= 0, got {g_plus}")));
    }
    if !g_minus.is_finite() {
        return Err(Error::invalid("g_minus", "must be finite"));
    }
    if g_plus >= g_minus {
        return Err(Error::Unstable(format!(
            "G+ < G- required, got G+ = {g_plus}, G- = {g_minus}"
        )));
    }
    let ratio = g_plus / g_minus;
    Ok(EffectiveCouplings {
        g_plus,
        g_minus,
        a_plus: None,
        a_minus: None,
        squeezing: ratio.atanh(),
        // (G- - G+)(G- + G+) avoids cancellation near G+ ~ G-.
        bogoliubov_coupling: ((g_minus - g_plus) * (g_minus + g_plus)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(kappa: f64, delta: f64, omega1: f64) -> SystemParams {
        SystemParams {
            kappa,
            delta,
            omega1,
            ..Default::default()
        }
    }

    fn drive(ep: Complex64, em: Complex64) -> DriveSpec {
        DriveSpec {
            epsilon_plus: ep,
            epsilon_minus: em,
            g1: 1.0,
            g2_a: 0.0,
            g2_b: 0.0,
        }
    }

    #[test]
    fn zero_drive_gives_zero_amplitude() {
        let (ap, _) = classical_amplitudes(&params(0.3, 0.7, 4.0), &drive(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))).unwrap();
        assert_eq!(ap, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn lower_sideband_amplitude_modulus() {
        let (_, am) = classical_amplitudes(&params(0.2, 1.0, 10.0), &drive(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))).unwrap();
        // |i / (-0.1 - 11i)| evaluated by hand
        assert_relative_eq!(am.norm(), 1.0 / (0.01f64 + 121.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(am.norm(), 0.0909053, max_relative = 1e-6);
    }

    #[test]
    fn pole_of_amplitude_is_rejected() {
        let err = classical_amplitudes(&params(0.0, -10.0, 10.0), &drive(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))).unwrap_err();
        assert!(matches!(err, Error::SingularDenominator { .. }));
    }

    #[test]
    fn squeezing_from_ratio() {
        let c = direct_couplings(0.918 * 2.5, 2.5).unwrap();
        assert_relative_eq!(c.squeezing, 0.918f64.atanh(), max_relative = 1e-15);
        assert_relative_eq!(c.squeezing, 1.57616, epsilon = 1e-5);
        assert_relative_eq!(2.0 * c.squeezing, 3.1523, epsilon = 1e-4);
        assert_relative_eq!(c.bogoliubov_coupling, (6.25f64 * (1.0 - 0.918 * 0.918)).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(c.bogoliubov_coupling, 0.99145, epsilon = 1e-5);
    }

    #[test]
    fn no_squeezing_without_blue_tone() {
        let c = direct_couplings(0.0, 2.5).unwrap();
        assert_eq!(c.squeezing, 0.0);
        assert_eq!(c.bogoliubov_coupling, 2.5);
    }

    #[test]
    fn equal_couplings_are_unstable() {
        assert!(matches!(direct_couplings(2.5, 2.5), Err(Error::Unstable(_))));
        assert!(matches!(direct_couplings(3.0, 2.5), Err(Error::Unstable(_))));
        assert!(matches!(direct_couplings(-0.1, 2.5), Err(Error::InvalidParameter { .. })));
    }

    /// Drive chosen so both amplitudes come out real: eps = -i * a * den.
    fn matched_drive(p: &SystemParams, a_plus: f64, a_minus: f64, g1: f64) -> DriveSpec {
        let i = Complex64::i();
        let den = |s: f64| Complex64::new(-p.kappa / 2.0, -p.delta) + i * (s * p.omega1);
        DriveSpec {
            epsilon_plus: -i * a_plus * den(1.0),
            epsilon_minus: -i * a_minus * den(-1.0),
            g1,
            g2_a: g1 * a_plus,
            g2_b: g1 * a_minus,
        }
    }

    #[test]
    fn drive_path_matches_direct_path() {
        let p = params(0.0005, 1.0, 10.0);
        let d = matched_drive(&p, 2.295e4, 2.5e4, 1e-4);
        let c = effective_couplings(&p, &d).unwrap();
        let direct = direct_couplings(2.295, 2.5).unwrap();
        assert_relative_eq!(c.g_plus, direct.g_plus, max_relative = 1e-12);
        assert_relative_eq!(c.g_minus, direct.g_minus, max_relative = 1e-12);
        assert_relative_eq!(c.squeezing, direct.squeezing, max_relative = 1e-10);
        assert!(c.a_plus.is_some());
    }

    #[test]
    fn mismatched_modulation_is_rejected() {
        let p = params(0.0005, 1.0, 10.0);
        let mut d = matched_drive(&p, 2.0, 2.5, 1.0);
        d.g2_a *= 1.0 + 1e-6;
        assert!(matches!(effective_couplings(&p, &d), Err(Error::CouplingMismatch { which: "G_plus", .. })));
    }

    #[test]
    fn complex_amplitude_is_rejected() {
        let p = params(0.2, 1.0, 10.0);
        let d = drive(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(matches!(effective_couplings(&p, &d), Err(Error::ComplexAmplitude { .. })));
    }

    #[test]
    fn rwa_flag() {
        let c = direct_couplings(0.918 * 2.5, 2.5).unwrap();
        let mut p = SystemParams { omega1: 10.0, omega2: 100.0, delta: 1.0, ..Default::default() };
        assert!(!p.rwa_valid(&c));
        p.omega1 = 200.0;
        p.omega2 = 100.0;
        p.delta = 1.0;
        assert!(p.rwa_valid(&c));
    }

    #[test]
    fn validation_names_key() {
        let p = SystemParams { gamma2: -1.0, ..Default::default() };
        match p.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "gamma2"),
            other => panic!("{other:?}"),
        }
        let p = SystemParams { gamma1: 2.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn couplings_identities(g_minus in 0.01f64..50.0, ratio in 0.0f64..0.999) {
                let c = direct_couplings(ratio * g_minus, g_minus).unwrap();
                prop_assert!((c.squeezing.tanh() * g_minus - c.g_plus).abs() <= 1e-13 * g_minus);
                let lhs = c.bogoliubov_coupling.powi(2) + c.g_plus.powi(2);
                prop_assert!((lhs - g_minus * g_minus).abs() <= 1e-12 * g_minus * g_minus);
            }

            #[test]
            fn amplitudes_are_linear_in_drive(re in -5.0f64..5.0, im in -5.0f64..5.0,
                                              kappa in 0.01f64..2.0, delta in -5.0f64..5.0, omega1 in 0.0f64..20.0) {
                let p = params(kappa, delta, omega1);
                let eps = Complex64::new(re, im);
                let (ap, am) = classical_amplitudes(&p, &drive(eps, eps)).unwrap();
                let (ap2, am2) = classical_amplitudes(&p, &drive(eps * 2.0, eps * 2.0)).unwrap();
                prop_assert!((ap2 - ap * 2.0).norm() <= 1e-12 * (1.0 + ap.norm()));
                prop_assert!((am2 - am * 2.0).norm() <= 1e-12 * (1.0 + am.norm()));
            }
        }
    }
}
