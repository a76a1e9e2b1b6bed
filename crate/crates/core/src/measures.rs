//! Entanglement and purity of the cavity / second-mode pair.
//!
//! Covariances use the convention in which the vacuum has variance 1/2, so a
//! physical state has every symplectic eigenvalue >= 1/2.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::Serialize;

use crate::dynamics::CovarianceState;
use crate::eigen::eigenvalues;
use crate::error::{Error, Result};

/// Slack allowed below the physical bounds before a state is rejected.
pub const NONPHYSICAL_TOL: f64 = 1e-9;

/// Rows/columns of the full covariance kept for `(d, b2)`.
pub const REDUCED_INDICES: [usize; 4] = [0, 1, 4, 5];

/// 4x4 covariance over `[Q_d, P_d, Q_b2, P_b2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCovariance(pub Matrix4<f64>);

impl ReducedCovariance {
    pub fn from_blocks(v1: &Matrix2<f64>, v2: &Matrix2<f64>, vc: &Matrix2<f64>) -> Self {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(v1);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(v2);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(vc);
        m.fixed_view_mut::<2, 2>(2, 0).copy_from(&vc.transpose());
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn v1(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn v2(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn vc(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Two-mode squeezed vacuum annihilated by `d cosh r + b2^dag sinh r`
    /// and `b2 cosh r + d^dag sinh r`.
    pub fn two_mode_squeezed_vacuum(r: f64) -> Self {
        let c = (2.0 * r).cosh() / 2.0;
        let s = (2.0 * r).sinh() / 2.0;
        Self::from_blocks(
            &Matrix2::new(c, 0.0, 0.0, c),
            &Matrix2::new(c, 0.0, 0.0, c),
            &Matrix2::new(-s, 0.0, 0.0, s),
        )
    }
}

/// Restricts the full covariance to the cavity and second mechanical mode.
pub fn reduce(state: &CovarianceState) -> ReducedCovariance {
    let s = &state.sigma;
    ReducedCovariance(Matrix4::from_fn(|i, j| s[(REDUCED_INDICES[i], REDUCED_INDICES[j])]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Negativity {
    pub log_negativity: f64,
    /// Smallest symplectic eigenvalue of the partial transpose.
    pub eta: f64,
    /// `det V1 + det V2 - 2 det Vc`.
    pub seralian: f64,
}

/// Logarithmic negativity `max(0, -ln 2 eta)`.
fn check_variances(rc: &ReducedCovariance) -> Result<()> {
    match (0..4).map(|i| rc.0[(i, i)]).find(|v| !(*v > 0.0)) {
        Some(v) => Err(Error::Nonphysical(format!("variance {v:e} <= 0"))),
        None => Ok(()),
    }
}

pub fn log_negativity(rc: &ReducedCovariance) -> Result<Negativity> {
    check_variances(rc)?;
    let det = rc.determinant();
    if !(det > 0.0) {
        return Err(Error::Nonphysical(format!("det sigma_r = {det:e} <= 0")));
    }
    let seralian = rc.v1().determinant() + rc.v2().determinant() - 2.0 * rc.vc().determinant();
    let disc = seralian * seralian - 4.0 * det;
    if disc < -NONPHYSICAL_TOL {
        return Err(Error::Nonphysical(format!(
            "Sigma^2 - 4 det sigma_r = {disc:e} < 0"
        )));
    }
    let root = disc.max(0.0).sqrt();
    // Sigma - sqrt(Sigma^2 - 4 det) written without cancellation.
    let eta_sq = if seralian > 0.0 {
        2.0 * det / (seralian + root)
    } else {
        (seralian - root) / 2.0
    };
    if !(eta_sq > 0.0) {
        return Err(Error::Nonphysical(format!("eta^2 = {eta_sq:e} <= 0")));
    }
    let eta = eta_sq.sqrt();
    Ok(Negativity {
        log_negativity: (-(2.0 * eta).ln()).max(0.0),
        eta,
        seralian,
    })
}

/// Purity `1 / (4 sqrt(det sigma_r))` of the two-mode state.
pub fn purity(rc: &ReducedCovariance) -> Result<f64> {
    check_variances(rc)?;
    let det = rc.determinant();
    if !(det > 0.0) {
        return Err(Error::Nonphysical(format!("det sigma_r = {det:e} <= 0")));
    }
    let mu = 1.0 / (4.0 * det.sqrt());
    if mu > 1.0 + NONPHYSICAL_TOL {
        return Err(Error::Nonphysical(format!("purity {mu} > 1")));
    }
    Ok(mu)
}

/// The two symplectic eigenvalues `(nu_-, nu_+)` of a two-mode covariance.
pub fn symplectic_eigenvalues(rc: &ReducedCovariance) -> (f64, f64) {
    let det = rc.determinant();
    let delta = rc.v1().determinant() + rc.v2().determinant() + 2.0 * rc.vc().determinant();
    let root = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let plus_sq = (delta + root) / 2.0;
    let minus_sq = if plus_sq > 0.0 { det / plus_sq } else { 0.0 };
    (minus_sq.max(0.0).sqrt(), plus_sq.max(0.0).sqrt())
}

/// Symplectic spectrum of an `n`-mode covariance (`2n x 2n`, pairs of
/// quadratures `[Q, P]` per mode), ascending.
pub fn symplectic_spectrum(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = sigma.nrows();
    assert!(dim.is_multiple_of(2) && sigma.is_square());
    let mut omega_sigma = DMatrix::zeros(dim, dim);
    for k in (0..dim).step_by(2) {
        for j in 0..dim {
            // Omega = diag([[0, 1], [-1, 0]], ...)
            omega_sigma[(k, j)] = sigma[(k + 1, j)];
            omega_sigma[(k + 1, j)] = -sigma[(k, j)];
        }
    }
    let mut moduli: Vec<f64> = eigenvalues(&omega_sigma)?.iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    Ok(moduli.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

/// Mean occupations of the Bogoliubov modes `beta1`, `beta2` (for squeezing
/// `r`) and of the intermediate mode `b1`.
pub fn bogoliubov_occupations(state: &CovarianceState, r: f64) -> [f64; 3] {
    let (c, s) = (r.cosh(), r.sinh());
    #[rustfmt::skip]
    let squeeze = Matrix4::new(
        c,   0.0, s,   0.0,
        0.0, c,   0.0, -s,
        s,   0.0, c,   0.0,
        0.0, -s,  0.0, c,
    );
    let rc = reduce(state);
    let t = squeeze * rc.matrix() * squeeze.transpose();
    let occ = |qq: f64, pp: f64| 0.5 * (qq + pp) - 0.5;
    [
        occ(t[(0, 0)], t[(1, 1)]),
        occ(t[(2, 2)], t[(3, 3)]),
        occ(state.sigma[(2, 2)], state.sigma[(3, 3)]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub log_negativity: f64,
    pub purity: f64,
    pub eta: f64,
    pub seralian: f64,
    pub symplectic_eigenvalues: (f64, f64),
}

pub fn entanglement_report(rc: &ReducedCovariance) -> Result<EntanglementReport> {
    let neg = log_negativity(rc)?;
    let nu = symplectic_eigenvalues(rc);
    if nu.0 < 0.5 - NONPHYSICAL_TOL {
        return Err(Error::Nonphysical(format!("symplectic eigenvalue {} < 1/2", nu.0)));
    }
    Ok(EntanglementReport {
        log_negativity: neg.log_negativity,
        purity: purity(rc)?,
        eta: neg.eta,
        seralian: neg.seralian,
        symplectic_eigenvalues: nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix6, Vector6};

    fn state(diag: [f64; 6]) -> CovarianceState {
        CovarianceState::new(0.0, Matrix6::from_diagonal(&Vector6::from_row_slice(&diag)))
    }

    fn diag4(v: f64) -> ReducedCovariance {
        ReducedCovariance(Matrix4::identity() * v)
    }

    #[test]
    fn reduce_selects_d_and_b2() {
        assert_eq!(reduce(&state([0.5; 6])), diag4(0.5));
        let rc = reduce(&state([1.0, 1.0, 2.0, 2.0, 3.0, 3.0]));
        assert_eq!(rc.0, Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 3.0, 3.0)));
    }

    #[test]
    fn vacuum_measures() {
        let n = log_negativity(&diag4(0.5)).unwrap();
        assert_relative_eq!(n.seralian, 0.5, max_relative = 1e-15);
        assert_relative_eq!(n.eta, 0.5, max_relative = 1e-12);
        assert_eq!(n.log_negativity, 0.0);
        assert_relative_eq!(purity(&diag4(0.5)).unwrap(), 1.0, max_relative = 1e-15);
        let (a, b) = symplectic_eigenvalues(&diag4(0.5));
        assert_relative_eq!(a, 0.5, max_relative = 1e-12);
        assert_relative_eq!(b, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn thermal_measures() {
        let rc = diag4(1.5);
        assert_relative_eq!(purity(&rc).unwrap(), 1.0 / 9.0, max_relative = 1e-14);
        let (a, b) = symplectic_eigenvalues(&rc);
        assert_relative_eq!(a, 1.5, max_relative = 1e-12);
        assert_relative_eq!(b, 1.5, max_relative = 1e-12);
        assert_eq!(log_negativity(&rc).unwrap().log_negativity, 0.0);
    }

    #[test]
    fn tmsv_negativity_is_twice_squeezing() {
        for r in [0.25, 0.5, 1.0, 2.0] {
            let rc = ReducedCovariance::two_mode_squeezed_vacuum(r);
            let n = log_negativity(&rc).unwrap();
            assert!((n.log_negativity - 2.0 * r).abs() <= 1e-10, "r = {r}: {}", n.log_negativity);
            assert_relative_eq!(n.eta, (-2.0 * r).exp() / 2.0, max_relative = 1e-9);
            assert!((purity(&rc).unwrap() - 1.0).abs() <= 1e-10);
            // the opposite-sign correlation block is equally entangled
            let flipped = ReducedCovariance::from_blocks(&rc.v1(), &rc.v2(), &(-rc.vc()));
            assert!((log_negativity(&flipped).unwrap().log_negativity - 2.0 * r).abs() <= 1e-10);
        }
        let n = log_negativity(&ReducedCovariance::two_mode_squeezed_vacuum(1.0)).unwrap();
        assert_relative_eq!(n.log_negativity, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn tmsv_is_pure() {
        for r in [0.0, 0.3, 1.0, 2.5] {
            // the closed form takes a square root of a cancelling difference
            let (a, b) = symplectic_eigenvalues(&ReducedCovariance::two_mode_squeezed_vacuum(r));
            assert!((a - 0.5).abs() < 1e-6 && (b - 0.5).abs() < 1e-6, "r = {r}: {a} {b}");
        }
    }

    #[test]
    fn nonphysical_states_are_rejected() {
        assert!(matches!(purity(&diag4(0.25)), Err(Error::Nonphysical(_))));
        assert!(matches!(purity(&diag4(0.0)), Err(Error::Nonphysical(_))));
        assert!(matches!(log_negativity(&diag4(-1.0)), Err(Error::Nonphysical(_))));
        assert!(entanglement_report(&diag4(0.3)).is_err());
    }

    #[test]
    fn spectrum_of_full_state() {
        let nu = symplectic_spectrum(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.5, 1.5, 1.5, 2.0, 2.0]))).unwrap();
        for (got, want) in nu.iter().zip([0.5, 1.5, 2.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
        // squeezed single mode: diag(e^{2s}/2, e^{-2s}/2) is still pure
        let s: f64 = 0.7;
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![(2.0 * s).exp() / 2.0, (-2.0 * s).exp() / 2.0]));
        assert_relative_eq!(symplectic_spectrum(&m).unwrap()[0], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matches_eigen_route() {
        let rc = ReducedCovariance::from_blocks(
            &Matrix2::new(2.0, 0.3, 0.3, 1.5),
            &Matrix2::new(1.2, -0.1, -0.1, 3.0),
            &Matrix2::new(0.4, 0.2, -0.5, 0.1),
        );
        let (a, b) = symplectic_eigenvalues(&rc);
        let spec = symplectic_spectrum(&DMatrix::from_iterator(4, 4, rc.0.iter().copied())).unwrap();
        assert_relative_eq!(a, spec[0], max_relative = 1e-12);
        assert_relative_eq!(b, spec[1], max_relative = 1e-12);
    }

    #[test]
    fn bogoliubov_modes_of_vacuum_and_tmsv() {
        for o in bogoliubov_occupations(&state([0.5; 6]), 0.0) {
            assert!(o.abs() < 1e-15);
        }
        for r in [0.3, 1.0, 1.5765] {
            let rc = ReducedCovariance::two_mode_squeezed_vacuum(r);
            let mut sigma = Matrix6::identity() * 0.5;
            for i in 0..4 {
                for j in 0..4 {
                    sigma[(REDUCED_INDICES[i], REDUCED_INDICES[j])] = rc.0[(i, j)];
                }
            }
            for o in bogoliubov_occupations(&CovarianceState::new(0.0, sigma), r) {
                assert!(o.abs() < 1e-12, "r = {r}: {o}");
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rotation(theta: f64) -> Matrix2<f64> {
            Matrix2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos())
        }

        proptest! {
            #[test]
            fn product_thermal_states_are_separable(a in 0.5f64..20.0, b in 0.5f64..20.0) {
                let rc = ReducedCovariance::from_blocks(&(Matrix2::identity() * a), &(Matrix2::identity() * b), &Matrix2::zeros());
                prop_assert_eq!(log_negativity(&rc).unwrap().log_negativity, 0.0);
            }

            #[test]
            fn tmsv_negativity_exact(r in 0.0f64..3.0) {
                let rc = ReducedCovariance::two_mode_squeezed_vacuum(r);
                prop_assert!((log_negativity(&rc).unwrap().log_negativity - 2.0 * r).abs() <= 1e-10);
            }

            #[test]
            fn negativity_invariant_under_local_rotations(
                r in 0.0f64..2.0, n in 0.0f64..0.5, th1 in 0.0f64..6.3, th2 in 0.0f64..6.3,
            ) {
                // squeezed thermal state: TMSV with added thermal noise
                let base = ReducedCovariance::two_mode_squeezed_vacuum(r);
                let rc = ReducedCovariance(base.0 * (2.0 * n + 1.0));
                let mut local = Matrix4::zeros();
                local.fixed_view_mut::<2, 2>(0, 0).copy_from(&rotation(th1));
                local.fixed_view_mut::<2, 2>(2, 2).copy_from(&rotation(th2));
                let rotated = ReducedCovariance(local * rc.0 * local.transpose());
                let e0 = log_negativity(&rc).unwrap().log_negativity;
                let e1 = log_negativity(&rotated).unwrap().log_negativity;
                prop_assert!((e0 - e1).abs() <= 1e-9);
            }

            #[test]
            fn purity_times_root_det_is_quarter(a in 0.5f64..5.0, b in 0.5f64..5.0, r in 0.0f64..1.5) {
                let base = ReducedCovariance::two_mode_squeezed_vacuum(r);
                let scale = Matrix4::from_diagonal(&nalgebra::Vector4::new(a.sqrt(), a.sqrt(), b.sqrt(), b.sqrt()));
                let rc = ReducedCovariance(scale * base.0 * scale * 2.0);
                let mu = purity(&rc).unwrap();
                prop_assert!((mu * 4.0 * rc.determinant().sqrt() - 1.0).abs() <= 1e-12);
            }

            #[test]
            fn unit_purity_iff_minimal_symplectic(r in 0.0f64..2.0, n in 0.0f64..1.0) {
                let rc = ReducedCovariance(ReducedCovariance::two_mode_squeezed_vacuum(r).0 * (2.0 * n + 1.0));
                let mu = purity(&rc).unwrap();
                let (a, b) = symplectic_eigenvalues(&rc);
                let pure = (mu - 1.0).abs() <= 1e-9;
                let minimal = (a - 0.5).abs() <= 1e-9 && (b - 0.5).abs() <= 1e-9;
                prop_assert_eq!(pure, minimal);
            }
        }
    }
}
