//! The linear canonical Hamiltonian, the quartic anharmonic perturbation, and
//! the voltage drive operator, all as matrices over the angular basis.
//!
//! The linear part is diagonal with entries
//! xi(S, mS) = (w_up + w_down)(S + 1/2) + (w_up - w_down) mS. The quartic term
//! is -(E_C/12) M^4 with M = xi(up,-)(a+_up - a_up) - i xi(down,-)(a+_dn + a_dn),
//! evaluated by dense products on the buffered basis and projected onto the
//! physical block. The drive operator is
//! Theta = v_up (a+_up + a_up) + i v_down (a+_dn - a_dn), with the voltage
//! entering the master equation only through the scalar V(t).

use ndarray::Array2;
use num_complex::Complex64;

use crate::basis::{ladder_matrix, AngularBasis, Ladder, OperatorMatrix};
use crate::device::{Bare, Canonical, CanonicalModes, DeviceParams};

/// Unperturbed eigenfrequency per basis state, aligned with the (buffered)
/// basis ordering.
#[derive(Debug, Clone)]
pub struct LinearSpectrum {
    pub xi: Vec<f64>,
}

impl LinearSpectrum {
    pub fn value(modes: &CanonicalModes, two_s: u32, two_ms: i64) -> f64 {
        (modes.omega_up + modes.omega_down) * (two_s as f64 + 1.0) / 2.0
            + (modes.omega_up - modes.omega_down) * two_ms as f64 / 2.0
    }
}

/// Diagonal linear Hamiltonian on the physical block plus the full spectrum
/// table over the buffered basis.
pub fn build_linear(modes: &CanonicalModes, basis: &AngularBasis) -> (OperatorMatrix, LinearSpectrum) {
    let xi: Vec<f64> = basis
        .states()
        .iter()
        .map(|st| LinearSpectrum::value(modes, st.two_s(), st.two_ms()))
        .collect();
    let p = basis.physical_dim();
    let mut h0 = OperatorMatrix::zeros(p);
    for i in 0..p {
        h0.mat[[i, i]] = Complex64::new(xi[i], 0.0);
    }
    (h0, LinearSpectrum { xi })
}

/// Quartic perturbation -(E_C/12) M^4 on the physical block. M^4 is taken by
/// repeated dense multiplication on the buffered basis, which is exact there
/// because the quartic changes N by at most 4.
pub fn build_quartic(
    params: &DeviceParams,
    modes: &CanonicalModes,
    basis: &AngularBasis,
) -> OperatorMatrix {
    debug_assert!(basis.two_s_buffer() >= basis.two_s_max() + 4);
    let a_up = ladder_matrix(basis, Canonical::Up, Ladder::Annihilate);
    let ad_up = ladder_matrix(basis, Canonical::Up, Ladder::Create);
    let a_dn = ladder_matrix(basis, Canonical::Down, Ladder::Annihilate);
    let ad_dn = ladder_matrix(basis, Canonical::Down, Ladder::Create);

    let xi_um = Complex64::new(modes.xi(Canonical::Up, Bare::Minus), 0.0);
    let xi_dm = Complex64::new(0.0, -modes.xi(Canonical::Down, Bare::Minus));
    let m: Array2<Complex64> = (&ad_up.mat - &a_up.mat) * xi_um + (&ad_dn.mat + &a_dn.mat) * xi_dm;

    let m2 = m.dot(&m);
    let m4 = m2.dot(&m2);
    let scale = Complex64::new(-params.e_c / 12.0, 0.0);
    OperatorMatrix { mat: m4 * scale }.project(basis.physical_dim())
}

/// Drive operator Theta on the physical block; Hermitian and strictly one
/// photon off-diagonal (dS = +-1/2).
pub fn build_drive(modes: &CanonicalModes, basis: &AngularBasis) -> OperatorMatrix {
    let a_up = ladder_matrix(basis, Canonical::Up, Ladder::Annihilate);
    let ad_up = ladder_matrix(basis, Canonical::Up, Ladder::Create);
    let a_dn = ladder_matrix(basis, Canonical::Down, Ladder::Annihilate);
    let ad_dn = ladder_matrix(basis, Canonical::Down, Ladder::Create);
    let v_up = Complex64::new(modes.v(Canonical::Up), 0.0);
    let v_dn = Complex64::new(0.0, modes.v(Canonical::Down));
    let theta: Array2<Complex64> = (&ad_up.mat + &a_up.mat) * v_up + (&ad_dn.mat - &a_dn.mat) * v_dn;
    OperatorMatrix { mat: theta }.project(basis.physical_dim())
}

/// The three operator blocks used downstream, over the same physical basis.
#[derive(Debug, Clone)]
pub struct HamiltonianSet {
    pub h0: OperatorMatrix,
    pub dh: OperatorMatrix,
    pub theta: OperatorMatrix,
    pub spectrum: LinearSpectrum,
}

pub fn build_hamiltonians(
    params: &DeviceParams,
    modes: &CanonicalModes,
    basis: &AngularBasis,
) -> HamiltonianSet {
    let (h0, spectrum) = build_linear(modes, basis);
    let dh = build_quartic(params, modes, basis);
    let theta = build_drive(modes, basis);
    HamiltonianSet {
        h0,
        dh,
        theta,
        spectrum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::AngularIndex;
    use crate::device::derive_modes;
    use approx::assert_relative_eq;

    /// Synthetic mode table for closed-form checks (w_up = 10, w_down = 5).
    fn synthetic_modes() -> CanonicalModes {
        CanonicalModes {
            omega_plus: 10.0,
            omega_minus: 5.0,
            g_tilde: 0.0,
            omega_up: 10.0,
            omega_down: 5.0,
            xi: [[1.0, 0.0], [0.0, 1.0]],
            v: [0.1, 0.2],
            z_ohm: 0.1,
        }
    }

    #[test]
    fn linear_spectrum_values() {
        let modes = synthetic_modes();
        let basis = AngularBasis::new(6);
        let (h0, spec) = build_linear(&modes, &basis);

        // |0,0> -> (w_up + w_down)/2
        assert_relative_eq!(spec.xi[0], 7.5, max_relative = 1e-15);
        // zero-order degeneracy behind the avoided crossing:
        // |1/2,+1/2> and |1,-1> both sit at 17.5 when w_up = 2 w_down
        let ihalf = basis.index_of(&AngularIndex::new(1, 0)).unwrap();
        let ione = basis.index_of(&AngularIndex::new(0, 2)).unwrap();
        assert_relative_eq!(spec.xi[ihalf], 17.5, max_relative = 1e-15);
        assert_relative_eq!(spec.xi[ione], 17.5, max_relative = 1e-15);

        // Fock-side oracle: every diagonal entry equals sum_sigma w_sigma (n + 1/2)
        for (i, st) in basis.states().iter().enumerate() {
            let fock = modes.omega_up * (st.n_up as f64 + 0.5)
                + modes.omega_down * (st.n_down as f64 + 0.5);
            assert_relative_eq!(spec.xi[i], fock, max_relative = 1e-13);
            if i < basis.physical_dim() {
                assert_relative_eq!(h0.mat[[i, i]].re, fock, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn quartic_vanishes_without_charging_energy() {
        let params = DeviceParams {
            e_c: 0.0,
            ..DeviceParams::default()
        };
        // modes computed with the real E_C; only the prefactor is zeroed
        let modes = derive_modes(&DeviceParams::default()).unwrap();
        let basis = AngularBasis::new(4);
        let dh = build_quartic(&params, &modes, &basis);
        assert!(dh.mat.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn quartic_is_hermitian_and_blocked() {
        let params = DeviceParams::default();
        let modes = derive_modes(&params).unwrap();
        let basis = AngularBasis::new(6);
        let dh = build_quartic(&params, &modes, &basis);
        assert!(dh.hermiticity_error() < 1e-12);

        // selection rule: matrix elements between half-integer dS pairs are
        // exact zeros; |dS| <= 2 otherwise
        for i in 0..dh.dim() {
            for j in 0..dh.dim() {
                let ds2 = basis.state(i).two_s() as i64 - basis.state(j).two_s() as i64;
                if ds2.rem_euclid(2) != 0 || ds2.abs() > 4 {
                    assert_eq!(
                        dh.mat[[i, j]],
                        Complex64::new(0.0, 0.0),
                        "forbidden element at ({i},{j}) must vanish identically"
                    );
                }
            }
        }
    }

    #[test]
    fn quartic_vacuum_element_closed_form() {
        // <0,0|dH|0,0> = -E_C/12 * 3 (xi_um^2 + xi_dm^2)^2
        let params = DeviceParams::default();
        let modes = derive_modes(&params).unwrap();
        let basis = AngularBasis::new(6);
        let dh = build_quartic(&params, &modes, &basis);
        let xi_um = modes.xi(Canonical::Up, Bare::Minus);
        let xi_dm = modes.xi(Canonical::Down, Bare::Minus);
        let expect = -params.e_c / 12.0 * 3.0 * (xi_um * xi_um + xi_dm * xi_dm).powi(2);
        assert_relative_eq!(dh.mat[[0, 0]].re, expect, max_relative = 1e-12);
        // frozen from the 40-digit evaluation at the default point
        assert_relative_eq!(dh.mat[[0, 0]].re, -0.062_669_712_916_428_115, max_relative = 1e-12);
        assert!(dh.mat[[0, 0]].im.abs() < 1e-15);
    }

    #[test]
    fn buffer_is_sufficient() {
        let params = DeviceParams::default();
        let modes = derive_modes(&params).unwrap();
        // buffer s_max + 2 vs s_max + 3 must agree on the physical block
        let b2 = AngularBasis::with_buffer(6, 6 + 4);
        let b3 = AngularBasis::with_buffer(6, 6 + 6);
        let dh2 = build_quartic(&params, &modes, &b2);
        let dh3 = build_quartic(&params, &modes, &b3);
        assert!(dh2.max_abs_diff(&dh3) < 1e-12);
    }

    #[test]
    fn drive_elements_and_selection() {
        let params = DeviceParams::default();
        let modes = derive_modes(&params).unwrap();
        let basis = AngularBasis::new(4);
        let theta = build_drive(&modes, &basis);
        assert!(theta.hermiticity_error() < 1e-12);

        // <0,0|Theta|0,0> = 0 and only one-photon steps connect
        assert_eq!(theta.mat[[0, 0]], Complex64::new(0.0, 0.0));
        for i in 0..theta.dim() {
            for j in 0..theta.dim() {
                let dn = basis.state(i).total() as i64 - basis.state(j).total() as i64;
                if dn.abs() != 1 {
                    assert_eq!(theta.mat[[i, j]], Complex64::new(0.0, 0.0));
                }
            }
        }

        // ladder-step oracle: <1/2,+1/2|Theta|0,0> = v_up,
        // <1/2,-1/2|Theta|0,0> = i v_down
        let iu = basis.index_of(&AngularIndex::new(1, 0)).unwrap();
        let id = basis.index_of(&AngularIndex::new(0, 1)).unwrap();
        assert_relative_eq!(theta.mat[[iu, 0]].re, modes.v(Canonical::Up), max_relative = 1e-14);
        assert!(theta.mat[[iu, 0]].im.abs() < 1e-15);
        assert_relative_eq!(theta.mat[[id, 0]].im, modes.v(Canonical::Down), max_relative = 1e-14);
        assert!(theta.mat[[id, 0]].re.abs() < 1e-15);

        // zero-order forbidden 1 <-> 3 element behind the ladder scheme
        let i13 = basis.index_of(&AngularIndex::new(0, 2)).unwrap();
        assert_eq!(theta.mat[[i13, 0]], Complex64::new(0.0, 0.0));
    }
}
