//! Dissipation tensors and the fixed-step integrator for the truncated,
//! driven Lindblad master equation.
//!
//! The environment couples through four jump operators A(sigma,+) = a_sigma,
//! A(sigma,-) = a+_sigma with the rate tensor
//!
//!   gamma_{sigma,s;sigma',s'} = (1/4) sum_{mu,m} gamma_{mu,m}
//!       xi(sigma,mu) xi(sigma',mu)
//!       ((w_mu + m s w_sigma)/w_sigma)((w_mu + m s' w_sigma')/w_sigma')
//!       exp(i pi [(sigma-sigma') m (1-mu) - s(1-sigma) + s'(1-sigma')]/4),
//!
//! all indices taking numeric values +-1. Restricted to the retained state
//! set, the dissipator contracts to the Lambda tensor and the component
//! equations
//!
//!   d rho_kk'/dt = -i(eps_k - eps_k') rho_kk'
//!                + i V(t) [Theta, rho]_kk' + sum_{ll'} Lambda^(ll')_kk' rho_ll'
//!
//! are integrated with classic fixed-step RK4 in the lab frame.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;

use crate::basis::{ladder_matrix, spin_matrices, AngularBasis, Ladder};
use crate::device::{Bare, Canonical, CanonicalModes, LindbladRates};
use crate::error::{Result, SimError};
use crate::perturbation::EigenSystem;

/// Jump-operator sign index: `Plus` is the lowering jump a_sigma, `Minus` the
/// raising jump a+_sigma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpSign {
    Plus,
    Minus,
}

impl JumpSign {
    pub fn numeric(self) -> f64 {
        match self {
            JumpSign::Plus => 1.0,
            JumpSign::Minus => -1.0,
        }
    }
}

/// Fixed channel ordering (sigma, s) used by both tensors.
pub const CHANNELS: [(Canonical, JumpSign); 4] = [
    (Canonical::Up, JumpSign::Plus),
    (Canonical::Up, JumpSign::Minus),
    (Canonical::Down, JumpSign::Plus),
    (Canonical::Down, JumpSign::Minus),
];

/// exp(i pi n / 4) for integer n; exact for the multiples of pi/2 that the
/// phase exponent actually produces.
fn phase_quarter(n: i64) -> Complex64 {
    const SQ: f64 = std::f64::consts::FRAC_1_SQRT_2;
    match n.rem_euclid(8) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(SQ, SQ),
        2 => Complex64::new(0.0, 1.0),
        3 => Complex64::new(-SQ, SQ),
        4 => Complex64::new(-1.0, 0.0),
        5 => Complex64::new(-SQ, -SQ),
        6 => Complex64::new(0.0, -1.0),
        _ => Complex64::new(SQ, -SQ),
    }
}

/// The 4x4 rate tensor over composite channels (sigma, s).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTensor {
    pub g: [[Complex64; 4]; 4],
}

impl GammaTensor {
    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        self.g[a][b]
    }

    /// Max |gamma_ab - conj(gamma_ba)|; zero by construction.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..4 {
            for b in 0..4 {
                worst = worst.max((self.g[a][b] - self.g[b][a].conj()).norm());
            }
        }
        worst
    }
}

/// Evaluate the rate tensor from the mode table and the raw rates.
pub fn build_gamma(rates: &LindbladRates, modes: &CanonicalModes) -> GammaTensor {
    let mut g = [[Complex64::new(0.0, 0.0); 4]; 4];
    for (a, &(sig, s)) in CHANNELS.iter().enumerate() {
        for (b, &(sigp, sp)) in CHANNELS.iter().enumerate() {
            let mut tot = Complex64::new(0.0, 0.0);
            for mu in Bare::BOTH {
                for m_plus in [true, false] {
                    let m = if m_plus { 1.0 } else { -1.0 };
                    let rate = rates.gamma_mu_m(mu, m_plus);
                    let pref = 0.25 * rate * modes.xi(sig, mu) * modes.xi(sigp, mu);
                    let ws = modes.omega(sig);
                    let wsp = modes.omega(sigp);
                    let wmu = modes.omega_bare(mu);
                    let freq = ((wmu + m * s.numeric() * ws) / ws)
                        * ((wmu + m * sp.numeric() * wsp) / wsp);
                    // integer exponent of pi/4; all inputs are +-1 valued
                    let n = ((sig.numeric() - sigp.numeric()) * m * (1.0 - mu.numeric())
                        - s.numeric() * (1.0 - sig.numeric())
                        + sp.numeric() * (1.0 - sigp.numeric()))
                        .round() as i64;
                    tot += phase_quarter(n) * (pref * freq);
                }
            }
            g[a][b] = tot;
        }
    }
    debug_assert!(GammaTensor { g }.hermiticity_error() == 0.0);
    GammaTensor { g }
}

/// The four jump operators projected onto the retained eigenstate set:
/// A_{k,k'}(sigma,s) = <psi_k| A(sigma,s) |psi_k'>. Raising and lowering
/// blocks are stored independently since projection breaks the adjoint tie.
#[derive(Debug, Clone)]
pub struct JumpSet {
    pub a: [Array2<Complex64>; 4],
    pub dim: usize,
}

impl JumpSet {
    pub fn build(eig: &EigenSystem, basis: &AngularBasis, set: &[usize]) -> Self {
        let p = basis.physical_dim();
        let a = CHANNELS.map(|(sig, s)| {
            let kind = match s {
                JumpSign::Plus => Ladder::Annihilate,
                JumpSign::Minus => Ladder::Create,
            };
            let full = ladder_matrix(basis, sig, kind).project(p);
            eig.project(&full, set)
        });
        JumpSet { a, dim: set.len() }
    }
}

/// Superoperator coefficients Lambda^(l,l')_{k,k'} over the retained set,
/// flattened as a (E^2 x E^2) matrix with row index k*E + k'.
#[derive(Debug, Clone)]
pub struct LambdaTensor {
    pub dim: usize,
    pub m: Array2<Complex64>,
}

impl LambdaTensor {
    /// Lambda^(l,l')_{k,k'} with all indices zero-based.
    pub fn get(&self, k: usize, kp: usize, l: usize, lp: usize) -> Complex64 {
        self.m[[k * self.dim + kp, l * self.dim + lp]]
    }

    /// Max over (l,l') of |sum_k Lambda^(l,l')_{k,k}|. The truncated tensor
    /// conserves trace identically; this reports the floating-point residue.
    pub fn trace_leak(&self) -> f64 {
        let e = self.dim;
        let mut worst = 0.0_f64;
        for l in 0..e {
            for lp in 0..e {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..e {
                    s += self.get(k, k, l, lp);
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

/// Contract the dissipator onto the retained set:
/// Lambda^(l,l')_{k,k'} = (1/2) sum gamma_{ss'} {2 A_{k,l} A*_{k',l'}
///   - sum_{k''} [A*_{k'',k} A_{k'',l} d_{k',l'} + A*_{k'',l'} A_{k'',k'} d_{k,l}]}.
pub fn build_lambda(gamma: &GammaTensor, jumps: &JumpSet) -> LambdaTensor {
    let e = jumps.dim;
    let mut m: Array2<Complex64> = Array2::zeros((e * e, e * e));
    for k in 0..e {
        for kp in 0..e {
            for l in 0..e {
                for lp in 0..e {
                    let mut tot = Complex64::new(0.0, 0.0);
                    for a in 0..4 {
                        for b in 0..4 {
                            let gc = gamma.get(a, b);
                            if gc.norm() == 0.0 {
                                continue;
                            }
                            let aa = &jumps.a[a];
                            let ab = &jumps.a[b];
                            let mut term = 2.0 * aa[[k, l]] * ab[[kp, lp]].conj();
                            if kp == lp {
                                for kpp in 0..e {
                                    term -= ab[[kpp, k]].conj() * aa[[kpp, l]];
                                }
                            }
                            if k == l {
                                for kpp in 0..e {
                                    term -= ab[[kpp, lp]].conj() * aa[[kpp, kp]];
                                }
                            }
                            tot += gc * term;
                        }
                    }
                    m[[k * e + kp, l * e + lp]] = 0.5 * tot;
                }
            }
        }
    }
    LambdaTensor { dim: e, m }
}

/// Multi-tone drive V(t) = sum_i V_i sin(Omega_i t), amplitudes in nV.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveWaveform {
    pub tones: Vec<(f64, f64)>,
}

impl DriveWaveform {
    pub fn off() -> Self {
        DriveWaveform { tones: Vec::new() }
    }

    pub fn single(amplitude_nv: f64, frequency: f64) -> Self {
        DriveWaveform {
            tones: vec![(amplitude_nv, frequency)],
        }
    }

    pub fn two_tone(vp: f64, omega_p: f64, vc: f64, omega_c: f64) -> Self {
        DriveWaveform {
            tones: vec![(vp, omega_p), (vc, omega_c)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &(v, om) in &self.tones {
            if !(v >= 0.0) {
                return Err(SimError::Config("tone amplitude must be >= 0".into()));
            }
            if !(om > 0.0) {
                return Err(SimError::Config("tone frequency must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.tones.iter().map(|&(v, om)| v * (om * t).sin()).sum()
    }

    pub fn max_frequency(&self) -> f64 {
        self.tones.iter().map(|&(_, om)| om).fold(0.0, f64::max)
    }
}

/// Spin component matrices in the retained eigenbasis.
#[derive(Debug, Clone)]
pub struct SpinProjection {
    pub mats: [Array2<Complex64>; 3],
}

impl SpinProjection {
    pub fn build(eig: &EigenSystem, basis: &AngularBasis, set: &[usize]) -> Self {
        let p = basis.physical_dim();
        let sm = spin_matrices(basis);
        let mats = [&sm.sx, &sm.sy, &sm.sz].map(|op| eig.project(&op.project(p), set));
        SpinProjection { mats }
    }
}

/// <S(t)> = Tr[S rho]; the imaginary residue is checked and discarded.
pub fn qubit_expectation(spin: &SpinProjection, rho: &Array2<Complex64>) -> [f64; 3] {
    let e = rho.nrows();
    let mut out = [0.0; 3];
    for (alpha, s) in spin.mats.iter().enumerate() {
        let mut tr = Complex64::new(0.0, 0.0);
        for k in 0..e {
            for kp in 0..e {
                tr += s[[k, kp]] * rho[[kp, k]];
            }
        }
        debug_assert!(tr.im.abs() < 1e-9, "imaginary spin residue {}", tr.im);
        out[alpha] = tr.re;
    }
    out
}

/// Time series of the retained density matrix and the qubit expectation.
#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub rhos: Vec<Array2<Complex64>>,
    pub spin: Vec<[f64; 3]>,
    /// max over checked steps of ||rho - rho^dagger||_inf
    pub hermiticity_drift: f64,
    /// max over checked steps of |Tr rho - 1|
    pub trace_drift: f64,
}

impl DensityTrajectory {
    pub fn dim(&self) -> usize {
        self.rhos[0].nrows()
    }

    pub fn final_rho(&self) -> &Array2<Complex64> {
        self.rhos.last().unwrap()
    }

    pub fn final_spin(&self) -> [f64; 3] {
        *self.spin.last().unwrap()
    }

    /// TSV export: t_us, re/im of the upper triangle of rho, then Sx Sy Sz.
    pub fn write_tsv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let e = self.dim();
        write!(w, "t_us")?;
        for k in 0..e {
            for kp in k..e {
                write!(w, "\tre_rho_{}_{}\tim_rho_{}_{}", k + 1, kp + 1, k + 1, kp + 1)?;
            }
        }
        writeln!(w, "\tSx\tSy\tSz")?;
        for (i, &t) in self.times.iter().enumerate() {
            write!(w, "{:e}", t * 1e-3)?;
            for k in 0..e {
                for kp in k..e {
                    let z = self.rhos[i][[k, kp]];
                    write!(w, "\t{:e}\t{:e}", z.re, z.im)?;
                }
            }
            let s = self.spin[i];
            writeln!(w, "\t{:e}\t{:e}\t{:e}", s[0], s[1], s[2])?;
        }
        Ok(())
    }
}

/// Ground-state initial condition |psi_1><psi_1| on a retained set of size e.
pub fn ground_state(e: usize) -> Array2<Complex64> {
    let mut rho = Array2::zeros((e, e));
    rho[[0, 0]] = Complex64::new(1.0, 0.0);
    rho
}

/// Largest step allowed by the resolution precondition
/// dt <= 2 pi / (20 max|eps_k - eps_k' + Omega|).
pub fn resolution_bound(energies: &[f64], drive: &DriveWaveform) -> f64 {
    let mut fmax = 0.0_f64;
    for &ea in energies {
        for &eb in energies {
            fmax = fmax.max((ea - eb).abs());
            for &(_, om) in &drive.tones {
                fmax = fmax.max((ea - eb + om).abs());
            }
        }
    }
    if fmax == 0.0 {
        f64::INFINITY
    } else {
        2.0 * std::f64::consts::PI / (20.0 * fmax)
    }
}

const HERM_BUDGET: f64 = 1e-9;
const TRACE_BUDGET: f64 = 1e-3;

struct Rhs<'a> {
    e: usize,
    eps: &'a [f64],
    theta: Vec<Complex64>,
    lam: Vec<Complex64>,
}

impl Rhs<'_> {
    #[inline]
    fn eval(&self, v: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let e = self.e;
        let e2 = e * e;
        for k in 0..e {
            for kp in 0..e {
                let row = k * e + kp;
                let mut acc = Complex64::new(0.0, -(self.eps[k] - self.eps[kp])) * rho[row];
                let mut comm = Complex64::new(0.0, 0.0);
                for l in 0..e {
                    comm += self.theta[k * e + l] * rho[l * e + kp]
                        - rho[k * e + l] * self.theta[l * e + kp];
                }
                acc += Complex64::new(0.0, v) * comm;
                let lrow = &self.lam[row * e2..(row + 1) * e2];
                let mut dis = Complex64::new(0.0, 0.0);
                for (lz, rz) in lrow.iter().zip(rho.iter()) {
                    dis += lz * rz;
                }
                out[row] = acc + dis;
            }
        }
    }
}

/// Integrate the truncated master equation with classic RK4.
///
/// `energies` are the retained eps_k; `theta` the drive operator in the same
/// basis; `stride` stores every Nth step (0 keeps only the endpoints). The
/// trajectory always includes t = 0 and t_end.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    energies: &[f64],
    theta: &Array2<Complex64>,
    lambda: &LambdaTensor,
    drive: &DriveWaveform,
    rho0: &Array2<Complex64>,
    t_end: f64,
    dt: f64,
    stride: usize,
    spin: &SpinProjection,
) -> Result<DensityTrajectory> {
    let e = energies.len();
    assert_eq!(theta.nrows(), e);
    assert_eq!(lambda.dim, e);
    assert_eq!(rho0.nrows(), e);
    drive.validate()?;
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(SimError::Config("dt and t_end must be > 0".into()));
    }
    let bound = resolution_bound(energies, drive);
    if dt > bound {
        return Err(SimError::StepSizeTooLarge { dt, bound });
    }
    // initial condition must be a physical density matrix on the set
    let mut herm0 = 0.0_f64;
    let mut tr0 = Complex64::new(0.0, 0.0);
    for k in 0..e {
        tr0 += rho0[[k, k]];
        for kp in 0..e {
            herm0 = herm0.max((rho0[[k, kp]] - rho0[[kp, k]].conj()).norm());
        }
    }
    if herm0 > 1e-9 || (tr0 - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(SimError::Config(
            "initial state must be Hermitian with unit trace".into(),
        ));
    }

    let steps = (t_end / dt).round().max(1.0) as usize;
    let rhs = Rhs {
        e,
        eps: energies,
        theta: theta.iter().copied().collect(),
        lam: lambda.m.iter().copied().collect(),
    };

    let n = e * e;
    let mut rho: Vec<Complex64> = rho0.iter().copied().collect();
    let mut k1 = vec![Complex64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut traj = DensityTrajectory {
        times: Vec::new(),
        rhos: Vec::new(),
        spin: Vec::new(),
        hermiticity_drift: 0.0,
        trace_drift: 0.0,
    };
    let snapshot = |rho: &[Complex64]| {
        Array2::from_shape_vec((e, e), rho.to_vec()).expect("square state")
    };
    let record = |t: f64, rho: &[Complex64], traj: &mut DensityTrajectory| {
        let m = snapshot(rho);
        traj.spin.push(qubit_expectation(spin, &m));
        traj.times.push(t);
        traj.rhos.push(m);
    };
    record(0.0, &rho, &mut traj);

    let half = dt / 2.0;
    let sixth = dt / 6.0;
    for step in 0..steps {
        let t = step as f64 * dt;
        let v1 = drive.eval(t);
        let v2 = drive.eval(t + half);
        let v3 = drive.eval(t + dt);

        rhs.eval(v1, &rho, &mut k1);
        for i in 0..n {
            tmp[i] = rho[i] + half * k1[i];
        }
        rhs.eval(v2, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = rho[i] + half * k2[i];
        }
        rhs.eval(v2, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = rho[i] + dt * k3[i];
        }
        rhs.eval(v3, &tmp, &mut k4);
        for i in 0..n {
            rho[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }

        // physicality monitors
        let mut herm = 0.0_f64;
        let mut tr = 0.0_f64;
        for k in 0..e {
            tr += rho[k * e + k].re;
            for kp in (k + 1)..e {
                herm = herm.max((rho[k * e + kp] - rho[kp * e + k].conj()).norm());
            }
            herm = herm.max(rho[k * e + k].im.abs());
        }
        let tr_err = (tr - 1.0).abs();
        traj.hermiticity_drift = traj.hermiticity_drift.max(herm);
        traj.trace_drift = traj.trace_drift.max(tr_err);
        if herm > 100.0 * HERM_BUDGET || tr_err > 100.0 * TRACE_BUDGET {
            return Err(SimError::NonPhysicalState {
                t: t + dt,
                what: format!("hermiticity drift {herm:.3e}, trace drift {tr_err:.3e}"),
            });
        }

        let done = step + 1 == steps;
        if done || (stride > 0 && (step + 1) % stride == 0) {
            record((step + 1) as f64 * dt, &rho, &mut traj);
        }
    }
    Ok(traj)
}
