//! Second-order Rayleigh-Schrodinger perturbation theory over the angular
//! basis, plus the level-vs-coupling and heat-map data products.
//!
//! The quartic perturbation couples only states whose total photon number
//! differs by an even count, so sums over intermediate states skip exactly
//! zero couplings; the zero-order degeneracy between |1/2,+1/2> and |1,-1>
//! lives in different parity sectors and never enters a denominator. A
//! coupled pair closer than 1e-6 * w_down raises `Degeneracy` instead of
//! silently blowing up.

use std::io::Write;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{AngularBasis, AngularIndex, OperatorMatrix};
use crate::device::{derive_modes, DeviceParams};
use crate::error::{Result, SimError};
use crate::hamiltonian::{build_hamiltonians, LinearSpectrum};

/// Relative degeneracy tolerance in units of w_down.
const DEGENERACY_TOL: f64 = 1e-6;

/// Perturbed eigenstates (columns over the physical basis) and energies,
/// sorted by ascending corrected energy. Labels are the dominant zero-order
/// |S, mS> per state; the dominant coefficient is gauge-fixed real positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    /// Column k is |psi_k> over the physical basis.
    pub states: Array2<Complex64>,
    pub labels: Vec<AngularIndex>,
    /// Zero-order energy of the labeled basis state, for dashed-curve output.
    pub zero_order: Vec<f64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Columns of the requested states as a (phys_dim x set) matrix.
    pub fn columns(&self, set: &[usize]) -> Array2<Complex64> {
        let n = self.states.nrows();
        let mut out = Array2::zeros((n, set.len()));
        for (c, &k) in set.iter().enumerate() {
            out.slice_mut(s![.., c]).assign(&self.states.slice(s![.., k]));
        }
        out
    }

    /// <psi_k| A |psi_k'> for k, k' in `set`.
    pub fn project(&self, op: &OperatorMatrix, set: &[usize]) -> Array2<Complex64> {
        let cols = self.columns(set);
        let bra = cols.t().mapv(|z| z.conj());
        bra.dot(&op.mat).dot(&cols)
    }
}

/// Rayleigh-Schrodinger perturbation theory at order 0, 1 or 2.
pub fn perturb(
    spectrum: &LinearSpectrum,
    dh: &OperatorMatrix,
    basis: &AngularBasis,
    order: u8,
) -> Result<EigenSystem> {
    assert!(order <= 2, "orders 0..=2 are implemented");
    let n = basis.physical_dim();
    assert_eq!(dh.dim(), n, "perturbation must be on the physical block");
    let xi = &spectrum.xi[..n];
    // basis ordering puts |0,0> then |1/2,-1/2> first, so this is w_down
    let omega_down = xi[1] - xi[0];
    let tol = DEGENERACY_TOL * omega_down;
    let v = &dh.mat;

    let guard = |k: usize, j: usize| -> Result<f64> {
        let gap = xi[k] - xi[j];
        if gap.abs() < tol {
            Err(SimError::Degeneracy {
                i: k,
                j,
                gap: gap.abs(),
                tol,
            })
        } else {
            Ok(gap)
        }
    };

    let mut energies = vec![0.0; n];
    let mut states: Array2<Complex64> = Array2::zeros((n, n));
    for k in 0..n {
        let mut e = xi[k];
        let mut c: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
        c[k] = Complex64::new(1.0, 0.0);
        if order >= 1 {
            e += v[[k, k]].re;
            for j in 0..n {
                if j == k || v[[j, k]].norm() == 0.0 {
                    continue;
                }
                let gap = guard(k, j)?;
                c[j] += v[[j, k]] / gap;
            }
        }
        if order >= 2 {
            for j in 0..n {
                if j == k || v[[j, k]].norm() == 0.0 {
                    continue;
                }
                let gap = guard(k, j)?;
                e += v[[j, k]].norm_sqr() / gap;
            }
            // second-order coefficients: chain term, diagonal pull-back, and
            // the norm-preserving correction to c_k
            for j in 0..n {
                if j == k {
                    continue;
                }
                let mut num = Complex64::new(0.0, 0.0);
                for l in 0..n {
                    if l == k || v[[j, l]].norm() == 0.0 || v[[l, k]].norm() == 0.0 {
                        continue;
                    }
                    let gap_l = guard(k, l)?;
                    num += v[[j, l]] * v[[l, k]] / gap_l;
                }
                if num.norm() > 0.0 || v[[j, k]].norm() > 0.0 {
                    let gap_j = guard(k, j)?;
                    c[j] += num / gap_j;
                    if v[[j, k]].norm() > 0.0 {
                        c[j] -= v[[k, k]] * v[[j, k]] / (gap_j * gap_j);
                    }
                }
            }
            let mut norm2 = 0.0;
            for j in 0..n {
                if j != k && v[[j, k]].norm() > 0.0 {
                    let gap = xi[k] - xi[j];
                    norm2 += v[[j, k]].norm_sqr() / (gap * gap);
                }
            }
            c[k] -= Complex64::new(0.5 * norm2, 0.0);
        }
        // normalize and gauge-fix: dominant coefficient real positive
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut c {
            *z /= norm;
        }
        let dom = (0..n)
            .max_by(|&a, &b| c[a].norm_sqr().partial_cmp(&c[b].norm_sqr()).unwrap())
            .unwrap();
        let phase = c[dom] / c[dom].norm();
        for z in &mut c {
            *z /= phase;
        }
        energies[k] = e;
        for (j, z) in c.into_iter().enumerate() {
            states[[j, k]] = z;
        }
    }

    // sort ascending on corrected energy (stable; ties keep basis order)
    let mut order_idx: Vec<usize> = (0..n).collect();
    order_idx.sort_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap());

    let mut sorted_e = Vec::with_capacity(n);
    let mut sorted_states: Array2<Complex64> = Array2::zeros((n, n));
    let mut labels = Vec::with_capacity(n);
    let mut zero_order = Vec::with_capacity(n);
    for (col, &k) in order_idx.iter().enumerate() {
        sorted_e.push(energies[k]);
        sorted_states
            .slice_mut(s![.., col])
            .assign(&states.slice(s![.., k]));
        let dom = (0..n)
            .max_by(|&a, &b| {
                states[[a, k]]
                    .norm_sqr()
                    .partial_cmp(&states[[b, k]].norm_sqr())
                    .unwrap()
            })
            .unwrap();
        labels.push(basis.state(dom));
        zero_order.push(xi[dom]);
    }
    Ok(EigenSystem {
        energies: sorted_e,
        states: sorted_states,
        labels,
        zero_order,
    })
}

/// Magnitudes |<psi_k| dH |psi_k'>| normalized to max = 1, with rows and
/// columns arranged by the states' zero-order labels so the constant-S blocks
/// are contiguous. Falls back to energy order if the label map is not a
/// bijection.
pub fn heatmap(eig: &EigenSystem, dh: &OperatorMatrix, basis: &AngularBasis) -> Array2<f64> {
    let n = eig.dim();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut by_label: Vec<Option<usize>> = vec![None; n];
    let mut bijective = true;
    for (k, lab) in eig.labels.iter().enumerate() {
        match basis.index_of(lab) {
            Some(i) if i < n && by_label[i].is_none() => by_label[i] = Some(k),
            _ => {
                bijective = false;
                break;
            }
        }
    }
    if bijective {
        perm = by_label.into_iter().map(|k| k.unwrap()).collect();
    }

    let cols = eig.columns(&perm);
    let bra = cols.t().mapv(|z| z.conj());
    let m = bra.dot(&dh.mat).dot(&cols);
    let mut out = m.mapv(|z| z.norm());
    let max = out.iter().cloned().fold(0.0_f64, f64::max);
    if max > 0.0 {
        out.mapv_inplace(|x| x / max);
    }
    out
}

/// Heat-map TSV: `#block S=...` boundary lines, then row, col, S_row, S_col,
/// magnitude.
pub fn write_heatmap_tsv<W: Write>(
    w: &mut W,
    basis: &AngularBasis,
    map: &Array2<f64>,
) -> std::io::Result<()> {
    let n = map.nrows();
    let mut start = 0usize;
    while start < n {
        let st = basis.state(start);
        let mut end = start;
        while end < n && basis.state(end).two_s() == st.two_s() {
            end += 1;
        }
        writeln!(
            w,
            "#block S={} rows={}..{}",
            HalfFmt(st.two_s() as i64),
            start,
            end - 1
        )?;
        start = end;
    }
    writeln!(w, "row\tcol\tS_row\tS_col\tmagnitude")?;
    for i in 0..n {
        for j in 0..n {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{:e}",
                i,
                j,
                HalfFmt(basis.state(i).two_s() as i64),
                HalfFmt(basis.state(j).two_s() as i64),
                map[[i, j]]
            )?;
        }
    }
    Ok(())
}

/// Formats a doubled half-integer (2x) as `x` or `x/2`.
pub struct HalfFmt(pub i64);

impl std::fmt::Display for HalfFmt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// One row of the level-vs-coupling table.
#[derive(Debug, Clone)]
pub struct LevelsRow {
    pub g: f64,
    pub energies: [f64; 4],
    pub zero_order: [f64; 4],
    pub labels: [AngularIndex; 4],
}

/// First four perturbed levels as a function of coupling. Grid points are
/// independent and evaluated in parallel against a shared basis.
pub fn levels_vs_g(
    params: &DeviceParams,
    g_grid: &[f64],
    order: u8,
    two_s_max: u32,
) -> Result<Vec<LevelsRow>> {
    let basis = AngularBasis::new(two_s_max);
    g_grid
        .par_iter()
        .map(|&g| {
            let p = DeviceParams { g, ..*params };
            let modes = derive_modes(&p)?;
            let set = build_hamiltonians(&p, &modes, &basis);
            let eig = perturb(&set.spectrum, &set.dh, &basis, order)?;
            Ok(LevelsRow {
                g,
                energies: [eig.energies[0], eig.energies[1], eig.energies[2], eig.energies[3]],
                zero_order: [
                    eig.zero_order[0],
                    eig.zero_order[1],
                    eig.zero_order[2],
                    eig.zero_order[3],
                ],
                labels: [eig.labels[0], eig.labels[1], eig.labels[2], eig.labels[3]],
            })
        })
        .collect()
}

pub fn write_levels_tsv<W: Write>(w: &mut W, rows: &[LevelsRow]) -> std::io::Result<()> {
    writeln!(
        w,
        "g_GHz\teps1\teps2\teps3\teps4\txi1\txi2\txi3\txi4\tlabel1\tlabel2\tlabel3\tlabel4"
    )?;
    for r in rows {
        write!(w, "{:e}", r.g)?;
        for e in r.energies {
            write!(w, "\t{:e}", e)?;
        }
        for x in r.zero_order {
            write!(w, "\t{:e}", x)?;
        }
        for l in r.labels {
            write!(w, "\t{}", l)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
