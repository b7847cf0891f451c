//! Two-mode Fock space, the angular-momentum basis |S, mS>, and dense matrix
//! representations of ladder and spin operators.
//!
//! A state of the two canonical oscillators (n_up, n_down) is relabeled by
//! S = (n_up + n_down)/2 and mS = (n_up - n_down)/2. Spin operators are built
//! from the ladder identities S+ = a+_up a_down, Sz = (n_up - n_down)/2.
//!
//! The basis is stored in (S ascending, mS ascending) order, which is the same
//! as (N ascending, n_up ascending); all states with S <= s_max form a leading
//! prefix, so projection onto the physical block is a top-left submatrix view.
//! Operators that change photon number are evaluated on a buffered basis two
//! spin units past s_max so that products used downstream are exact on the
//! physical block.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;

use crate::device::Canonical;

/// One |S, mS> state, stored as the exact Fock pair (n_up, n_down).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularIndex {
    pub n_up: u32,
    pub n_down: u32,
}

impl AngularIndex {
    pub fn new(n_up: u32, n_down: u32) -> Self {
        AngularIndex { n_up, n_down }
    }

    /// Total photon number N = 2S.
    pub fn total(&self) -> u32 {
        self.n_up + self.n_down
    }

    /// 2S, always an exact integer.
    pub fn two_s(&self) -> u32 {
        self.total()
    }

    /// 2 mS, always an exact integer.
    pub fn two_ms(&self) -> i64 {
        self.n_up as i64 - self.n_down as i64
    }

    pub fn s(&self) -> f64 {
        self.two_s() as f64 / 2.0
    }

    pub fn ms(&self) -> f64 {
        self.two_ms() as f64 / 2.0
    }
}

fn fmt_half(two_x: i64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if two_x % 2 == 0 {
        write!(f, "{}", two_x / 2)
    } else {
        write!(f, "{}/2", two_x)
    }
}

impl fmt::Display for AngularIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        fmt_half(self.two_s() as i64, f)?;
        write!(f, ",")?;
        fmt_half(self.two_ms(), f)?;
        write!(f, ">")
    }
}

/// Ordered state list with bidirectional index maps and the physical/buffer
/// cutoffs. `two_s_max` and `two_s_buffer` are doubled spins (2S), kept as
/// integers so half-integer cutoffs stay exact.
#[derive(Debug, Clone)]
pub struct AngularBasis {
    two_s_max: u32,
    two_s_buffer: u32,
    states: Vec<AngularIndex>,
    lookup: HashMap<AngularIndex, usize>,
    physical_dim: usize,
}

impl AngularBasis {
    /// Basis with the default buffer s_max + 2 (the quartic perturbation
    /// changes N by at most 4).
    pub fn new(two_s_max: u32) -> Self {
        Self::with_buffer(two_s_max, two_s_max + 4)
    }

    pub fn with_buffer(two_s_max: u32, two_s_buffer: u32) -> Self {
        assert!(two_s_buffer >= two_s_max, "buffer cutoff below physical cutoff");
        let mut states = Vec::new();
        for n in 0..=two_s_buffer {
            for n_up in 0..=n {
                states.push(AngularIndex::new(n_up, n - n_up));
            }
        }
        let lookup = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let physical_dim = states.iter().filter(|s| s.total() <= two_s_max).count();
        AngularBasis {
            two_s_max,
            two_s_buffer,
            states,
            lookup,
            physical_dim,
        }
    }

    /// Buffered dimension.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Number of states with S <= s_max; these are the leading prefix.
    pub fn physical_dim(&self) -> usize {
        self.physical_dim
    }

    pub fn two_s_max(&self) -> u32 {
        self.two_s_max
    }

    pub fn two_s_buffer(&self) -> u32 {
        self.two_s_buffer
    }

    pub fn state(&self, i: usize) -> AngularIndex {
        self.states[i]
    }

    pub fn states(&self) -> &[AngularIndex] {
        &self.states
    }

    pub fn index_of(&self, s: &AngularIndex) -> Option<usize> {
        self.lookup.get(s).copied()
    }
}

/// Dense complex matrix in the owning basis ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub mat: Array2<Complex64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix {
            mat: Array2::zeros((dim, dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dagger(&self) -> Self {
        OperatorMatrix {
            mat: self.mat.t().mapv(|z| z.conj()),
        }
    }

    pub fn dot(&self, other: &Self) -> Self {
        OperatorMatrix {
            mat: self.mat.dot(&other.mat),
        }
    }

    /// Top-left n x n block; with the (N ascending) ordering this is the
    /// projection onto the lower-spin subspace.
    pub fn project(&self, n: usize) -> Self {
        OperatorMatrix {
            mat: self.mat.slice(ndarray::s![..n, ..n]).to_owned(),
        }
    }

    /// Entrywise max |A - A^dagger|.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.mat[[i, j]] - self.mat[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Entrywise max |A - B|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for (a, b) in self.mat.iter().zip(other.mat.iter()) {
            worst = worst.max((a - b).norm());
        }
        worst
    }

    /// Columnar debug export: row, col, re, im for non-zero entries.
    pub fn write_columnar<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "row\tcol\tre\tim")?;
        for ((i, j), z) in self.mat.indexed_iter() {
            if z.norm() > 0.0 {
                writeln!(w, "{}\t{}\t{:e}\t{:e}", i, j, z.re, z.im)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilate,
    Create,
}

/// Matrix of a_sigma or a+_sigma on the buffered basis. Annihilation is exact
/// everywhere; creation loses amplitudes out of the top shell, which the
/// buffer absorbs for everything evaluated on the physical block.
pub fn ladder_matrix(basis: &AngularBasis, mode: Canonical, kind: Ladder) -> OperatorMatrix {
    let mut op = OperatorMatrix::zeros(basis.dim());
    for (j, st) in basis.states().iter().enumerate() {
        let n = match mode {
            Canonical::Up => st.n_up,
            Canonical::Down => st.n_down,
        };
        let (target, amp) = match kind {
            Ladder::Annihilate => {
                if n == 0 {
                    continue;
                }
                let t = match mode {
                    Canonical::Up => AngularIndex::new(st.n_up - 1, st.n_down),
                    Canonical::Down => AngularIndex::new(st.n_up, st.n_down - 1),
                };
                (t, (n as f64).sqrt())
            }
            Ladder::Create => {
                let t = match mode {
                    Canonical::Up => AngularIndex::new(st.n_up + 1, st.n_down),
                    Canonical::Down => AngularIndex::new(st.n_up, st.n_down + 1),
                };
                (t, (n as f64 + 1.0).sqrt())
            }
        };
        if let Some(i) = basis.index_of(&target) {
            op.mat[[i, j]] = Complex64::new(amp, 0.0);
        }
    }
    op
}

/// The Schwinger spin set plus the total number operator, composed exactly
/// from ladder matrices. All of these conserve N, so they are exact on the
/// whole buffered basis.
#[derive(Debug, Clone)]
pub struct SpinMatrices {
    pub sx: OperatorMatrix,
    pub sy: OperatorMatrix,
    pub sz: OperatorMatrix,
    pub s_plus: OperatorMatrix,
    pub s_minus: OperatorMatrix,
    pub n_tot: OperatorMatrix,
}

pub fn spin_matrices(basis: &AngularBasis) -> SpinMatrices {
    let a_up = ladder_matrix(basis, Canonical::Up, Ladder::Annihilate);
    let ad_up = ladder_matrix(basis, Canonical::Up, Ladder::Create);
    let a_dn = ladder_matrix(basis, Canonical::Down, Ladder::Annihilate);
    let ad_dn = ladder_matrix(basis, Canonical::Down, Ladder::Create);

    let s_plus = ad_up.dot(&a_dn);
    let s_minus = ad_dn.dot(&a_up);
    let half = Complex64::new(0.5, 0.0);
    let sx = OperatorMatrix {
        mat: (&s_plus.mat + &s_minus.mat) * half,
    };
    let sy = OperatorMatrix {
        mat: (&s_plus.mat - &s_minus.mat) * Complex64::new(0.0, -0.5),
    };
    let sz = OperatorMatrix {
        mat: (ad_up.mat.dot(&a_up.mat) - ad_dn.mat.dot(&a_dn.mat)) * half,
    };
    let n_tot = OperatorMatrix {
        mat: ad_up.mat.dot(&a_up.mat) + ad_dn.mat.dot(&a_dn.mat),
    };
    SpinMatrices {
        sx,
        sy,
        sz,
        s_plus,
        s_minus,
        n_tot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Canonical;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn state_counts_and_ordering() {
        // vacuum only
        let b0 = AngularBasis::with_buffer(0, 0);
        assert_eq!(b0.physical_dim(), 1);
        assert_eq!(b0.state(0), AngularIndex::new(0, 0));

        // s_max = 1/2: |0,0>, |1/2,-1/2>, |1/2,+1/2>
        let bh = AngularBasis::new(1);
        assert_eq!(bh.physical_dim(), 3);
        assert_eq!(bh.state(1), AngularIndex::new(0, 1));
        assert_eq!(bh.state(2), AngularIndex::new(1, 0));
        assert_eq!(bh.state(1).ms(), -0.5);
        assert_eq!(bh.state(2).ms(), 0.5);

        // s_max = 3: 28 physical states, buffered to S = 5 -> 66
        let b = AngularBasis::new(6);
        assert_eq!(b.physical_dim(), 28);
        assert_eq!(b.dim(), 66);

        // the count is sum_{N=0}^{2S} (N+1) and matches (S+1)(2S+1) at integer S
        assert_eq!((0..=6).map(|n| n + 1).sum::<usize>(), 28);
        assert_eq!((3 + 1) * (2 * 3 + 1), 28);

        // physical states form the leading prefix, ordering total and exact
        for i in 0..b.dim() {
            let st = b.state(i);
            assert_eq!(b.index_of(&st), Some(i));
            assert_eq!(st.total() <= 6, i < b.physical_dim());
            if i > 0 {
                let prev = b.state(i - 1);
                assert!(
                    (prev.total(), prev.n_up) < (st.total(), st.n_up),
                    "ordering must be (S asc, mS asc)"
                );
            }
            // exact relabeling identities
            assert_eq!(st.two_s() as i64 + st.two_ms(), 2 * st.n_up as i64);
            assert_eq!(st.two_s() as i64 - st.two_ms(), 2 * st.n_down as i64);
        }
    }

    #[test]
    fn display_half_integers() {
        assert_eq!(AngularIndex::new(0, 1).to_string(), "|1/2,-1/2>");
        assert_eq!(AngularIndex::new(2, 0).to_string(), "|1,1>");
    }

    #[test]
    fn single_ladder_steps() {
        let b = AngularBasis::new(2);
        let a_dn = ladder_matrix(&b, Canonical::Down, Ladder::Annihilate);
        let i00 = b.index_of(&AngularIndex::new(0, 0)).unwrap();
        let i01 = b.index_of(&AngularIndex::new(0, 1)).unwrap();
        // a_down |1/2,-1/2> = 1 * |0,0>
        assert_eq!(a_dn.mat[[i00, i01]], c(1.0, 0.0));

        // a+_up |0,0> = |1/2,+1/2>
        let ad_up = ladder_matrix(&b, Canonical::Up, Ladder::Create);
        let i10 = b.index_of(&AngularIndex::new(1, 0)).unwrap();
        assert_eq!(ad_up.mat[[i10, i00]], c(1.0, 0.0));

        // creation is the conjugate transpose of annihilation on the interior
        let a_up = ladder_matrix(&b, Canonical::Up, Ladder::Annihilate);
        let diff = ad_up.max_abs_diff(&a_up.dagger());
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn pair_creation_enumeration_oracle() {
        // explicit Fock-pair bookkeeping for N <= 4:
        // <S', mS'| a+_up a+_dn |n_up, n_dn> = sqrt(n_up+1) sqrt(n_dn+1)
        let b = AngularBasis::new(8);
        let ad_up = ladder_matrix(&b, Canonical::Up, Ladder::Create);
        let ad_dn = ladder_matrix(&b, Canonical::Down, Ladder::Create);
        let pair = ad_up.dot(&ad_dn);
        for (j, st) in b.states().iter().enumerate() {
            if st.total() > 4 {
                continue;
            }
            let target = AngularIndex::new(st.n_up + 1, st.n_down + 1);
            let i = b.index_of(&target).unwrap();
            let expect = ((st.n_up as f64 + 1.0) * (st.n_down as f64 + 1.0)).sqrt();
            assert_relative_eq!(pair.mat[[i, j]].re, expect, max_relative = 1e-14);
        }
        // the spec'd spot value: <2,0| a+_up a+_dn |1,0> = 2 with |1,0> = (1,1)
        let j = b.index_of(&AngularIndex::new(1, 1)).unwrap();
        let i = b.index_of(&AngularIndex::new(2, 2)).unwrap();
        assert_relative_eq!(pair.mat[[i, j]].re, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn spin_ladder_amplitudes() {
        let b = AngularBasis::new(4);
        let sm = spin_matrices(&b);
        // S+ |1/2,-1/2> = 1 * |1/2,+1/2>
        let i = b.index_of(&AngularIndex::new(1, 0)).unwrap();
        let j = b.index_of(&AngularIndex::new(0, 1)).unwrap();
        assert_eq!(sm.s_plus.mat[[i, j]], c(1.0, 0.0));

        // S- S+ |1,0> = (S(S+1) - mS(mS+1)) |1,0> = 2 |1,0>
        let k = b.index_of(&AngularIndex::new(1, 1)).unwrap();
        let prod = sm.s_minus.dot(&sm.s_plus);
        assert_relative_eq!(prod.mat[[k, k]].re, 2.0, max_relative = 1e-14);

        // general amplitude sqrt((S - mS)(S + mS + 1)) for every state
        for (j, st) in b.states().iter().enumerate() {
            if st.n_down == 0 {
                continue;
            }
            let up = AngularIndex::new(st.n_up + 1, st.n_down - 1);
            let i = b.index_of(&up).unwrap();
            let s = st.s();
            let ms = st.ms();
            let expect = ((s - ms) * (s + ms + 1.0)).sqrt();
            assert_relative_eq!(sm.s_plus.mat[[i, j]].re, expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn sz_and_ntot_are_diagonal_and_commute() {
        let b = AngularBasis::new(6);
        let sm = spin_matrices(&b);
        for (i, st) in b.states().iter().enumerate() {
            for j in 0..b.dim() {
                if i != j {
                    assert_eq!(sm.sz.mat[[i, j]], c(0.0, 0.0));
                    assert_eq!(sm.n_tot.mat[[i, j]], c(0.0, 0.0));
                }
            }
            assert_relative_eq!(sm.sz.mat[[i, i]].re, st.ms(), max_relative = 1e-14);
            assert_relative_eq!(sm.n_tot.mat[[i, i]].re, st.total() as f64, max_relative = 1e-14);
        }
        let comm = sm.sz.dot(&sm.n_tot).max_abs_diff(&sm.n_tot.dot(&sm.sz));
        assert_eq!(comm, 0.0);
    }

    #[test]
    fn angular_momentum_algebra() {
        let b = AngularBasis::new(6);
        let sm = spin_matrices(&b);
        let i = Complex64::new(0.0, 1.0);

        // [Sx, Sy] = i Sz and cyclic permutations; N-conserving, so exact on
        // the whole buffered space. Checked on the physical block.
        let p = b.physical_dim();
        let pairs = [
            (&sm.sx, &sm.sy, &sm.sz),
            (&sm.sy, &sm.sz, &sm.sx),
            (&sm.sz, &sm.sx, &sm.sy),
        ];
        for (a, bb, cc) in pairs {
            let comm = &a.dot(bb).mat - &bb.dot(a).mat;
            let expect = cc.mat.mapv(|z| z * i);
            let err = OperatorMatrix { mat: comm }
                .project(p)
                .max_abs_diff(&OperatorMatrix { mat: expect }.project(p));
            assert!(err < 1e-12, "commutator error {err}");
        }

        // S^2 diagonal with eigenvalue S(S+1)
        let s2 = &sm.sx.dot(&sm.sx).mat + &sm.sy.dot(&sm.sy).mat + &sm.sz.dot(&sm.sz).mat;
        for (k, st) in b.states().iter().enumerate() {
            for l in 0..b.dim() {
                if k != l {
                    assert!(s2[[k, l]].norm() < 1e-12);
                }
            }
            let s = st.s();
            assert_relative_eq!(s2[[k, k]].re, s * (s + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn bosonic_commutator_on_interior() {
        let b = AngularBasis::new(4);
        let interior: Vec<usize> = (0..b.dim())
            .filter(|&i| b.state(i).total() < b.two_s_buffer())
            .collect();
        for mode in Canonical::BOTH {
            let a = ladder_matrix(&b, mode, Ladder::Annihilate);
            let ad = ladder_matrix(&b, mode, Ladder::Create);
            let comm = &a.dot(&ad).mat - &ad.dot(&a).mat;
            for &i in &interior {
                for &j in &interior {
                    let expect = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                    assert!((comm[[i, j]] - expect).norm() < 1e-13);
                }
            }
        }
        // cross-mode commutators vanish on the interior
        let a_up = ladder_matrix(&b, Canonical::Up, Ladder::Annihilate);
        let ad_dn = ladder_matrix(&b, Canonical::Down, Ladder::Create);
        let comm = &a_up.dot(&ad_dn).mat - &ad_dn.dot(&a_up).mat;
        for &i in &interior {
            for &j in &interior {
                assert!(comm[[i, j]].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn columnar_export_lists_nonzeros() {
        let b = AngularBasis::with_buffer(1, 1);
        let a = ladder_matrix(&b, Canonical::Down, Ladder::Annihilate);
        let mut buf = Vec::new();
        a.write_columnar(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row\tcol\tre\tim\n"));
        assert_eq!(text.lines().count(), 2); // header + single non-zero
    }
}
