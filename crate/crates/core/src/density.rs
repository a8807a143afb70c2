use std::ops::{Index, IndexMut};

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::Tolerances;

/// Complex matrix over the Fock basis, stored row-major.
///
/// Used both for physical states (Hermitian, unit trace, PSD) and for
/// generator outputs such as the master-equation right-hand side, which are
/// traceless. [`DensityMatrix::check_invariants`] only makes sense for the
/// former.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dim: usize) -> Self {
        DensityMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(DensityMatrix { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        DensityMatrix { dim, data }
    }

    /// Maximally mixed state `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let w = 1.0 / dim as f64;
        Self::from_fn(dim, |r, c| {
            if r == c {
                Complex64::new(w, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Projector `|n><n|` onto a single Fock state.
    pub fn fock_projector(dim: usize, n: usize) -> Self {
        let mut rho = Self::zeros(dim);
        rho[(n, n)] = Complex64::new(1.0, 0.0);
        rho
    }

    pub fn pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        Self::from_fn(a.len(), |r, c| Complex64::new(a[r] * a[c], 0.0))
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(pop: &[f64]) -> Self {
        let mut rho = Self::zeros(pop.len());
        for (n, &p) in pop.iter().enumerate() {
            rho[(n, n)] = Complex64::new(p, 0.0);
        }
        rho
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|n| self[(n, n)]).sum()
    }

    /// Real parts of the diagonal, i.e. the Fock-state populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self[(n, n)].re).collect()
    }

    pub fn trace_error(&self) -> f64 {
        (self.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    /// `max |rho_nm - conj(rho_mn)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `tr rho^2 = sum |rho_nm|^2` for Hermitian `rho`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let d = self.dim;
        let m = Mat::<Complex64>::from_fn(d, d, |r, c| {
            0.5 * (self[(r, c)] + self[(c, r)].conj())
        });
        let ev = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("hermitian eigenvalues: {e:?}")))?;
        Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Replace `rho` by its Hermitian part.
    pub fn symmetrize(&mut self) {
        let d = self.dim;
        for r in 0..d {
            self.data[r * d + r].im = 0.0;
            for c in (r + 1)..d {
                let avg = 0.5 * (self.data[r * d + c] + self.data[c * d + r].conj());
                self.data[r * d + c] = avg;
                self.data[c * d + r] = avg.conj();
            }
        }
    }

    /// Rescale to unit (real) trace. Returns the trace before rescaling.
    pub fn normalize_trace(&mut self) -> f64 {
        let tr = self.trace().re;
        if tr != 0.0 {
            let s = 1.0 / tr;
            for z in &mut self.data {
                *z *= s;
            }
        }
        tr
    }

    /// Conjugation by the well-exchange permutation `n -> N - n`.
    pub fn mirrored(&self) -> Self {
        let last = self.dim - 1;
        Self::from_fn(self.dim, |r, c| self[(last - r, last - c)])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Fails on the first violated invariant of a physical state.
    pub fn check_invariants(&self, tol: &Tolerances) -> Result<()> {
        let tr = self.trace_error();
        if tr > tol.trace {
            return Err(Error::InvariantViolation {
                t: f64::NAN,
                what: "trace error",
                value: tr,
                limit: tol.trace,
            });
        }
        let herm = self.hermiticity_error();
        if herm > tol.hermiticity {
            return Err(Error::InvariantViolation {
                t: f64::NAN,
                what: "hermiticity error",
                value: herm,
                limit: tol.hermiticity,
            });
        }
        let min_ev = self.min_eigenvalue()?;
        if min_ev < -tol.psd {
            return Err(Error::InvariantViolation {
                t: f64::NAN,
                what: "negative eigenvalue",
                value: -min_ev,
                limit: tol.psd,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for DensityMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

/// Real, normalized amplitudes over the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<f64>,
    energy: f64,
}

impl StateVector {
    pub(crate) fn new(mut amps: Vec<f64>, energy: f64) -> Self {
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector { amps, energy }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    /// Eigenvalue of the Hamiltonian this state was obtained from.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}
