//! Two-site Bose-Hubbard model with local-density dephasing.
//!
//! The particle number is conserved by both the Hamiltonian and the jump
//! operators, so the state space is the (N+1)-dimensional Fock basis
//! `|n, N-n>` labelled by the left-well occupation `n`. Matrix elements are
//! hard-coded from the bosonic ladder algebra:
//!
//! * `<n|H|n>   = (u/2) [n(n-1) + (N-n)(N-n-1)]`
//! * `<n+1|H|n> = -sqrt((n+1)(N-n))`
//!
//! With jump operators `n_1` and `n_2 = N - n_1` the dissipator reduces to
//! pure dephasing of the Fock coherences, `D(rho)_{nm} = -g (n-m)^2 rho_{nm}`.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::density::{DensityMatrix, StateVector};
use crate::error::{Error, Result};
use crate::params::ModelParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `sqrt((n+1)(N-n))`, the magnitude of the hopping element between `n` and `n+1`.
#[inline]
pub fn hopping_amplitude(n: usize, total: usize) -> f64 {
    (((n + 1) * (total - n)) as f64).sqrt()
}

/// Real symmetric tridiagonal Hamiltonian in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    /// Interaction energies on the diagonal, length N+1.
    pub diag: Vec<f64>,
    /// Couplings between `n` and `n+1`, length N. All entries are `<= 0`.
    pub off: Vec<f64>,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let d = self.dim();
        Mat::from_fn(d, d, |r, c| {
            if r == c {
                self.diag[r]
            } else if r + 1 == c {
                self.off[r]
            } else if c + 1 == r {
                self.off[c]
            } else {
                0.0
            }
        })
    }
}

pub fn build_hamiltonian(params: &ModelParams) -> Result<Hamiltonian> {
    params.validate()?;
    let total = params.n;
    let diag = (0..=total)
        .map(|n| {
            let l = n as f64;
            let r = (total - n) as f64;
            0.5 * params.u * (l * (l - 1.0) + r * (r - 1.0))
        })
        .collect();
    let off = (0..total).map(|n| -hopping_amplitude(n, total)).collect();
    Ok(Hamiltonian { diag, off })
}

/// Lowest eigenvector of the Hamiltonian with nonnegative components.
pub fn ground_state(params: &ModelParams) -> Result<StateVector> {
    let h = build_hamiltonian(params)?;
    let evd = h
        .to_dense()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("hamiltonian: {e:?}")))?;
    // Eigenvalues come back in nondecreasing order.
    let energy = evd.S().column_vector()[0];
    let u = evd.U();
    // Negative couplings make the ground state a Perron vector: one sign throughout.
    let amps: Vec<f64> = (0..h.dim()).map(|r| u[(r, 0)].abs()).collect();
    Ok(StateVector::new(amps, energy))
}

/// The master-equation generator `rho -> -i[H, rho] + D(rho)` for fixed parameters.
///
/// Split as a diagonal part acting entrywise on `rho_{nm}`,
/// `-i (E_n - E_m) - g (n-m)^2`, plus the hopping commutator.
#[derive(Debug, Clone)]
pub struct Generator {
    params: ModelParams,
    energy: Vec<f64>,
    hop: Vec<f64>,
}

impl Generator {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let h = build_hamiltonian(params)?;
        Ok(Generator {
            params: *params,
            energy: h.diag,
            hop: h.off.iter().map(|x| -x).collect(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.energy.len()
    }

    /// Interaction energies `E_n` on the Hamiltonian diagonal.
    pub fn energies(&self) -> &[f64] {
        &self.energy
    }

    /// Entrywise rate of the diagonal part for element `(n, m)`.
    #[inline]
    pub fn diagonal_rate(&self, n: usize, m: usize) -> Complex64 {
        let k = n as f64 - m as f64;
        Complex64::new(-self.params.g * k * k, -(self.energy[n] - self.energy[m]))
    }

    /// `out = -i[H_hop, rho]` where `H_hop` holds only the tunnelling terms.
    pub fn hopping_into(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim();
        let b = &self.hop;
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);
        // H_hop = -sum_n b_n (|n><n+1| + |n+1><n|)
        // (H rho)_{nm} = -b_{n-1} rho_{n-1,m} - b_n rho_{n+1,m}
        // (rho H)_{nm} = -rho_{n,m-1} b_{m-1} - rho_{n,m+1} b_m
        // -i[H, rho] = i (b_{n-1} rho_{n-1,m} + b_n rho_{n+1,m} - b_{m-1} rho_{n,m-1} - b_m rho_{n,m+1})
        for n in 0..d {
            let row = &rho[n * d..(n + 1) * d];
            let up = (n > 0).then(|| (b[n - 1], &rho[(n - 1) * d..n * d]));
            let down = (n + 1 < d).then(|| (b[n], &rho[(n + 1) * d..(n + 2) * d]));
            let o = &mut out[n * d..(n + 1) * d];
            for m in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                if let Some((bu, r)) = up {
                    acc += bu * r[m];
                }
                if let Some((bd, r)) = down {
                    acc += bd * r[m];
                }
                if m > 0 {
                    acc -= b[m - 1] * row[m - 1];
                }
                if m + 1 < d {
                    acc -= b[m] * row[m + 1];
                }
                o[m] = I * acc;
            }
        }
    }

    /// `out = -i[H, rho] + D(rho)`.
    pub fn apply_into(&self, rho: &[Complex64], out: &mut [Complex64]) {
        self.hopping_into(rho, out);
        let d = self.dim();
        for n in 0..d {
            for m in 0..d {
                out[n * d + m] += self.diagonal_rate(n, m) * rho[n * d + m];
            }
        }
    }
}

fn check_dim(params: &ModelParams, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: rho.dim(),
        });
    }
    Ok(())
}

/// Dephasing dissipator `D(rho)_{nm} = -g (n-m)^2 rho_{nm}`.
pub fn dissipator_apply(params: &ModelParams, rho: &DensityMatrix) -> Result<DensityMatrix> {
    params.validate()?;
    check_dim(params, rho)?;
    let g = params.g;
    Ok(DensityMatrix::from_fn(rho.dim(), |n, m| {
        let k = n as f64 - m as f64;
        -g * k * k * rho[(n, m)]
    }))
}

/// Right-hand side of the master equation, `-i[H, rho] + D(rho)`.
pub fn master_rhs(params: &ModelParams, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_dim(params, rho)?;
    let gen = Generator::new(params)?;
    let mut out = DensityMatrix::zeros(rho.dim());
    gen.apply_into(rho.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Measurable quantities of a two-well state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    /// Inter-well coherence `<b1^+ b2 + b2^+ b1>`.
    pub coherence: f64,
    /// Left-well number fluctuations `<n1^2> - <n1>^2`.
    pub kappa: f64,
    /// Probability of the balanced configuration `rho_{N/2,N/2}`.
    pub balanced: f64,
    /// `tr rho^2`.
    pub purity: f64,
}

pub fn observables_of(params: &ModelParams, rho: &DensityMatrix) -> Result<Observables> {
    check_dim(params, rho)?;
    let total = params.n;
    let coherence = 2.0
        * (0..total)
            .map(|n| hopping_amplitude(n, total) * rho[(n + 1, n)].re)
            .sum::<f64>();
    let pops = rho.populations();
    Ok(Observables {
        coherence,
        kappa: number_variance(&pops),
        balanced: pops[params.center()],
        purity: rho.purity(),
    })
}

/// `sum n^2 p_n - (sum n p_n)^2` for populations `p_n`.
pub fn number_variance(pops: &[f64]) -> f64 {
    let (m1, m2) = pops.iter().enumerate().fold((0.0, 0.0), |(a, b), (n, &p)| {
        let x = n as f64;
        (a + x * p, b + x * x * p)
    });
    m2 - m1 * m1
}
