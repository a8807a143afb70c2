//! Shift-invert Arnoldi for the Liouvillian eigenvalue nearest a real shift.
//!
//! `(M - sigma)^{-1}` is applied through a sparse LU factorization. The
//! iteration runs in the traceless subspace, which `(M - sigma)^{-1}` leaves
//! invariant because `M` maps everything to traceless matrices; the
//! stationary state is thereby excluded from the gap search.

use faer::linalg::solvers::Solve;
use faer::sparse::SparseColMat;
use faer::Mat;
use log::debug;
use num_complex::Complex64;

use super::{residual, Liouvillian};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// Krylov subspace dimension per cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Convergence when the Ritz residual is below `tol * |theta|`.
    pub tol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions {
            krylov_dim: 24,
            max_restarts: 40,
            tol: 1e-10,
        }
    }
}

pub(crate) struct EigenPair {
    pub lambda: Complex64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

struct ShiftInvert {
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
    n: usize,
}

impl ShiftInvert {
    fn new(l: &Liouvillian, sigma: f64) -> Result<Self> {
        let n = l.size();
        let a = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &l.triplets(sigma))
            .map_err(|e| Error::Eigensolver(format!("sparse assembly: {e:?}")))?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::Eigensolver(format!("sparse LU at shift {sigma:e}: {e:?}")))?;
        Ok(ShiftInvert { lu, n })
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut rhs = Mat::<Complex64>::from_fn(self.n, 1, |i, _| x[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn remove_trace(v: &mut [Complex64], dim: usize) {
    let tr: Complex64 = (0..dim).map(|k| v[k * (dim + 1)]).sum();
    let shift = tr / dim as f64;
    for k in 0..dim {
        v[k * (dim + 1)] -= shift;
    }
}

fn start_vector(size: usize) -> Vec<Complex64> {
    (0..size)
        .map(|i| {
            let x = i as f64;
            Complex64::new((1.3 * x + 0.7).sin(), 0.5 * (0.37 * x + 0.2).cos())
        })
        .collect()
}

/// Eigenvalue of `M` nearest `sigma` outside the stationary state, reported as `lambda = -mu`.
pub(crate) fn gap_by_shift_invert(l: &Liouvillian, sigma: f64, opts: &ArnoldiOptions) -> Result<EigenPair> {
    let dim = l.dim();
    let size = l.size();
    let op = ShiftInvert::new(l, sigma)?;
    let k = opts.krylov_dim.min(size - 1).max(2);

    let mut v0 = start_vector(size);
    remove_trace(&mut v0, dim);
    let mut best_res = f64::INFINITY;
    for restart in 0..opts.max_restarts {
        let nv = norm(&v0);
        let mut basis: Vec<Vec<Complex64>> = vec![v0.iter().map(|z| z / nv).collect()];
        let mut h = Mat::<Complex64>::zeros(k + 1, k);
        let mut m = k;
        for j in 0..k {
            let mut w = op.apply(&basis[j]);
            remove_trace(&mut w, dim);
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c = dot(b, &w);
                    h[(i, j)] += c;
                    for (x, y) in w.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let hn = norm(&w);
            h[(j + 1, j)] = Complex64::new(hn, 0.0);
            if hn < 1e-14 * h[(j, j)].norm().max(1e-300) {
                m = j + 1;
                break;
            }
            basis.push(w.into_iter().map(|z| z / hn).collect());
        }
        let hm = Mat::<Complex64>::from_fn(m, m, |r, c| h[(r, c)]);
        let evd = hm
            .eigen()
            .map_err(|e| Error::Eigensolver(format!("Hessenberg eigenproblem: {e:?}")))?;
        let theta: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
        let best = (0..m)
            .max_by(|&a, &b| theta[a].norm().total_cmp(&theta[b].norm()))
            .expect("nonempty Krylov space");
        let y: Vec<Complex64> = evd.U().col(best).iter().copied().collect();
        let mut x = vec![Complex64::new(0.0, 0.0); size];
        for (yi, b) in y.iter().zip(&basis) {
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += yi * bi;
            }
        }
        let ritz_res = if m < k {
            0.0
        } else {
            h[(m, m - 1)].norm() * y[m - 1].norm() / norm(&y)
        };
        let mu = sigma + 1.0 / theta[best];
        let lambda = -mu;
        best_res = best_res.min(ritz_res / theta[best].norm());
        if ritz_res <= opts.tol * theta[best].norm() {
            let res = residual(l, &x, lambda);
            debug!("shift-invert Arnoldi converged after {} cycles: lambda = {lambda}", restart + 1);
            return Ok(EigenPair {
                lambda,
                vector: x,
                residual: res,
            });
        }
        remove_trace(&mut x, dim);
        v0 = x;
    }
    Err(Error::Eigensolver(format!(
        "shift-invert Arnoldi did not converge in {} cycles (relative Ritz residual {best_res:.3e})",
        opts.max_restarts
    )))
}

/// Stationary state by inverse iteration with a small shift `sigma > 0`.
pub(crate) fn steady_by_inverse_iteration(l: &Liouvillian, sigma: f64, opts: &ArnoldiOptions) -> Result<EigenPair> {
    let dim = l.dim();
    let size = l.size();
    let op = ShiftInvert::new(l, sigma)?;
    let mut x = start_vector(size);
    for k in 0..dim {
        x[k * (dim + 1)] += Complex64::new(1.0, 0.0);
    }
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_restarts * opts.krylov_dim {
        let mut y = op.apply(&x);
        let ny = norm(&y);
        // align the phase with the previous iterate before comparing
        let c = dot(&x, &y);
        let phase = if c.norm() > 0.0 { c.conj() / c.norm() } else { Complex64::new(1.0, 0.0) };
        for z in &mut y {
            *z *= phase / ny;
        }
        change = y.iter().zip(&x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
            / norm(&x);
        x = y;
        if change <= 1e-10 {
            let mut mx = vec![Complex64::new(0.0, 0.0); size];
            l.apply(&x, &mut mx);
            let lambda = -dot(&x, &mx);
            return Ok(EigenPair {
                lambda,
                residual: residual(l, &x, lambda),
                vector: x,
            });
        }
    }
    Err(Error::Eigensolver(format!(
        "inverse iteration for the stationary state did not converge (last change {change:.3e})"
    )))
}
