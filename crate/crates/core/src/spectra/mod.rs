//! Liouvillian superoperator and its spectrum.
//!
//! Density matrices are vectorized by stacking columns: `rho_{n,m}` sits at
//! index `n + m (N+1)`. Eigenvalues are reported as `lambda` with
//! `M v = -lambda v`, so relaxation rates have `Re(lambda) >= 0`.

mod arnoldi;

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::Mat;
use log::debug;
use num_complex::Complex64;

use crate::analysis::{fit_loglog, FitReport};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::model::build_hamiltonian;
use crate::params::ModelParams;
use crate::reduced::ReducedPropagator;

pub use arnoldi::ArnoldiOptions;

/// Largest N for which dense diagonalization is used.
pub const DENSE_MAX_N: usize = 40;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Sparse Liouvillian in compressed-row form.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Liouvillian {
    /// Side of the density matrix, `N + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Size of the superoperator, `(N + 1)^2`.
    pub fn size(&self) -> usize {
        self.dim * self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.size())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let n = self.size();
        let mut m = Mat::<Complex64>::zeros(n, n);
        for r in 0..n {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub(crate) fn triplets(&self, shift: f64) -> Vec<faer::sparse::Triplet<usize, usize, Complex64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.size() {
            for (c, v) in self.row(r) {
                let v = if r == c { v - shift } else { v };
                t.push(faer::sparse::Triplet::new(r, c, v));
            }
        }
        t
    }
}

/// Column-stacked vector of a density matrix.
pub fn vectorize(rho: &DensityMatrix) -> Vec<Complex64> {
    let d = rho.dim();
    (0..d * d).map(|i| rho[(i % d, i / d)]).collect()
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[Complex64], dim: usize) -> Result<DensityMatrix> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: v.len(),
        });
    }
    Ok(DensityMatrix::from_fn(dim, |r, c| v[r + c * dim]))
}

pub fn build_liouvillian(params: &ModelParams) -> Result<Liouvillian> {
    build_liouvillian_with_tunneling(params, 1.0)
}

/// Liouvillian with the tunnelling amplitude scaled by `tunneling`
/// (`0` gives the decoupled-well limit).
pub fn build_liouvillian_with_tunneling(params: &ModelParams, tunneling: f64) -> Result<Liouvillian> {
    let h = build_hamiltonian(params)?;
    let d = params.dim();
    let g = params.g;
    let off: Vec<f64> = h.off.iter().map(|x| x * tunneling).collect();
    let size = d * d;
    let mut row_ptr = Vec::with_capacity(size + 1);
    let mut cols = Vec::with_capacity(5 * size);
    let mut vals = Vec::with_capacity(5 * size);
    row_ptr.push(0);
    for m in 0..d {
        for n in 0..d {
            // (-i[H, rho])_{nm} = -i sum_k H_{nk} rho_{km} + i sum_k rho_{nk} H_{km}
            // the diagonal is stored even when zero so that shifts can be applied
            let mut push = |c: usize, v: Complex64| {
                if c == n + m * d || v != Complex64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            };
            if m > 0 {
                push(n + (m - 1) * d, I * off[m - 1]);
            }
            if n > 0 {
                push(n - 1 + m * d, -I * off[n - 1]);
            }
            let k = n.abs_diff(m) as f64;
            push(
                n + m * d,
                Complex64::new(-g * k * k, -(h.diag[n] - h.diag[m])),
            );
            if n + 1 < d {
                push(n + 1 + m * d, -I * off[n]);
            }
            if m + 1 < d {
                push(n + (m + 1) * d, I * off[m]);
            }
            row_ptr.push(cols.len());
        }
    }
    Ok(Liouvillian {
        dim: d,
        row_ptr,
        cols,
        vals,
    })
}

/// Eigen-analysis of the Liouvillian.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub params: ModelParams,
    /// `lambda` values sorted by real part, then imaginary part. For `N > DENSE_MAX_N`
    /// only the stationary value and the gap eigenvalue are present.
    pub eigenvalues: Vec<Complex64>,
    /// The gap eigenvalue; its real part is the spectral gap.
    pub gap_eigenvalue: Complex64,
    /// Stationary state, normalized to unit trace.
    pub steady_vec: DensityMatrix,
    /// `max |rho_S - I/(N+1)|`.
    pub steady_deviation: f64,
    /// Number of eigenvalues with `|lambda| < tol`.
    pub null_count: usize,
    /// Smallest and largest `Re(lambda)` of the slow band: eigenvalues with
    /// `Re(lambda) < g/2` other than the stationary and gap eigenvalues.
    pub band_edges: Option<(f64, f64)>,
    /// Whether the full spectrum was computed.
    pub dense: bool,
    /// Residual norm `|M x + lambda x| / |x|` of the gap eigenvector.
    pub gap_residual: f64,
}

impl SpectrumResult {
    /// Smallest strictly positive `Re(lambda)`.
    pub fn gap(&self) -> f64 {
        self.gap_eigenvalue.re
    }

    /// CSV with header `re_lambda,im_lambda`, one eigenvalue per row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re_lambda,im_lambda")?;
        for l in &self.eigenvalues {
            writeln!(w, "{:.12e},{:.12e}", l.re, l.im)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    /// Threshold on `|lambda|` for counting stationary eigenvalues.
    pub tol: f64,
    pub dense_max_n: usize,
    pub arnoldi: ArnoldiOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            tol: 1e-9,
            dense_max_n: DENSE_MAX_N,
            arnoldi: ArnoldiOptions::default(),
        }
    }
}

pub fn spectrum(params: &ModelParams) -> Result<SpectrumResult> {
    spectrum_with(params, &SpectrumOptions::default())
}

pub fn spectrum_with(params: &ModelParams, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    params.validate()?;
    let l = build_liouvillian(params)?;
    if params.n <= opts.dense_max_n {
        dense_spectrum(params, &l, opts)
    } else {
        iterative_spectrum(params, &l, opts)
    }
}

/// Full spectrum by dense diagonalization.
pub fn dense_spectrum(params: &ModelParams, l: &Liouvillian, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    if params.n > opts.dense_max_n {
        return Err(Error::InvalidParams(format!(
            "dense diagonalization is limited to N <= {} (got N = {})",
            opts.dense_max_n, params.n
        )));
    }
    let d = l.dim();
    let evd = l
        .to_dense()
        .eigen()
        .map_err(|e| Error::Eigensolver(format!("dense Liouvillian: {e:?}")))?;
    let mu: Vec<Complex64> = evd.S().column_vector().iter().copied().collect();
    let lambdas: Vec<Complex64> = mu.iter().map(|z| -z).collect();

    let steady_idx = (0..lambdas.len())
        .min_by(|&a, &b| lambdas[a].norm().total_cmp(&lambdas[b].norm()))
        .expect("nonempty spectrum");
    let null_count = lambdas.iter().filter(|z| z.norm() < opts.tol).count();
    let steady_col: Vec<Complex64> = evd.U().col(steady_idx).iter().copied().collect();
    let steady_vec = normalized_state(&steady_col, d)?;

    let gap_idx = (0..lambdas.len())
        .filter(|&i| i != steady_idx)
        .min_by(|&a, &b| {
            lambdas[a]
                .re
                .total_cmp(&lambdas[b].re)
                .then(lambdas[a].im.abs().total_cmp(&lambdas[b].im.abs()))
        })
        .ok_or_else(|| Error::Eigensolver("spectrum has a single eigenvalue".into()))?;
    let gap_eigenvalue = lambdas[gap_idx];
    let gap_vec: Vec<Complex64> = evd.U().col(gap_idx).iter().copied().collect();
    let gap_residual = residual(l, &gap_vec, gap_eigenvalue);

    let band_edges = slow_band(&lambdas, steady_idx, gap_eigenvalue, params.g, opts.tol);
    let mut eigenvalues = lambdas;
    sort_spectrum(&mut eigenvalues);
    debug!(
        "dense spectrum N={} u={} g={}: gap {:.6e}, {} null eigenvalues",
        params.n, params.u, params.g, gap_eigenvalue.re, null_count
    );
    Ok(SpectrumResult {
        params: *params,
        eigenvalues,
        gap_eigenvalue,
        steady_deviation: steady_deviation(&steady_vec),
        steady_vec,
        null_count,
        band_edges,
        dense: true,
        gap_residual,
    })
}

/// Stationary state and gap only, by shift-invert Arnoldi around the gap
/// estimate of the reduced model.
fn iterative_spectrum(params: &ModelParams, l: &Liouvillian, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    let d = l.dim();
    let estimate = match params.t_star() {
        Some(ts) => ReducedPropagator::new(params.n)?.gap() / ts,
        None => {
            return Err(Error::InvalidParams(
                "iterative gap search needs u > 0 and g > 0".into(),
            ))
        }
    };
    let gap = arnoldi::gap_by_shift_invert(l, -estimate, &opts.arnoldi)?;
    let steady = arnoldi::steady_by_inverse_iteration(l, 1e-3 * estimate, &opts.arnoldi)?;
    let steady_vec = normalized_state(&steady.vector, d)?;
    let mut eigenvalues = vec![Complex64::new(0.0, 0.0), gap.lambda];
    if gap.lambda.im != 0.0 {
        eigenvalues.push(gap.lambda.conj());
    }
    sort_spectrum(&mut eigenvalues);
    Ok(SpectrumResult {
        params: *params,
        eigenvalues,
        gap_eigenvalue: gap.lambda,
        steady_deviation: steady_deviation(&steady_vec),
        steady_vec,
        null_count: usize::from(steady.lambda.norm() < opts.tol),
        band_edges: None,
        dense: false,
        gap_residual: gap.residual,
    })
}

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn normalized_state(v: &[Complex64], dim: usize) -> Result<DensityMatrix> {
    let mut rho = unvectorize(v, dim)?;
    let tr = rho.trace();
    if tr.norm() < 1e-300 {
        return Err(Error::Eigensolver("stationary eigenvector has zero trace".into()));
    }
    for z in rho.as_mut_slice() {
        *z /= tr;
    }
    Ok(rho)
}

fn steady_deviation(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    rho.max_abs_diff(&DensityMatrix::maximally_mixed(d))
}

fn residual(l: &Liouvillian, x: &[Complex64], lambda: Complex64) -> f64 {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    l.apply(x, &mut y);
    let num: f64 = y
        .iter()
        .zip(x)
        .map(|(a, b)| (a + lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

fn slow_band(
    lambdas: &[Complex64],
    steady_idx: usize,
    gap: Complex64,
    g: f64,
    tol: f64,
) -> Option<(f64, f64)> {
    let same = |z: Complex64, w: Complex64| (z - w).norm() <= tol.max(1e-9 * w.norm());
    let band: Vec<f64> = lambdas
        .iter()
        .enumerate()
        .filter(|&(i, z)| {
            i != steady_idx && z.re < 0.5 * g && !same(*z, gap) && !same(*z, gap.conj())
        })
        .map(|(_, z)| z.re)
        .collect();
    if band.is_empty() {
        return None;
    }
    let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// Fit `gap ~ x^p` to `(x, gap)` pairs, with `x` either N or u.
pub fn fit_gap_scaling(points: &[(f64, f64)]) -> Result<FitReport> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "gap fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    fit_loglog(&xs, &ys, 4)
}

/// Exact propagation `rho(t) = exp(M t) rho(0)` through the eigendecomposition
/// of the dense Liouvillian. Meant for small N.
pub struct SpectralPropagator {
    dim: usize,
    mu: Vec<Complex64>,
    modes: Mat<Complex64>,
    lu: faer::linalg::solvers::PartialPivLu<Complex64>,
}

impl SpectralPropagator {
    pub fn new(params: &ModelParams) -> Result<Self> {
        if params.n > DENSE_MAX_N {
            return Err(Error::InvalidParams(format!(
                "spectral propagation is limited to N <= {DENSE_MAX_N}"
            )));
        }
        let l = build_liouvillian(params)?;
        let evd = l
            .to_dense()
            .eigen()
            .map_err(|e| Error::Eigensolver(format!("dense Liouvillian: {e:?}")))?;
        let modes = evd.U().to_owned();
        let lu = modes.partial_piv_lu();
        Ok(SpectralPropagator {
            dim: l.dim(),
            mu: evd.S().column_vector().iter().copied().collect(),
            modes,
            lu,
        })
    }

    pub fn propagate(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho0.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rho0.dim(),
            });
        }
        let v = vectorize(rho0);
        let n = v.len();
        let mut c = Mat::<Complex64>::from_fn(n, 1, |i, _| v[i]);
        self.lu.solve_in_place(c.as_mut());
        for (i, mu) in self.mu.iter().enumerate() {
            c[(i, 0)] *= (mu * t).exp();
        }
        let out = &self.modes * &c;
        let x: Vec<Complex64> = (0..n).map(|i| out[(i, 0)]).collect();
        unvectorize(&x, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::master_rhs;

    #[test]
    fn sparsity_pattern() {
        let p = ModelParams::new(6, 3.0, 1.0).unwrap();
        let l = build_liouvillian(&p).unwrap();
        for r in 0..l.size() {
            assert!(l.row(r).count() <= 5);
        }
    }

    #[test]
    fn matches_rhs_on_basis_elements() {
        let p = ModelParams::new(4, 2.0, 0.7).unwrap();
        let l = build_liouvillian(&p).unwrap();
        let d = p.dim();
        for n in 0..d {
            for m in 0..d {
                let mut rho = DensityMatrix::zeros(d);
                rho[(n, m)] = Complex64::new(1.0, 0.0);
                let expected = vectorize(&master_rhs(&p, &rho).unwrap());
                let mut got = vec![Complex64::new(0.0, 0.0); d * d];
                l.apply(&vectorize(&rho), &mut got);
                for (a, b) in got.iter().zip(&expected) {
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn vectorization_round_trip() {
        let rho = DensityMatrix::from_fn(3, |r, c| Complex64::new(r as f64, c as f64));
        let v = vectorize(&rho);
        assert_eq!(v[1], Complex64::new(1.0, 0.0));
        assert_eq!(v[3], Complex64::new(0.0, 1.0));
        assert_eq!(unvectorize(&v, 3).unwrap(), rho);
    }

    #[test]
    fn gap_fit_on_synthetic_laws() {
        let inv: Vec<(f64, f64)> = [8.0, 12.0, 16.0, 24.0].iter().map(|n| (*n, 3.0 / (n * n))).collect();
        let f = fit_gap_scaling(&inv).unwrap();
        assert!((f.exponent + 2.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = [8.0, 12.0, 16.0, 24.0].iter().map(|n| (*n, 0.4)).collect();
        assert!(fit_gap_scaling(&flat).unwrap().exponent.abs() < 1e-12);
        assert!(fit_gap_scaling(&inv[..3]).is_err());
        let same = [(8.0, 1.0), (8.0, 2.0), (8.0, 3.0), (8.0, 4.0)];
        assert!(fit_gap_scaling(&same).is_err());
    }

    #[test]
    fn csv_header() {
        let p = ModelParams::new(2, 1.0, 1.0).unwrap();
        let s = spectrum(&p).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("re_lambda,im_lambda\n"));
        assert_eq!(text.lines().count(), 10);
    }
}
