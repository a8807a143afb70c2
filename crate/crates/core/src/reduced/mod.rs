//! Strong-coupling reduced description.
//!
//! For `t >> 1/gamma` and `U >> J, hbar*gamma` the nearest-neighbour coherences
//! `rho_{n,n+1}` relax quickly and follow the populations adiabatically. The
//! populations then obey a conservative nearest-neighbour flux equation in the
//! rescaled time `tau = t/t*`,
//!
//! ```text
//! d rho_nn / d tau = W_{n+1} Delta_n - W_n Delta_{n-1},
//! Delta_n = N^2 (rho_{n+1,n+1} - rho_nn),
//! W_{n+1} = (n+1)(N-n) / (n - N/2 + 1/2)^2,
//! ```
//!
//! with no flux through `n = 0` and `n = N`. In the continuum limit
//! `p(x) = N rho_nn`, `x = n/N - 1/2`, this becomes `p_tau = (D p_x)_x` with
//! `D(x) = 1/(4x^2) - 1` (see [`pde`]).

pub mod analytics;
pub mod pde;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{hopping_amplitude, number_variance};
use crate::params::ModelParams;

/// Weights and time scale of the reduced model for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConstants {
    /// `t* = 2 N^2 u^2 / g`.
    pub t_star: f64,
    /// `weights[n] = W_{n+1}` for `n = 0..N`.
    pub weights: Vec<f64>,
    /// `j_r[n] = sqrt(W_{n+1}) / (2 u N^2)`.
    pub j_r: Vec<f64>,
}

impl ScalingConstants {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let t_star = params.t_star().ok_or_else(|| {
            Error::InvalidParams("the reduced model needs u > 0 and g > 0".into())
        })?;
        let weights = flux_weights(params.n);
        let n2 = (params.n * params.n) as f64;
        let j_r = weights
            .iter()
            .map(|w| w.sqrt() / (2.0 * params.u * n2))
            .collect();
        Ok(ScalingConstants {
            t_star,
            weights,
            j_r,
        })
    }
}

/// `W_{n+1} = (n+1)(N-n) / (n - N/2 + 1/2)^2` for `n = 0..N`.
///
/// The denominator is a nonzero half-integer square for even `N`.
pub fn flux_weights(total: usize) -> Vec<f64> {
    let half = total as f64 / 2.0;
    (0..total)
        .map(|n| {
            let d = n as f64 - half + 0.5;
            ((n + 1) * (total - n)) as f64 / (d * d)
        })
        .collect()
}

/// Populations of the reduced model at rescaled time `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub diag: Vec<f64>,
    pub tau: f64,
}

impl ReducedState {
    pub fn new(diag: Vec<f64>, tau: f64) -> Result<Self> {
        let s = ReducedState { diag, tau };
        s.validate()?;
        Ok(s)
    }

    /// All weight on the balanced configuration `n = N/2`.
    pub fn balanced(total: usize) -> Self {
        let mut diag = vec![0.0; total + 1];
        diag[total / 2] = 1.0;
        ReducedState { diag, tau: 0.0 }
    }

    pub fn uniform(total: usize) -> Self {
        ReducedState {
            diag: vec![1.0 / (total + 1) as f64; total + 1],
            tau: 0.0,
        }
    }

    pub fn total(&self) -> usize {
        self.diag.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.diag.len() < 3 || (self.diag.len() - 1) % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "reduced state of length {} does not describe an even atom number",
                self.diag.len()
            )));
        }
        let sum: f64 = self.diag.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "populations sum to {sum}, expected 1"
            )));
        }
        if let Some(v) = self.diag.iter().find(|v| **v < -1e-12) {
            return Err(Error::InvalidParams(format!("negative population {v}")));
        }
        Ok(())
    }

    /// `Delta_n = N^2 (rho_{n+1,n+1} - rho_nn)`.
    pub fn delta(&self, n: usize) -> f64 {
        let n2 = (self.total() * self.total()) as f64;
        n2 * (self.diag[n + 1] - self.diag[n])
    }
}

/// Right-hand side `d rho_nn / d tau` of the reduced flux equation.
pub fn reduced_rhs(state: &ReducedState, params: &ModelParams) -> Result<Vec<f64>> {
    params.validate()?;
    if state.diag.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: state.diag.len(),
        });
    }
    let w = flux_weights(params.n);
    let mut out = vec![0.0; params.dim()];
    for n in 0..params.n {
        let flux = w[n] * state.delta(n);
        out[n] += flux;
        out[n + 1] -= flux;
    }
    Ok(out)
}

/// Exact propagator of the reduced flux equation.
///
/// The generator is a symmetric tridiagonal matrix (a reversible Markov
/// generator with uniform stationary state), so it is diagonalized once and
/// each propagation is `V exp(Lambda dtau) V^T`. This is unconditionally
/// stable regardless of the `N^4` stiffness near the balanced configuration.
#[derive(Debug, Clone)]
pub struct ReducedPropagator {
    total: usize,
    rates: Vec<f64>,
    modes: Mat<f64>,
}

impl ReducedPropagator {
    pub fn new(total: usize) -> Result<Self> {
        if total < 2 || total % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "atom number N = {total} must be even and at least 2"
            )));
        }
        let d = total + 1;
        let n2 = (total * total) as f64;
        // A = -B^T B with (B p)_i = sqrt(c_i) (p_{i+1} - p_i); the SVD of B is
        // far better conditioned than an eigensolve of A, whose norm grows like N^4.
        let root: Vec<f64> = flux_weights(total).iter().map(|w| (w * n2).sqrt()).collect();
        let b = Mat::<f64>::from_fn(total, d, |r, col| {
            if col == r {
                -root[r]
            } else if col == r + 1 {
                root[r]
            } else {
                0.0
            }
        });
        let svd = b
            .svd()
            .map_err(|e| Error::Eigensolver(format!("reduced generator: {e:?}")))?;
        let sigma = svd.S().column_vector();
        let mut order: Vec<usize> = (0..d).collect();
        let rate = |k: usize| if k < total { -sigma[k] * sigma[k] } else { 0.0 };
        order.sort_by(|&i, &j| rate(i).total_cmp(&rate(j)));
        let v = svd.V();
        let modes = Mat::<f64>::from_fn(d, d, |r, k| v[(r, order[k])]);
        Ok(ReducedPropagator {
            total,
            rates: order.iter().map(|&k| rate(k)).collect(),
            modes,
        })
    }

    /// Relaxation rates in units of `1/t*`, sorted ascending (the last one is 0).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.rates
    }

    /// Smallest nonzero relaxation rate in units of `1/t*`.
    pub fn gap(&self) -> f64 {
        // rates are <= 0, ascending; the stationary mode is last
        -self.rates[self.rates.len() - 2]
    }

    pub fn propagate(&self, diag: &[f64], dtau: f64) -> Vec<f64> {
        let d = self.total + 1;
        let v = &self.modes;
        let mut coef = vec![0.0; d];
        for (k, ck) in coef.iter_mut().enumerate() {
            let proj: f64 = (0..d).map(|r| v[(r, k)] * diag[r]).sum();
            *ck = proj * (self.rates[k].min(0.0) * dtau).exp();
        }
        let mut out: Vec<f64> = (0..d)
            .map(|r| (0..d).map(|k| v[(r, k)] * coef[k]).sum())
            .collect();
        // Rounding leaves O(1e-16) negative dust in far tails; the exact flow is positive.
        for x in &mut out {
            if *x < 0.0 && *x > -1e-12 {
                *x = 0.0;
            }
        }
        out
    }
}

/// Evolve the reduced populations to each time of `tau_grid` (nondecreasing,
/// not earlier than `initial.tau`).
pub fn evolve_reduced(initial: &ReducedState, tau_grid: &[f64]) -> Result<Vec<ReducedState>> {
    initial.validate()?;
    let prop = ReducedPropagator::new(initial.total())?;
    evolve_reduced_with(&prop, initial, tau_grid)
}

pub fn evolve_reduced_with(
    prop: &ReducedPropagator,
    initial: &ReducedState,
    tau_grid: &[f64],
) -> Result<Vec<ReducedState>> {
    let mut prev = initial.tau;
    let mut out = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        if !(tau >= prev) {
            return Err(Error::InvalidParams(format!(
                "tau grid must be nondecreasing from {prev}, got {tau}"
            )));
        }
        prev = tau;
        let diag = prop.propagate(&initial.diag, tau - initial.tau);
        let sum: f64 = diag.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::InvariantViolation {
                t: tau,
                what: "reduced probability drift",
                value: (sum - 1.0).abs(),
                limit: 1e-8,
            });
        }
        out.push(ReducedState { diag, tau });
    }
    Ok(out)
}

/// Adiabatically slaved coherence `rho_{n,n+1}` (row `n`, column `n+1`).
///
/// With the generator `-i[H, rho]` and `<n|H|n+1> = -sqrt((n+1)(N-n))` the
/// stationary coherence is `sqrt((n+1)(N-n)) delta_n / (U a - i gamma)` with
/// `a = N - 2n - 1`; to first order in `gamma/U` this is
/// `sign(a) J_R (1 + i gamma / (a U)) Delta_n`.
pub fn slaved_offdiagonal(state: &ReducedState, params: &ModelParams, n: usize) -> Result<Complex64> {
    let consts = ScalingConstants::new(params)?;
    slaved_with(&consts, state, params, n)
}

fn slaved_with(
    consts: &ScalingConstants,
    state: &ReducedState,
    params: &ModelParams,
    n: usize,
) -> Result<Complex64> {
    if n >= params.n {
        return Err(Error::IndexOutOfRange {
            index: n,
            bound: params.n,
        });
    }
    if state.diag.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: state.diag.len(),
        });
    }
    let a = params.n as f64 - 2.0 * n as f64 - 1.0;
    let mag = consts.j_r[n] * state.delta(n);
    Ok(Complex64::new(a.signum() * mag, mag * params.g / (a.abs() * params.u)))
}

/// All slaved coherences `rho_{n,n+1}`, `n = 0..N`.
pub fn slaved_coherences(state: &ReducedState, params: &ModelParams) -> Result<Vec<Complex64>> {
    let consts = ScalingConstants::new(params)?;
    (0..params.n)
        .map(|n| slaved_with(&consts, state, params, n))
        .collect()
}

/// Observables reconstructed from populations plus slaved nearest-neighbour coherences.
pub fn reduced_observables(
    state: &ReducedState,
    params: &ModelParams,
) -> Result<crate::model::Observables> {
    let z = slaved_coherences(state, params)?;
    let coherence = 2.0
        * z.iter()
            .enumerate()
            .map(|(n, zn)| hopping_amplitude(n, params.n) * zn.re)
            .sum::<f64>();
    let purity = state.diag.iter().map(|p| p * p).sum::<f64>()
        + 2.0 * z.iter().map(|zn| zn.norm_sqr()).sum::<f64>();
    Ok(crate::model::Observables {
        coherence,
        kappa: number_variance(&state.diag),
        balanced: state.diag[params.center()],
        purity,
    })
}
