//! Finite-volume solver for `p_tau = (D(x) p_x)_x` on `[-1/2, 1/2]`.
//!
//! Cells are centred at `x_k = -1/2 + (k + 1/2) h`, `h = 1/K`, with `K` even so
//! that `x = 0`, where `D` diverges, is a cell face. The face coefficient there
//! is capped at `D(h/2)`. Both domain ends carry zero flux. Time stepping is
//! backward Euler on a geometric sub-grid: the system matrix is an M-matrix
//! whose columns sum to one, so positivity and mass are preserved exactly.

use crate::error::{Error, Result};

/// `D(x) = 1/(4 x^2) - 1`. Infinite at `x = 0`; callers stay off that point.
pub fn diffusion_coefficient(x: f64) -> f64 {
    1.0 / (4.0 * x * x) - 1.0
}

/// Cell-centred density on the staggered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDensity {
    pub values: Vec<f64>,
    pub tau: f64,
}

impl ProbabilityDensity {
    /// Uniform density `p = 1`.
    pub fn uniform(cells: usize) -> Result<Self> {
        check_cells(cells)?;
        Ok(ProbabilityDensity {
            values: vec![1.0; cells],
            tau: 0.0,
        })
    }

    /// Box of width `2h` straddling `x = 0`.
    pub fn central_box(cells: usize) -> Result<Self> {
        check_cells(cells)?;
        let mut values = vec![0.0; cells];
        let h = 1.0 / cells as f64;
        values[cells / 2 - 1] = 0.5 / h;
        values[cells / 2] = 0.5 / h;
        Ok(ProbabilityDensity { values, tau: 0.0 })
    }

    /// Sample a function at the cell centres.
    pub fn from_fn(cells: usize, tau: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_cells(cells)?;
        let values = (0..cells).map(|k| f(cell_center(k, cells))).collect();
        Ok(ProbabilityDensity { values, tau })
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        let k = self.cells();
        (0..k).map(move |i| cell_center(i, k))
    }

    /// `h * sum p_k`.
    pub fn mass(&self) -> f64 {
        self.spacing() * self.values.iter().sum::<f64>()
    }

    /// `<x^2> = h * sum x_k^2 p_k`.
    pub fn second_moment(&self) -> f64 {
        let h = self.spacing();
        self.centers()
            .zip(&self.values)
            .map(|(x, p)| x * x * p)
            .sum::<f64>()
            * h
    }

    /// `h * sum |p_k - f(x_k)|`.
    pub fn l1_distance(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.spacing();
        self.centers()
            .zip(&self.values)
            .map(|(x, p)| (p - f(x)).abs())
            .sum::<f64>()
            * h
    }

    /// `d<x^2>/dtau = -2 int x D(x) p_x dx`, evaluated from face fluxes.
    pub fn second_moment_rate(&self) -> f64 {
        let k = self.cells();
        let d = face_coefficients(k);
        (0..k - 1)
            .map(|f| {
                let xf = face_position(f, k);
                -2.0 * xf * d[f] * (self.values[f + 1] - self.values[f])
            })
            .sum()
    }

    /// Linear interpolation at `x`, clamped to the end cells.
    pub fn interpolate(&self, x: f64) -> f64 {
        let k = self.cells();
        let s = (x + 0.5) * k as f64 - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= (k - 1) as f64 {
            return self.values[k - 1];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    fn validate(&self) -> Result<()> {
        check_cells(self.cells())?;
        let m = self.mass();
        if (m - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "density integrates to {m}, expected 1"
            )));
        }
        if let Some(v) = self.values.iter().find(|v| **v < -1e-10) {
            return Err(Error::InvalidParams(format!("negative density {v}")));
        }
        Ok(())
    }
}

fn check_cells(cells: usize) -> Result<()> {
    if cells < 4 || cells % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "cell count K = {cells} must be even and at least 4"
        )));
    }
    Ok(())
}

#[inline]
fn cell_center(k: usize, cells: usize) -> f64 {
    -0.5 + (k as f64 + 0.5) / cells as f64
}

#[inline]
fn face_position(f: usize, cells: usize) -> f64 {
    -0.5 + (f + 1) as f64 / cells as f64
}

/// `D` at the `K - 1` interior faces, capped at the central face.
fn face_coefficients(cells: usize) -> Vec<f64> {
    let h = 1.0 / cells as f64;
    let cap = diffusion_coefficient(0.5 * h);
    (0..cells - 1)
        .map(|f| {
            if f + 1 == cells / 2 {
                cap
            } else {
                diffusion_coefficient(face_position(f, cells))
            }
        })
        .collect()
}

/// Time-stepping controls for [`evolve_pde`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeConfig {
    /// Backward-Euler steps per decade of `tau`.
    pub steps_per_decade: usize,
    /// First step size when starting from `tau = 0`.
    pub first_step: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            steps_per_decade: 2000,
            first_step: 1e-12,
        }
    }
}

/// Solve from `initial.tau` to every time of `tau_grid` (nondecreasing).
pub fn evolve_pde(
    initial: &ProbabilityDensity,
    tau_grid: &[f64],
    config: &PdeConfig,
) -> Result<Vec<ProbabilityDensity>> {
    initial.validate()?;
    if config.steps_per_decade == 0 || !(config.first_step > 0.0) {
        return Err(Error::InvalidParams("invalid PDE step controls".into()));
    }
    let k = initial.cells();
    let h = initial.spacing();
    let coupling: Vec<f64> = face_coefficients(k).iter().map(|d| d / (h * h)).collect();
    let ratio = 10f64.powf(1.0 / config.steps_per_decade as f64);

    let mut p = initial.values.clone();
    let mut tau = initial.tau;
    let mut solver = Tridiagonal::new(k);
    let mut out = Vec::with_capacity(tau_grid.len());
    for &target in tau_grid {
        if !(target >= tau) {
            return Err(Error::InvalidParams(format!(
                "tau grid must be nondecreasing from {tau}, got {target}"
            )));
        }
        while tau < target {
            let proposal = if tau <= 0.0 {
                config.first_step
            } else {
                (tau * ratio).max(tau + config.first_step)
            };
            let next = proposal.min(target);
            solver.backward_euler(&coupling, next - tau, &mut p);
            tau = next;
        }
        if let Some(v) = p.iter().find(|v| **v < -1e-10) {
            return Err(Error::InvariantViolation {
                t: tau,
                what: "negative density",
                value: -v,
                limit: 1e-10,
            });
        }
        out.push(ProbabilityDensity {
            values: p.clone(),
            tau,
        });
    }
    Ok(out)
}

/// Scratch space for the Thomas algorithm on `(I - dt A) p_new = p`.
struct Tridiagonal {
    c_prime: Vec<f64>,
    d_prime: Vec<f64>,
}

impl Tridiagonal {
    fn new(n: usize) -> Self {
        Tridiagonal {
            c_prime: vec![0.0; n],
            d_prime: vec![0.0; n],
        }
    }

    fn backward_euler(&mut self, coupling: &[f64], dt: f64, p: &mut [f64]) {
        let n = p.len();
        // row k: -dt c_{k-1} p_{k-1} + (1 + dt (c_{k-1} + c_k)) p_k - dt c_k p_{k+1}
        let lower = |k: usize| if k > 0 { -dt * coupling[k - 1] } else { 0.0 };
        let upper = |k: usize| if k + 1 < n { -dt * coupling[k] } else { 0.0 };
        let diag = |k: usize| 1.0 - lower(k) - upper(k);
        self.c_prime[0] = upper(0) / diag(0);
        self.d_prime[0] = p[0] / diag(0);
        for k in 1..n {
            let m = diag(k) - lower(k) * self.c_prime[k - 1];
            self.c_prime[k] = upper(k) / m;
            self.d_prime[k] = (p[k] - lower(k) * self.d_prime[k - 1]) / m;
        }
        p[n - 1] = self.d_prime[n - 1];
        for k in (0..n - 1).rev() {
            p[k] = self.d_prime[k] - self.c_prime[k] * p[k + 1];
        }
    }
}
