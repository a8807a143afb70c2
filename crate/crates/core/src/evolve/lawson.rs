//! Dormand-Prince 5(4) in integrating-factor (Lawson) form.
//!
//! The generator splits into an entrywise part `L0`, with rate
//! `-i (E_n - E_m) - g (n-m)^2` on `rho_{nm}`, and the tunnelling commutator.
//! `L0` carries both stiff scales (interaction energies up to `u N^2 / 4` and
//! dephasing up to `g N^2`), so it is integrated exactly: each stage is
//!
//! ```text
//! Y_i = e^{L0 c_i h} y + h sum_j a_ij e^{L0 (c_i - c_j) h} hop(Y_j)
//! ```
//!
//! and only the tunnelling part, with norm `~ 2N`, limits the step. All
//! exponent arguments are nonnegative multiples of `h`, so every factor is a
//! contraction. For `u = g = 0` this is the plain Dormand-Prince pair.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::Generator;

const STAGES: usize = 7;

const C: [f64; STAGES] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; STAGES] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// 5th-order weights minus embedded 4th-order weights.
const E: [f64; STAGES] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// `e^{L0 a}` in separable form: `phase[n] conj(phase[m]) damp[|n-m|]`.
#[derive(Clone)]
struct Factor {
    phase: Vec<Complex64>,
    damp: Vec<f64>,
}

impl Factor {
    fn new(dim: usize) -> Self {
        Factor {
            phase: vec![Complex64::new(1.0, 0.0); dim],
            damp: vec![1.0; dim],
        }
    }

    fn set(&mut self, energies: &[f64], g: f64, a: f64) {
        for (p, e) in self.phase.iter_mut().zip(energies) {
            *p = Complex64::from_polar(1.0, -e * a);
        }
        for (k, d) in self.damp.iter_mut().enumerate() {
            let kf = k as f64;
            *d = (-g * kf * kf * a).exp();
        }
    }

    #[inline]
    fn at(&self, n: usize, m: usize) -> Complex64 {
        let k = n.abs_diff(m);
        self.phase[n] * self.phase[m].conj() * self.damp[k]
    }
}

/// Integration statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub last_step: f64,
}

pub(crate) struct LawsonDp5<'a> {
    gen: &'a Generator,
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
    h: f64,
    k: Vec<Vec<Complex64>>,
    stage: Vec<Complex64>,
    next: Vec<Complex64>,
    factors: Vec<Vec<Factor>>,
    fsal_valid: bool,
    pub stats: StepStats,
}

impl<'a> LawsonDp5<'a> {
    pub fn new(gen: &'a Generator, rel_tol: f64, abs_tol: f64, max_step: Option<f64>) -> Self {
        let d = gen.dim();
        let len = d * d;
        let factors = (0..STAGES)
            .map(|i| (0..i).map(|_| Factor::new(d)).collect())
            .collect();
        LawsonDp5 {
            gen,
            rel_tol,
            abs_tol,
            max_step: max_step.unwrap_or(f64::INFINITY),
            h: 0.0,
            k: vec![vec![Complex64::new(0.0, 0.0); len]; STAGES],
            stage: vec![Complex64::new(0.0, 0.0); len],
            next: vec![Complex64::new(0.0, 0.0); len],
            factors,
            fsal_valid: false,
            stats: StepStats::default(),
        }
    }

    fn error_norm(&self, y: &[Complex64], y_new: &[Complex64], err: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for ((a, b), e) in y.iter().zip(y_new).zip(err) {
            let sc = self.abs_tol + self.rel_tol * a.norm().max(b.norm());
            acc += (e.norm() / sc).powi(2);
        }
        (acc / y.len() as f64).sqrt()
    }

    fn initial_step(&mut self, y: &[Complex64]) -> f64 {
        let gen = self.gen;
        gen.hopping_into(y, &mut self.k[0]);
        let scale = |v: &[Complex64], base: &[Complex64]| {
            let s: f64 = v
                .iter()
                .zip(base)
                .map(|(x, b)| (x.norm() / (self.abs_tol + self.rel_tol * b.norm())).powi(2))
                .sum();
            (s / v.len() as f64).sqrt()
        };
        let d0 = scale(y, y);
        let d1 = scale(&self.k[0], y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(self.max_step);
        for (s, (yy, kk)) in self.stage.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *s = yy + h0 * kk;
        }
        gen.hopping_into(&self.stage, &mut self.next);
        let diff: Vec<Complex64> = self
            .next
            .iter()
            .zip(&self.k[0])
            .map(|(a, b)| (a - b) / h0)
            .collect();
        let d2 = scale(&diff, y);
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        self.fsal_valid = true;
        (100.0 * h0).min(h1).min(self.max_step)
    }

    /// Take one trial step of size `h`; returns the error norm, leaving the
    /// candidate solution in `self.next`.
    fn trial(&mut self, y: &[Complex64], h: f64) -> f64 {
        let gen = self.gen;
        let d = gen.dim();
        let energies = gen.energies();
        let g = gen.params().g;
        for i in 1..STAGES {
            for j in 0..i {
                self.factors[i][j].set(energies, g, (C[i] - C[j]) * h);
            }
        }
        if !self.fsal_valid {
            gen.hopping_into(y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        for i in 1..STAGES {
            let fac = &self.factors[i];
            let out = if i == STAGES - 1 { &mut self.next } else { &mut self.stage };
            for n in 0..d {
                for m in 0..d {
                    let e = n * d + m;
                    let mut acc = fac[0].at(n, m) * y[e];
                    for j in 0..i {
                        let a = A[i][j];
                        if a != 0.0 {
                            acc += (h * a) * fac[j].at(n, m) * self.k[j][e];
                        }
                    }
                    out[e] = acc;
                }
            }
            if i == STAGES - 1 {
                gen.hopping_into(&self.next, &mut self.k[i]);
            } else {
                gen.hopping_into(&self.stage, &mut self.k[i]);
            }
        }
        // error estimate, propagated to the end of the step
        let fac = &self.factors[STAGES - 1];
        let mut err = std::mem::take(&mut self.stage);
        for n in 0..d {
            for m in 0..d {
                let e = n * d + m;
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..STAGES {
                    if E[j] != 0.0 {
                        let f = if j < STAGES - 1 {
                            fac[j].at(n, m)
                        } else {
                            Complex64::new(1.0, 0.0)
                        };
                        acc += (h * E[j]) * f * self.k[j][e];
                    }
                }
                err[e] = acc;
            }
        }
        let norm = self.error_norm(y, &self.next, &err);
        self.stage = err;
        norm
    }

    /// Advance `y` from `*t` to exactly `t_end`.
    pub fn advance_to(
        &mut self,
        y: &mut Vec<Complex64>,
        t: &mut f64,
        t_end: f64,
        mut after_step: impl FnMut(&mut Vec<Complex64>) -> bool,
    ) -> Result<()> {
        if self.h == 0.0 {
            self.h = self.initial_step(y);
        }
        while *t < t_end {
            let remaining = t_end - *t;
            let clipped = self.h >= remaining;
            let h = if clipped { remaining } else { self.h };
            let err = self.trial(y, h);
            if err.is_finite() && err <= 1.0 {
                *t = if clipped { t_end } else { *t + h };
                std::mem::swap(y, &mut self.next);
                // FSAL: the last stage derivative is hop(y_{n+1})
                self.k.swap(0, STAGES - 1);
                self.stats.accepted += 1;
                self.stats.last_step = h;
                if after_step(y) {
                    self.fsal_valid = false;
                }
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                // a step shortened only to land on t_end should not shrink h
                let proposed = (h * fac).min(self.max_step);
                self.h = if clipped { self.h.max(proposed) } else { proposed };
            } else {
                self.stats.rejected += 1;
                let fac = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
                } else {
                    FAC_MIN
                };
                self.h = h * fac;
                if self.h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t: *t, h: self.h });
                }
            }
        }
        Ok(())
    }
}
