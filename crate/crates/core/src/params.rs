//! Physical configuration of the dimer.
//!
//! Units: hbar = 1 and J = 1, so `u = U/J`, `g = hbar*gamma/J` and times are
//! measured in hbar/J. The dimensionless combinations `gamma*t` and
//! `tau = t/t_star` are derived here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atom number, interaction and dephasing rate of the two-well system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Total atom number; must be even and at least 2.
    pub n: usize,
    /// Interaction strength U/J.
    pub u: f64,
    /// Dephasing rate hbar*gamma/J.
    pub g: f64,
}

impl ModelParams {
    pub fn new(n: usize, u: f64, g: f64) -> Result<Self> {
        let p = ModelParams { n, u, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "atom number N = {} must be at least 2",
                self.n
            )));
        }
        if self.n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "atom number N = {} must be even",
                self.n
            )));
        }
        if !(self.u.is_finite() && self.u >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "interaction u = {} must be finite and >= 0",
                self.u
            )));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "dephasing rate g = {} must be finite and >= 0",
                self.g
            )));
        }
        Ok(())
    }

    /// Dimension of the single-particle-number Fock space, N + 1.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// Balanced Fock index N/2.
    #[inline]
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Long time scale `t* = 2 N^2 u^2 / g` in units of hbar/J.
    ///
    /// `None` when either `u` or `g` vanishes, where the reduced description
    /// has no meaning.
    pub fn t_star(&self) -> Option<f64> {
        if self.u > 0.0 && self.g > 0.0 {
            let n = self.n as f64;
            Some(2.0 * n * n * self.u * self.u / self.g)
        } else {
            None
        }
    }

    /// Rescaled time `t / t*`, NaN when `t*` is undefined.
    pub fn tau_of(&self, t: f64) -> f64 {
        self.t_star().map_or(f64::NAN, |ts| t / ts)
    }

    pub fn gamma_t(&self, t: f64) -> f64 {
        self.g * t
    }
}

/// Label of a Fock state `|n, N - n>` by its left-well occupation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockIndex(usize);

impl FockIndex {
    pub fn new(n: usize, params: &ModelParams) -> Result<Self> {
        if n > params.n {
            return Err(Error::IndexOutOfRange {
                index: n,
                bound: params.n + 1,
            });
        }
        Ok(FockIndex(n))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// The mirror state `N - n` (left and right wells exchanged).
    pub fn mirror(self, params: &ModelParams) -> Self {
        FockIndex(params.n - self.0)
    }
}

/// Numerical tolerances for the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub trace: f64,
    pub hermiticity: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trace: 1e-9,
            hermiticity: 1e-10,
            psd: 1e-8,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_small_n() {
        assert!(ModelParams::new(3, 1.0, 1.0).is_err());
        assert!(ModelParams::new(0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1, 1.0, 1.0).is_err());
        assert!(ModelParams::new(2, 1.0, 1.0).is_ok());
    }

    #[test]
    fn rejects_negative_couplings() {
        assert!(ModelParams::new(4, -1.0, 1.0).is_err());
        assert!(ModelParams::new(4, 1.0, -0.5).is_err());
        assert!(ModelParams::new(4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn t_star_definition() {
        let p = ModelParams::new(80, 20.0, 1.0).unwrap();
        assert_eq!(p.t_star(), Some(2.0 * 6400.0 * 400.0));
        assert!(ModelParams::new(80, 0.0, 1.0).unwrap().t_star().is_none());
        assert!(p.tau_of(1.0) > 0.0);
    }

    #[test]
    fn fock_index_bounds() {
        let p = ModelParams::new(4, 1.0, 1.0).unwrap();
        assert!(FockIndex::new(5, &p).is_err());
        let i = FockIndex::new(1, &p).unwrap();
        assert_eq!(i.mirror(&p).get(), 3);
    }
}
