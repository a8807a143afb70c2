//! Closed-form scaling laws of the short-time (`tau << 1`) diffusion regime.

use crate::params::ModelParams;

/// Gamma(1/4).
pub const GAMMA_QUARTER: f64 = 3.625_609_908_221_908;
/// Gamma(3/4).
pub const GAMMA_THREE_QUARTERS: f64 = 1.225_416_702_465_178;

/// Peak height `sqrt(2)/Gamma(1/4)` of the scaling density at `tau = 1`.
pub fn density_prefactor() -> f64 {
    std::f64::consts::SQRT_2 / GAMMA_QUARTER
}

/// Coefficient of `sqrt(tau)` in `kappa / N^2`, `2 Gamma(3/4) / Gamma(1/4)`.
pub fn kappa_coefficient() -> f64 {
    2.0 * GAMMA_THREE_QUARTERS / GAMMA_QUARTER
}

/// Coefficient of `1/sqrt(gamma t)` in `C / N`, `Gamma(3/4) / (sqrt(2) Gamma(1/4))`.
pub fn coherence_coefficient() -> f64 {
    GAMMA_THREE_QUARTERS / (std::f64::consts::SQRT_2 * GAMMA_QUARTER)
}

/// Self-similar solution `p(x, tau) = sqrt(2)/Gamma(1/4) tau^{-1/4} exp(-x^4 / (4 tau))`.
pub fn analytic_density(x: f64, tau: f64) -> f64 {
    density_prefactor() * tau.powf(-0.25) * (-x.powi(4) / (4.0 * tau)).exp()
}

/// `kappa / N^2` in the power-law regime.
pub fn kappa_scaling(tau: f64) -> f64 {
    kappa_coefficient() * tau.sqrt()
}

/// `C / N` in the power-law regime as a function of physical time `t` (units hbar/J).
pub fn coherence_scaling(params: &ModelParams, t: f64) -> f64 {
    coherence_coefficient() / (params.g * t).sqrt()
}

/// The same law written in rescaled time:
/// `C / N = Gamma(3/4) / (2 Gamma(1/4)) * 1/(u N) * tau^{-1/2}`.
pub fn coherence_scaling_tau(params: &ModelParams, tau: f64) -> f64 {
    GAMMA_THREE_QUARTERS / (2.0 * GAMMA_QUARTER) / (params.u * params.n as f64) / tau.sqrt()
}
