//! Least-squares line and power-law fits.

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} points, need at least 2")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite data in fit".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let spread = xs.iter().fold(0.0f64, |a, x| a.max((x - mx).abs()));
    if sxx == 0.0 || spread <= 1e-12 * mx.abs().max(1.0) {
        return Err(Error::InvalidParams("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = if n > 2 { (n - 2) as f64 } else { 1.0 };
    let s2 = sse / dof;
    let slope_err = (s2 / sxx).sqrt();
    let intercept_err = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_err,
        intercept_err,
        residual: (sse / nf).sqrt(),
        r_squared,
        points: n,
    })
}

/// Power law `y = prefactor * x^exponent` fitted in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    /// Abscissa range actually used.
    pub window: (f64, f64),
    pub exponent: f64,
    pub prefactor: f64,
    pub exponent_err: f64,
    /// Propagated from the intercept error, `prefactor * intercept_err`.
    pub prefactor_err: f64,
    pub r_squared: f64,
    /// RMS residual of `ln y`.
    pub residual: f64,
    pub points: usize,
}

/// Log-log fit over all points, requiring at least `min_points` of them.
pub fn fit_loglog(xs: &[f64], ys: &[f64], min_points: usize) -> Result<FitReport> {
    if xs.len() < min_points {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least {min_points}",
            xs.len()
        )));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0)) {
        return Err(Error::InvalidParams(format!(
            "power-law fit needs positive data, got {v}"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let line = fit_line(&lx, &ly)?;
    let prefactor = line.intercept.exp();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FitReport {
        window: (lo, hi),
        exponent: line.slope,
        prefactor,
        exponent_err: line.slope_err,
        prefactor_err: prefactor * line.intercept_err,
        r_squared: line.r_squared,
        residual: line.residual,
        points: line.points,
    })
}

/// Fit `y ~ x^p` to the samples with `x` in the closed `window`; needs at least 8 of them.
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: (f64, f64)) -> Result<FitReport> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::InvalidParams(format!("invalid fit window {window:?}")));
    }
    let (wx, wy): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, _)| **x >= window.0 && **x <= window.1)
        .map(|(x, y)| (*x, *y))
        .unzip();
    fit_loglog(&wx, &wy, 8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(f.slope_err < 1e-12);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn slope_error_matches_textbook() {
        // residuals (+1, -1, -1, +1) around y = x
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 0.0, 1.0, 4.0];
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14);
        assert!((f.intercept - 0.0).abs() < 1e-14);
        // s^2 = 4/2, sxx = 5
        assert!((f.slope_err - (2.0f64 / 5.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_abscissae_rejected() {
        assert!(fit_line(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_line(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn power_law_window() {
        let xs: Vec<f64> = (0..40).map(|k| 10f64.powf(-5.0 + 0.1 * k as f64)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.sqrt()).collect();
        let f = fit_power_law(&xs, &ys, (1e-4, 1e-2)).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-11);
        assert!(f.window.0 >= 1e-4 && f.window.1 <= 1e-2);
        assert!(fit_power_law(&xs, &ys, (1e-4, 2e-4)).is_err());
        let mut bad = ys.clone();
        bad[15] = -1.0;
        assert!(fit_power_law(&xs, &bad, (1e-4, 1e-2)).is_err());
    }
}
