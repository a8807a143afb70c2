//! Segmentation of a decay curve into exponential and power-law regimes.
//!
//! Local slopes are taken between consecutive samples: the log-derivative
//! `alpha = d ln y / d ln t` and the rate `r = -d ln y / dt`. A sample is
//! power-law-like when `alpha` is flat over a sliding window of fixed width in
//! `log10 t`, and exponential when `r` is. Windows where neither is flat still
//! count as exponential if a straight line in `(t, ln y)` leaves an RMS residual
//! below `flatness` times the fitted change of `ln y` across the window, and
//! below that of a line in `(ln t, ln y)`; this tolerates small oscillations
//! riding on the decay. Runs of equal labels
//! longer than the window become regimes, which are then refitted on the raw
//! samples.

use serde::{Deserialize, Serialize};

use super::fit::{fit_line, fit_loglog};
use crate::error::{Error, Result};
use crate::evolve::ObservableSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimeOptions {
    /// Sliding window width in decades of `t`.
    pub window_decades: f64,
    /// Largest relative spread of the local exponent (or rate) within a window.
    pub flatness: f64,
    /// Samples below `floor * max(y)` are discarded.
    pub floor: f64,
}

impl Default for RegimeOptions {
    fn default() -> Self {
        RegimeOptions {
            window_decades: 0.5,
            flatness: 0.05,
            floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    /// `y ~ exp(-rate t)`.
    Exponential,
    /// `y ~ t^exponent`.
    PowerLaw,
}

impl RegimeKind {
    pub fn label(self) -> &'static str {
        match self {
            RegimeKind::Exponential => "exponential",
            RegimeKind::PowerLaw => "power-law",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub kind: RegimeKind,
    pub window: (f64, f64),
    /// Decay rate for exponential regimes, exponent for power-law ones.
    pub value: f64,
    pub value_err: f64,
}

/// Detect regimes of `y(t)`; `t` must be increasing and positive.
pub fn detect_regimes(ts: &[f64], ys: &[f64], opts: &RegimeOptions) -> Result<Vec<Regime>> {
    if ts.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: ts.len(),
            got: ys.len(),
        });
    }
    if !(opts.window_decades > 0.0 && opts.flatness > 0.0) {
        return Err(Error::InvalidParams("invalid regime options".into()));
    }
    let ymax = ys.iter().copied().fold(0.0f64, f64::max);
    let (t, y): (Vec<f64>, Vec<f64>) = ts
        .iter()
        .zip(ys)
        .filter(|(t, y)| **t > 0.0 && **y > opts.floor * ymax)
        .map(|(t, y)| (*t, *y))
        .unzip();
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("times must be strictly increasing".into()));
    }
    let span = if t.len() >= 2 {
        (t[t.len() - 1] / t[0]).log10()
    } else {
        0.0
    };
    if t.len() < 8 || span < opts.window_decades {
        return Err(Error::InsufficientData(format!(
            "series too short for regime detection ({} usable samples over {span:.2} decades)",
            t.len()
        )));
    }

    let m = t.len() - 1;
    let mid: Vec<f64> = (0..m).map(|i| (t[i] * t[i + 1]).sqrt().log10()).collect();
    let alpha: Vec<f64> = (0..m)
        .map(|i| (y[i + 1] / y[i]).ln() / (t[i + 1] / t[i]).ln())
        .collect();
    let rate: Vec<f64> = (0..m)
        .map(|i| -(y[i + 1] / y[i]).ln() / (t[i + 1] - t[i]))
        .collect();

    let half = 0.5 * opts.window_decades;
    let labels: Vec<Option<RegimeKind>> = (0..m)
        .map(|j| {
            let idx: Vec<usize> = (0..m).filter(|&i| (mid[i] - mid[j]).abs() <= half).collect();
            if idx.len() < 3 {
                return None;
            }
            let sa = relative_spread(idx.iter().map(|&i| alpha[i]));
            let sr = relative_spread(idx.iter().map(|&i| rate[i]));
            match (sa <= opts.flatness, sr <= opts.flatness) {
                (true, true) if sr < sa => Some(RegimeKind::Exponential),
                (true, _) => Some(RegimeKind::PowerLaw),
                (false, true) => Some(RegimeKind::Exponential),
                (false, false) => {
                    let (lo, hi) = (idx[0], idx[idx.len() - 1] + 1);
                    let lt: Vec<f64> = t[lo..=hi].iter().map(|v| v.ln()).collect();
                    let q_exp = fit_quality(&t[lo..=hi], &y[lo..=hi])?;
                    let q_pow = fit_quality(&lt, &y[lo..=hi]).unwrap_or(f64::INFINITY);
                    (q_exp <= opts.flatness && q_exp < q_pow).then_some(RegimeKind::Exponential)
                }
            }
        })
        .collect();

    // runs of equal labels, in midpoint indices
    let mut runs: Vec<(RegimeKind, usize, usize)> = Vec::new();
    let mut j = 0;
    while j < m {
        if let Some(kind) = labels[j] {
            let start = j;
            while j + 1 < m && labels[j + 1] == Some(kind) {
                j += 1;
            }
            if mid[j] - mid[start] >= opts.window_decades {
                match runs.last_mut() {
                    Some(last) if last.0 == kind => last.2 = j,
                    _ => runs.push((kind, start, j)),
                }
            }
        }
        j += 1;
    }

    runs.into_iter()
        .map(|(kind, a, b)| {
            // midpoint j lies between samples j and j+1
            let (lo, hi) = (a, b + 1);
            let tw = &t[lo..=hi];
            let yw = &y[lo..=hi];
            let (value, value_err) = match kind {
                RegimeKind::PowerLaw => {
                    let f = fit_loglog(tw, yw, 2)?;
                    (f.exponent, f.exponent_err)
                }
                RegimeKind::Exponential => {
                    let ly: Vec<f64> = yw.iter().map(|v| v.ln()).collect();
                    let f = fit_line(tw, &ly)?;
                    (-f.slope, f.slope_err)
                }
            };
            Ok(Regime {
                kind,
                window: (t[lo], t[hi]),
                value,
                value_err,
            })
        })
        .collect()
}

/// Regimes of the coherence, against `gamma t` (so rates are in units of gamma)
/// or against `t` when there is no dephasing.
pub fn detect_coherence_regimes(series: &ObservableSeries, opts: &RegimeOptions) -> Result<Vec<Regime>> {
    let ts: Vec<f64> = series
        .samples
        .iter()
        .map(|s| if series.params.g > 0.0 { s.gamma_t } else { s.t })
        .collect();
    detect_regimes(&ts, &series.coherence(), opts)
}

/// RMS residual of `ln y` against a line in `x`, relative to the fitted drop of
/// `ln y` over the span; `None` unless the fit decays.
fn fit_quality(t: &[f64], y: &[f64]) -> Option<f64> {
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let f = fit_line(t, &ly).ok()?;
    let drop = -f.slope * (t[t.len() - 1] - t[0]);
    (drop > 0.0).then(|| f.residual / drop)
}

fn relative_spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
        n += 1;
    }
    let mean = (sum / n as f64).abs();
    if mean == 0.0 {
        f64::INFINITY
    } else {
        (hi - lo) / mean
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::log_grid;

    #[test]
    fn pure_exponential() {
        let t = log_grid(1e-2, 25.0, 25);
        let y: Vec<f64> = t.iter().map(|t| 4.0 * (-1.3 * t).exp()).collect();
        let r = detect_regimes(&t, &y, &RegimeOptions::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, RegimeKind::Exponential);
        assert!((r[0].value - 1.3).abs() < 1e-9);
    }

    #[test]
    fn pure_power_law() {
        let t = log_grid(1e-3, 1e3, 25);
        let y: Vec<f64> = t.iter().map(|t| 2.0 * t.powf(-0.7)).collect();
        let r = detect_regimes(&t, &y, &RegimeOptions::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].kind, RegimeKind::PowerLaw);
        assert!((r[0].value + 0.7).abs() < 1e-9);
    }

    #[test]
    fn three_piece_curve() {
        // exp for t < 1, t^-1/2 to t = 1e4, then an exponential tail, all continuous
        let t = log_grid(1e-2, 1e5, 25);
        let tail = 2e-4;
        let y: Vec<f64> = t
            .iter()
            .map(|&t| {
                if t < 1.0 {
                    (-(t - 1.0)).exp()
                } else if t < 1e4 {
                    t.powf(-0.5)
                } else {
                    1e-2 * (-tail * (t - 1e4)).exp()
                }
            })
            .collect();
        let r = detect_regimes(&t, &y, &RegimeOptions::default()).unwrap();
        let kinds: Vec<RegimeKind> = r.iter().map(|g| g.kind).collect();
        assert_eq!(
            kinds,
            [RegimeKind::Exponential, RegimeKind::PowerLaw, RegimeKind::Exponential]
        );
        assert!((r[1].value + 0.5).abs() < 1e-6);
    }

    #[test]
    fn short_series_rejected() {
        let t = [1.0, 2.0, 3.0];
        assert!(detect_regimes(&t, &[1.0, 0.5, 0.2], &RegimeOptions::default()).is_err());
    }
}
