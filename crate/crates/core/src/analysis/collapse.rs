//! Data collapse of rescaled observables against `tau = t / t*`.

use crate::error::{Error, Result};
use crate::evolve::ObservableSeries;

/// Default comparison window in `tau`.
pub const DEFAULT_WINDOW: (f64, f64) = (1e-4, 1e-2);

const GRID_POINTS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseReport {
    /// Overlap of the requested window with every series.
    pub window: (f64, f64),
    /// Largest pairwise relative deviation of `C u` (units J = 1).
    pub coherence_deviation: f64,
    /// Largest pairwise relative deviation of `kappa / N^2`.
    pub kappa_deviation: f64,
}

impl CollapseReport {
    pub fn max_deviation(&self) -> f64 {
        self.coherence_deviation.max(self.kappa_deviation)
    }
}

/// Compare `C u` and `kappa / N^2` as functions of `tau` across runs.
///
/// Deviations are `|a - b| / max(|a|, |b|)` on a common logarithmic grid,
/// with linear interpolation in `ln tau`.
pub fn collapse_check(series: &[ObservableSeries], window: (f64, f64)) -> Result<CollapseReport> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "collapse needs at least 2 series, got {}",
            series.len()
        )));
    }
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::InvalidParams(format!("invalid window {window:?}")));
    }
    let mut curves = Vec::with_capacity(series.len());
    let (mut lo, mut hi) = window;
    for s in series {
        if s.params.t_star().is_none() {
            return Err(Error::InvalidParams(format!(
                "series with u = {}, g = {} has no rescaled time",
                s.params.u, s.params.g
            )));
        }
        let n2 = (s.params.n * s.params.n) as f64;
        let pts: Vec<(f64, f64, f64)> = s
            .samples
            .iter()
            .filter(|x| x.tau > 0.0)
            .map(|x| (x.tau.ln(), x.obs.coherence * s.params.u, x.obs.kappa / n2))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InsufficientData("series has fewer than 2 samples".into()));
        }
        lo = lo.max(pts[0].0.exp());
        hi = hi.min(pts[pts.len() - 1].0.exp());
        curves.push(pts);
    }
    if !(hi > lo) {
        return Err(Error::InsufficientData(format!(
            "empty overlap of the series with the window {window:?}"
        )));
    }
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lo.ln() + (hi / lo).ln() * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let sampled: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| grid.iter().map(|&x| interpolate(c, x)).collect())
        .collect();
    let (mut dc, mut dk) = (0.0f64, 0.0f64);
    for a in 0..sampled.len() {
        for b in (a + 1)..sampled.len() {
            for (p, q) in sampled[a].iter().zip(&sampled[b]) {
                dc = dc.max(relative_deviation(p.0, q.0));
                dk = dk.max(relative_deviation(p.1, q.1));
            }
        }
    }
    Ok(CollapseReport {
        window: (lo, hi),
        coherence_deviation: dc,
        kappa_deviation: dk,
    })
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn interpolate(curve: &[(f64, f64, f64)], x: f64) -> (f64, f64) {
    let k = curve.partition_point(|p| p.0 < x).clamp(1, curve.len() - 1);
    let (p, q) = (curve[k - 1], curve[k]);
    let w = if q.0 > p.0 { (x - p.0) / (q.0 - p.0) } else { 0.0 };
    (p.1 + w * (q.1 - p.1), p.2 + w * (q.2 - p.2))
}
