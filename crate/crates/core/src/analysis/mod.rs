//! Fits and diagnostics on observable series.

mod collapse;
mod fit;
mod regimes;

pub use collapse::{collapse_check, CollapseReport, DEFAULT_WINDOW};
pub use fit::{fit_line, fit_loglog, fit_power_law, FitReport, LineFit};
pub use regimes::{detect_coherence_regimes, detect_regimes, Regime, RegimeKind, RegimeOptions};
