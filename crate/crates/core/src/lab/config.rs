//! Experiment configuration files (TOML).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::RegimeOptions;
use crate::error::{Error, Result};
use crate::evolve::{log_grid, EvolutionConfig, SAMPLES_PER_DECADE};
use crate::params::{ModelParams, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Evolve,
    Spectrum,
    Reduced,
    Pde,
    Collapse,
    Fig1,
    Fig2,
    Fig4,
    Regimes,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Evolve,
        Scenario::Spectrum,
        Scenario::Reduced,
        Scenario::Pde,
        Scenario::Collapse,
        Scenario::Fig1,
        Scenario::Fig2,
        Scenario::Fig4,
        Scenario::Regimes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Evolve => "evolve",
            Scenario::Spectrum => "spectrum",
            Scenario::Reduced => "reduced",
            Scenario::Pde => "pde",
            Scenario::Collapse => "collapse",
            Scenario::Fig1 => "fig1",
            Scenario::Fig2 => "fig2",
            Scenario::Fig4 => "fig4",
            Scenario::Regimes => "regimes",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown scenario `{s}` (expected one of: {})",
                    names.join(", ")
                ))
            })
    }
}

/// A single parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub u: f64,
    pub g: f64,
}

/// Parameter lists; the sweep is their Cartesian product.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub u: Vec<f64>,
    #[serde(default)]
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    /// Final time in units of hbar/J.
    pub t_end: Option<f64>,
    /// Final rescaled time `t / t*`; takes precedence over `t_end` when `t*` exists.
    pub tau_end: Option<f64>,
    /// First sample time; defaults to `0.01 / g`.
    pub t_start: Option<f64>,
    pub samples_per_decade: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub renormalize: bool,
    pub max_step: Option<f64>,
    /// `gamma t` at which to switch to the reduced dynamics.
    pub handoff: Option<f64>,
    pub record_diagonals: bool,
    pub tolerances: Tolerances,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let base = EvolutionConfig::default();
        EvolutionSection {
            t_end: None,
            tau_end: None,
            t_start: None,
            samples_per_decade: SAMPLES_PER_DECADE,
            rel_tol: base.rel_tol,
            abs_tol: base.abs_tol,
            renormalize: base.renormalize,
            max_step: None,
            handoff: None,
            record_diagonals: false,
            tolerances: base.tolerances,
        }
    }
}

impl EvolutionSection {
    /// Integration settings for one parameter point.
    pub fn for_params(&self, p: &ModelParams, default_t_end: f64) -> Result<EvolutionConfig> {
        let t_end = match (self.tau_end, p.t_star()) {
            (Some(tau), Some(ts)) => tau * ts,
            _ => self.t_end.unwrap_or(default_t_end),
        };
        let t_start = self
            .t_start
            .unwrap_or(if p.g > 0.0 { 1e-2 / p.g } else { 1e-2 })
            .min(t_end);
        if !(t_start > 0.0) {
            return Err(Error::Config(format!("t_start = {t_start} must be > 0")));
        }
        let cfg = EvolutionConfig {
            t_end,
            sample_times: log_grid(t_start, t_end, self.samples_per_decade.max(1)),
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            renormalize: self.renormalize,
            max_step: self.max_step,
            handoff: self.handoff,
            record_diagonals: self.record_diagonals,
            psd_check_max_n: 40,
            tolerances: self.tolerances,
        };
        cfg.validate()
            .map_err(|e| Error::Config(format!("[evolution] for N={} u={} g={}: {e}", p.n, p.u, p.g)))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Power-law window in `tau`.
    pub window: (f64, f64),
    pub regimes: RegimeOptions,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            window: (1e-4, 1e-2),
            regimes: RegimeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducedSection {
    pub tau_start: f64,
    pub tau_end: f64,
    pub samples_per_decade: usize,
    /// Continuum-limit grid cells (even).
    pub cells: usize,
    pub steps_per_decade: usize,
}

impl Default for ReducedSection {
    fn default() -> Self {
        ReducedSection {
            tau_start: 1e-6,
            tau_end: 1.0,
            samples_per_decade: 10,
            cells: 400,
            steps_per_decade: 2000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub plots: bool,
}

/// Parsed experiment file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must agree with the scenario given on the command line.
    pub scenario: Option<Scenario>,
    pub model: Option<ModelSection>,
    pub sweep: Option<SweepSection>,
    pub evolution: EvolutionSection,
    pub analysis: AnalysisSection,
    pub reduced: ReducedSection,
    pub output: OutputSection,
    /// Reserved; every scenario is deterministic.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.sweep {
            for (name, empty) in [("n", s.n.is_empty()), ("u", s.u.is_empty()), ("g", s.g.is_empty())] {
                if empty && self.model.is_none() {
                    return Err(Error::Config(format!(
                        "[sweep] list `{name}` is empty and there is no [model] to fall back on"
                    )));
                }
            }
        }
        for p in self.points_or_empty()? {
            p.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        let (lo, hi) = self.analysis.window;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::Config(format!("[analysis] window ({lo}, {hi}) is invalid")));
        }
        let r = &self.reduced;
        if !(r.tau_start > 0.0 && r.tau_end > r.tau_start) {
            return Err(Error::Config("[reduced] needs 0 < tau_start < tau_end".into()));
        }
        if r.cells < 4 || r.cells % 2 != 0 {
            return Err(Error::Config(format!("[reduced] cells = {} must be even and >= 4", r.cells)));
        }
        if r.samples_per_decade == 0 || r.steps_per_decade == 0 {
            return Err(Error::Config("[reduced] sample and step densities must be positive".into()));
        }
        let e = &self.evolution;
        if !(e.rel_tol > 0.0 && e.abs_tol > 0.0) {
            return Err(Error::Config("[evolution] tolerances must be positive".into()));
        }
        if e.samples_per_decade == 0 {
            return Err(Error::Config("[evolution] samples_per_decade must be positive".into()));
        }
        for (name, v) in [("t_end", e.t_end), ("tau_end", e.tau_end), ("t_start", e.t_start), ("handoff", e.handoff), ("max_step", e.max_step)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("[evolution] {name} = {v} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Parameter points: the sweep product (missing lists fall back to
    /// `[model]`), or the single `[model]` point, or nothing.
    pub fn points_or_empty(&self) -> Result<Vec<ModelParams>> {
        let base = self.model;
        let Some(s) = &self.sweep else {
            return match base {
                Some(m) => Ok(vec![to_params(m.n, m.u, m.g)?]),
                None => Ok(Vec::new()),
            };
        };
        let ns = if s.n.is_empty() { vec![base.unwrap().n] } else { s.n.clone() };
        let us = if s.u.is_empty() { vec![base.unwrap().u] } else { s.u.clone() };
        let gs = if s.g.is_empty() { vec![base.unwrap().g] } else { s.g.clone() };
        let mut out = Vec::with_capacity(ns.len() * us.len() * gs.len());
        for &n in &ns {
            for &u in &us {
                for &g in &gs {
                    out.push(to_params(n, u, g)?);
                }
            }
        }
        Ok(out)
    }

    /// Parameter points, or `default` when the file gives none.
    pub fn points_or(&self, default: &[(usize, f64, f64)]) -> Result<Vec<ModelParams>> {
        let pts = self.points_or_empty()?;
        if !pts.is_empty() {
            return Ok(pts);
        }
        default.iter().map(|&(n, u, g)| to_params(n, u, g)).collect()
    }
}

fn to_params(n: usize, u: f64, g: f64) -> Result<ModelParams> {
    ModelParams::new(n, u, g).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let text = r#"
            scenario = "evolve"
            [model]
            n = 20
            u = 0.0
            g = 1.0
            [evolution]
            t_end = 5.0
            samples_per_decade = 10
            [output]
            plots = true
        "#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.scenario, Some(Scenario::Evolve));
        assert_eq!(c.points_or_empty().unwrap().len(), 1);
        assert!(c.output.plots);
    }

    #[test]
    fn sweep_product_with_fallback() {
        let text = r#"
            [model]
            n = 40
            u = 20.0
            g = 1.0
            [sweep]
            u = [20.0, 40.0]
            g = [0.5, 1.0]
        "#;
        let c = ExperimentConfig::parse(text).unwrap();
        let pts = c.points_or_empty().unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| p.n == 40));
    }

    #[test]
    fn rejects_bad_files() {
        for text in [
            "[model]\nn = 21\nu = 1.0\ng = 1.0",
            "[model]\nn = 20\nu = -1.0\ng = 1.0",
            "[model]\nn = 20\nu = 1.0",
            "[modle]\nn = 20",
            "scenario = \"nope\"",
            "[sweep]\nn = []",
            "[analysis]\nwindow = [1e-2, 1e-4]",
            "[reduced]\ncells = 401",
            "[evolution]\nt_end = -3.0",
            "this is not toml",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("fig3".parse::<Scenario>().is_err());
    }
}
