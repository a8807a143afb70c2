//! Experiment runner: configuration files, scenarios, CSV/SVG output and manifests.
//!
//! Every artifact is produced in memory first; nothing touches the output
//! directory until the whole scenario has succeeded.

pub mod config;
mod scenarios;
pub mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;

pub use config::{ExperimentConfig, Scenario};

use crate::error::{Error, Result};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParams(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Checkpoint { .. } => EXIT_IO,
        Error::InvariantViolation { .. } => EXIT_INVARIANT,
        Error::StepUnderflow { .. }
        | Error::Eigensolver(_)
        | Error::InsufficientData(_)
        | Error::DimensionMismatch { .. }
        | Error::IndexOutOfRange { .. } => EXIT_NUMERIC,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Artifacts and scalar results of one scenario, held in memory.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub artifacts: Vec<Artifact>,
    pub results: BTreeMap<String, f64>,
    pub plots: bool,
}

impl Output {
    pub fn text(&mut self, name: impl Into<String>, s: String) {
        self.bytes(name, s.into_bytes());
    }

    pub fn bytes(&mut self, name: impl Into<String>, contents: Vec<u8>) {
        self.artifacts.push(Artifact { name: name.into(), contents });
    }

    pub fn result(&mut self, key: impl Into<String>, value: f64) {
        self.results.insert(key.into(), value);
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

/// Run a scenario entirely in memory.
pub fn execute(scenario: Scenario, cfg: &ExperimentConfig, plots: bool) -> Result<Output> {
    if let Some(s) = cfg.scenario {
        if s != scenario {
            return Err(Error::Config(format!(
                "config is written for scenario `{s}` but `{scenario}` was requested"
            )));
        }
    }
    let mut out = Output {
        plots,
        ..Default::default()
    };
    match scenario {
        Scenario::Evolve => scenarios::evolve_scenario(cfg, &mut out)?,
        Scenario::Spectrum => scenarios::spectrum_scenario(cfg, &mut out)?,
        Scenario::Reduced => scenarios::reduced_scenario(cfg, &mut out)?,
        Scenario::Pde => scenarios::pde_scenario(cfg, &mut out)?,
        Scenario::Collapse => scenarios::collapse_scenario(cfg, &mut out)?,
        Scenario::Fig1 => scenarios::fig1_scenario(cfg, &mut out)?,
        Scenario::Fig2 => scenarios::fig2_scenario(cfg, &mut out)?,
        Scenario::Fig4 => scenarios::fig4_scenario(cfg, &mut out)?,
        Scenario::Regimes => scenarios::regimes_scenario(cfg, &mut out)?,
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunRequest {
    pub scenario: String,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub plots: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub results: BTreeMap<String, f64>,
    pub wall_time: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    scenario: String,
    config_file: String,
    wall_time_s: f64,
    artifacts: Vec<&'a str>,
    results: &'a BTreeMap<String, f64>,
    config: &'a ExperimentConfig,
}

pub const MANIFEST: &str = "manifest.toml";

/// Load the config, run the scenario and write its artifacts plus a manifest.
pub fn run(req: &RunRequest) -> Result<RunSummary> {
    let start = Instant::now();
    let scenario: Scenario = req.scenario.parse()?;
    let cfg = ExperimentConfig::load(&req.config)?;
    let out_dir = req
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(scenario.name()));
    let plots = req.plots || cfg.output.plots;
    info!("running {scenario} from {}", req.config.display());
    let out = execute(scenario, &cfg, plots)?;
    let wall_time = start.elapsed().as_secs_f64();

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        scenario: scenario.name().into(),
        config_file: req.config.display().to_string(),
        wall_time_s: wall_time,
        artifacts: out.artifacts.iter().map(|a| a.name.as_str()).collect(),
        results: &out.results,
        config: &cfg,
    };
    let manifest = toml::to_string(&manifest).map_err(|e| Error::Config(format!("manifest: {e}")))?;

    let files = write_all(&out_dir, &out.artifacts, &manifest)?;
    Ok(RunSummary {
        out_dir,
        files,
        results: out.results,
        wall_time,
    })
}

fn write_all(dir: &Path, artifacts: &[Artifact], manifest: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(artifacts.len() + 1);
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Eigensolver("x".into())), 3);
        assert_eq!(exit_code(&Error::io("p", std::io::Error::other("x"))), 4);
        let inv = Error::InvariantViolation { t: 0.0, what: "trace", value: 1.0, limit: 0.0 };
        assert_eq!(exit_code(&inv), 5);
    }

    #[test]
    fn scenario_mismatch_is_config_error() {
        let cfg = ExperimentConfig::parse("scenario = \"pde\"").unwrap();
        let err = execute(Scenario::Reduced, &cfg, false).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn evolve_needs_a_model() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert!(matches!(execute(Scenario::Evolve, &cfg, false), Err(Error::Config(_))));
    }

    #[test]
    fn small_evolve_in_memory() {
        let cfg = ExperimentConfig::parse(
            "[model]\nn = 4\nu = 0.0\ng = 1.0\n[evolution]\nt_end = 1.0\nsamples_per_decade = 5",
        )
        .unwrap();
        let out = execute(Scenario::Evolve, &cfg, true).unwrap();
        let csv = String::from_utf8(out.artifact("evolve_N4_u0_g1.csv").unwrap().contents.clone()).unwrap();
        assert!(csv.starts_with("t,gamma_t,tau,C,C_over_N,kappa_over_N2,P_b,purity,trace_err\n"));
        assert!(out.artifact("evolve_N4_u0_g1.svg").is_some());
    }
}
