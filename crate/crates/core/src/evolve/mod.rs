//! Time evolution of the dimer from its interacting ground state.
//!
//! Dephasing is switched on at `t = 0`. The full master equation is integrated
//! with an adaptive Dormand-Prince 5(4) pair in integrating-factor form (see
//! [`lawson`]). For long runs an optional handoff projects onto the
//! populations once `gamma t` exceeds a switch value and continues with the
//! exact reduced propagator; the coherence is then reconstructed from the
//! adiabatically slaved nearest-neighbour elements.

pub mod checkpoint;
mod lawson;

use log::{debug, info};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use lawson::StepStats;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::model::{ground_state, observables_of, Generator, Observables};
use crate::params::{ModelParams, Tolerances};
use crate::reduced::{reduced_observables, slaved_coherences, ReducedPropagator, ReducedState};

/// Default number of samples per decade of time.
pub const SAMPLES_PER_DECADE: usize = 25;

/// Default `gamma t` at which the diagonal projection takes over.
pub const DEFAULT_HANDOFF: f64 = 20.0;

/// Integration controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// Final time in units of hbar/J.
    pub t_end: f64,
    /// Strictly increasing sample times in `(t0, t_end]`. Empty means a
    /// logarithmic default grid, see [`log_grid`].
    pub sample_times: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Symmetrize and rescale the trace after each step.
    pub renormalize: bool,
    /// Optional cap on the step size.
    pub max_step: Option<f64>,
    /// Switch to the reduced population dynamics once `gamma t` exceeds this.
    pub handoff: Option<f64>,
    /// Store the populations at every sample.
    pub record_diagonals: bool,
    /// Largest N for which the smallest eigenvalue of `rho` is checked at each sample.
    pub psd_check_max_n: usize,
    pub tolerances: Tolerances,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            t_end: 10.0,
            sample_times: Vec::new(),
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            renormalize: true,
            max_step: None,
            handoff: None,
            record_diagonals: false,
            psd_check_max_n: 40,
            tolerances: Tolerances::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn to_time(t_end: f64) -> Self {
        EvolutionConfig {
            t_end,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParams(format!("t_end = {} must be > 0", self.t_end)));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParams("integrator tolerances must be > 0".into()));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::InvalidParams(format!("max_step = {h} must be > 0")));
            }
        }
        if let Some(s) = self.handoff {
            if !(s > 0.0) {
                return Err(Error::InvalidParams(format!("handoff gamma*t = {s} must be > 0")));
            }
        }
        for w in self.sample_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParams("sample times must be strictly increasing".into()));
            }
        }
        if let (Some(first), Some(last)) = (self.sample_times.first(), self.sample_times.last()) {
            if !(*first > 0.0) || *last > self.t_end {
                return Err(Error::InvalidParams(format!(
                    "sample times must lie in (0, t_end = {}]",
                    self.t_end
                )));
            }
        }
        Ok(())
    }
}

/// Logarithmic grid from `start` to `end` (both included), `per_decade` points per decade.
pub fn log_grid(start: f64, end: f64, per_decade: usize) -> Vec<f64> {
    assert!(start > 0.0 && end >= start && per_decade > 0);
    let decades = (end / start).log10();
    let count = (decades * per_decade as f64).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..=count)
        .map(|i| start * 10f64.powf(decades * i as f64 / count as f64))
        .collect();
    *grid.last_mut().unwrap() = end;
    grid.dedup();
    grid
}

/// Which description produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Full master equation.
    Full,
    /// Reduced population dynamics after the handoff.
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub gamma_t: f64,
    pub tau: f64,
    pub obs: Observables,
    /// `|tr rho - 1|`. With renormalization on, the accumulated pre-correction drift.
    pub trace_err: f64,
    pub herm_err: f64,
    /// Smallest eigenvalue of `rho`, when checked.
    pub min_eig: Option<f64>,
    /// `max_n |rho_nn - rho_{N-n,N-n}|`.
    pub mirror_err: f64,
    pub phase: Phase,
    pub populations: Option<Vec<f64>>,
}

/// Time-ordered record of observables and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub params: ModelParams,
    pub samples: Vec<Sample>,
    /// Time of the switch to the reduced dynamics, if it happened.
    pub handoff_time: Option<f64>,
    pub stats: StepStats,
}

impl ObservableSeries {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn coherence(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.obs.coherence).collect()
    }

    pub fn kappa(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.obs.kappa).collect()
    }

    pub fn balanced(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.obs.balanced).collect()
    }

    /// Worst-case invariant diagnostics over the full-dynamics samples.
    pub fn property_report(&self) -> PropertyReport {
        let mut r = PropertyReport::default();
        let mut last_purity: Option<f64> = None;
        for s in self.samples.iter().filter(|s| s.phase == Phase::Full) {
            r.max_trace_err = r.max_trace_err.max(s.trace_err);
            r.max_herm_err = r.max_herm_err.max(s.herm_err);
            r.max_mirror_err = r.max_mirror_err.max(s.mirror_err);
            if let Some(e) = s.min_eig {
                r.min_eig = r.min_eig.min(e);
            }
            if let Some(prev) = last_purity {
                r.max_purity_increase = r.max_purity_increase.max(s.obs.purity - prev);
            }
            last_purity = Some(s.obs.purity);
        }
        r
    }
}

/// Extremes of the invariant diagnostics along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyReport {
    pub max_trace_err: f64,
    pub max_herm_err: f64,
    pub min_eig: f64,
    /// Largest increase of the purity between consecutive samples (<= 0 when monotone).
    pub max_purity_increase: f64,
    pub max_mirror_err: f64,
}

impl Default for PropertyReport {
    fn default() -> Self {
        PropertyReport {
            max_trace_err: 0.0,
            max_herm_err: 0.0,
            min_eig: f64::INFINITY,
            max_purity_increase: f64::NEG_INFINITY,
            max_mirror_err: 0.0,
        }
    }
}

/// Result of an evolution: the series plus the state at `t_end`.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub series: ObservableSeries,
    /// Final state. After a handoff this is the populations plus slaved
    /// nearest-neighbour coherences.
    pub final_state: DensityMatrix,
    pub t_final: f64,
}

/// Evolve from the ground state of `params` with dephasing switched on at `t = 0`.
pub fn evolve(params: &ModelParams, config: &EvolutionConfig) -> Result<Evolution> {
    let rho0 = DensityMatrix::pure(&ground_state(params)?);
    evolve_from(params, config, rho0, 0.0)
}

/// Evolve from an arbitrary state at time `t0` (e.g. a loaded checkpoint).
pub fn evolve_from(
    params: &ModelParams,
    config: &EvolutionConfig,
    rho0: DensityMatrix,
    t0: f64,
) -> Result<Evolution> {
    params.validate()?;
    config.validate()?;
    if rho0.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: rho0.dim(),
        });
    }
    if !(t0 >= 0.0 && t0 < config.t_end) {
        return Err(Error::InvalidParams(format!(
            "start time {t0} must lie in [0, t_end = {})",
            config.t_end
        )));
    }
    let t_switch = match config.handoff {
        Some(gt) => {
            if params.t_star().is_none() {
                return Err(Error::InvalidParams(
                    "handoff to the reduced model needs u > 0 and g > 0".into(),
                ));
            }
            Some(gt / params.g)
        }
        None => None,
    };

    let grid: Vec<f64> = if config.sample_times.is_empty() {
        let start = if params.g > 0.0 { 1e-2 / params.g } else { 1e-2 };
        let start = start.max(t0 * (1.0 + 1e-12)).min(config.t_end);
        log_grid(start, config.t_end, SAMPLES_PER_DECADE)
    } else {
        config.sample_times.clone()
    };
    let grid: Vec<f64> = grid.into_iter().filter(|&t| t > t0).collect();

    let gen = Generator::new(params)?;
    let mut stepper = lawson::LawsonDp5::new(&gen, config.rel_tol, config.abs_tol, config.max_step);
    let mut y = rho0.into_vec();
    let mut t = t0;
    let mut drift = 0.0f64;
    let renormalize = config.renormalize;
    let dim = params.dim();

    let mut samples = Vec::with_capacity(grid.len() + 1);
    samples.push(full_sample(params, config, &y, t, drift)?);

    let mut handoff_time = None;
    let mut reduced: Option<(ReducedPropagator, ReducedState, f64)> = None;
    if let Some(ts) = t_switch {
        if t0 >= ts {
            reduced = Some(project(params, &y, t0)?);
            handoff_time = Some(t0);
        }
    }

    for &target in &grid {
        if reduced.is_none() {
            if let Some(ts) = t_switch.filter(|&ts| ts < target) {
                advance(&mut stepper, &mut y, &mut t, ts, renormalize, dim, &mut drift)?;
                info!(
                    "handoff to reduced dynamics at gamma*t = {:.3} after {} steps",
                    params.gamma_t(t),
                    stepper.stats.accepted
                );
                reduced = Some(project(params, &y, t)?);
                handoff_time = Some(t);
            }
        }
        match &reduced {
            None => {
                advance(&mut stepper, &mut y, &mut t, target, renormalize, dim, &mut drift)?;
                let s = full_sample(params, config, &y, t, drift)?;
                check_sample(&s, &config.tolerances)?;
                samples.push(s);
            }
            Some((prop, start, t_start)) => {
                let t_star = params.t_star().expect("checked above");
                let diag = prop.propagate(&start.diag, (target - t_start) / t_star);
                let state = ReducedState {
                    diag,
                    tau: params.tau_of(target),
                };
                samples.push(reduced_sample(params, config, &state, target)?);
                t = target;
            }
        }
    }

    if reduced.is_none() && t < config.t_end {
        advance(&mut stepper, &mut y, &mut t, config.t_end, renormalize, dim, &mut drift)?;
    }
    debug!(
        "evolution finished: {} accepted, {} rejected steps",
        stepper.stats.accepted, stepper.stats.rejected
    );

    let final_state = match &reduced {
        None => DensityMatrix::from_row_major(dim, y)?,
        Some((prop, start, t_start)) => {
            let t_star = params.t_star().expect("checked above");
            let t_end = config.t_end.max(t);
            let state = ReducedState {
                diag: prop.propagate(&start.diag, (t_end - t_start) / t_star),
                tau: params.tau_of(t_end),
            };
            t = t_end;
            reconstruct(params, &state)?
        }
    };

    Ok(Evolution {
        series: ObservableSeries {
            params: *params,
            samples,
            handoff_time,
            stats: stepper.stats,
        },
        final_state,
        t_final: t,
    })
}

fn advance(
    stepper: &mut lawson::LawsonDp5<'_>,
    y: &mut Vec<Complex64>,
    t: &mut f64,
    target: f64,
    renormalize: bool,
    dim: usize,
    drift: &mut f64,
) -> Result<()> {
    if !renormalize {
        return stepper.advance_to(y, t, target, |_| false);
    }
    stepper.advance_to(y, t, target, |y| {
        let tr: f64 = (0..dim).map(|n| y[n * dim + n].re).sum();
        *drift += (tr - 1.0).abs();
        let s = 1.0 / tr;
        for r in 0..dim {
            y[r * dim + r].im = 0.0;
            for c in (r + 1)..dim {
                let avg = 0.5 * (y[r * dim + c] + y[c * dim + r].conj());
                y[r * dim + c] = avg * s;
                y[c * dim + r] = avg.conj() * s;
            }
            y[r * dim + r].re *= s;
        }
        true
    })
}

fn full_sample(
    params: &ModelParams,
    config: &EvolutionConfig,
    y: &[Complex64],
    t: f64,
    drift: f64,
) -> Result<Sample> {
    let rho = DensityMatrix::from_row_major(params.dim(), y.to_vec())?;
    let obs = observables_of(params, &rho)?;
    let pops = rho.populations();
    let trace_err = if config.renormalize {
        drift
    } else {
        rho.trace_error()
    };
    let min_eig = if params.n <= config.psd_check_max_n {
        Some(rho.min_eigenvalue()?)
    } else {
        None
    };
    Ok(Sample {
        t,
        gamma_t: params.gamma_t(t),
        tau: params.tau_of(t),
        obs,
        trace_err,
        herm_err: rho.hermiticity_error(),
        min_eig,
        mirror_err: mirror_error(&pops),
        phase: Phase::Full,
        populations: config.record_diagonals.then_some(pops),
    })
}

fn reduced_sample(
    params: &ModelParams,
    config: &EvolutionConfig,
    state: &ReducedState,
    t: f64,
) -> Result<Sample> {
    let obs = reduced_observables(state, params)?;
    let sum: f64 = state.diag.iter().sum();
    Ok(Sample {
        t,
        gamma_t: params.gamma_t(t),
        tau: state.tau,
        obs,
        trace_err: (sum - 1.0).abs(),
        herm_err: 0.0,
        min_eig: None,
        mirror_err: mirror_error(&state.diag),
        phase: Phase::Reduced,
        populations: config.record_diagonals.then(|| state.diag.clone()),
    })
}

fn check_sample(s: &Sample, tol: &Tolerances) -> Result<()> {
    let violation = |what, value: f64, limit: f64| Error::InvariantViolation {
        t: s.t,
        what,
        value,
        limit,
    };
    if s.trace_err > 10.0 * tol.trace {
        return Err(violation("trace error", s.trace_err, 10.0 * tol.trace));
    }
    if s.herm_err > 10.0 * tol.hermiticity {
        return Err(violation("hermiticity error", s.herm_err, 10.0 * tol.hermiticity));
    }
    if let Some(e) = s.min_eig {
        if e < -10.0 * tol.psd {
            return Err(violation("negative eigenvalue", -e, 10.0 * tol.psd));
        }
    }
    Ok(())
}

fn mirror_error(pops: &[f64]) -> f64 {
    let last = pops.len() - 1;
    (0..pops.len())
        .map(|n| (pops[n] - pops[last - n]).abs())
        .fold(0.0, f64::max)
}

fn project(
    params: &ModelParams,
    y: &[Complex64],
    t: f64,
) -> Result<(ReducedPropagator, ReducedState, f64)> {
    let dim = params.dim();
    let mut diag: Vec<f64> = (0..dim).map(|n| y[n * dim + n].re.max(0.0)).collect();
    let sum: f64 = diag.iter().sum();
    for p in &mut diag {
        *p /= sum;
    }
    let state = ReducedState::new(diag, params.tau_of(t))?;
    Ok((ReducedPropagator::new(params.n)?, state, t))
}

/// Density matrix from populations plus slaved nearest-neighbour coherences.
pub fn reconstruct(params: &ModelParams, state: &ReducedState) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::from_populations(&state.diag);
    for (n, z) in slaved_coherences(state, params)?.into_iter().enumerate() {
        rho[(n, n + 1)] = z;
        rho[(n + 1, n)] = z.conj();
    }
    Ok(rho)
}
