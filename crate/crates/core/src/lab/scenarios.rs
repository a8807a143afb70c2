//! The individual experiment scenarios.

use std::fmt::Write;

use rayon::prelude::*;

use super::config::{EvolutionSection, ExperimentConfig};
use super::svg::{Curve, Plot};
use super::Output;
use crate::analysis::{collapse_check, detect_coherence_regimes, fit_power_law};
use crate::error::{Error, Result};
use crate::evolve::{evolve, log_grid, ObservableSeries, DEFAULT_HANDOFF};
use crate::model::number_variance;
use crate::params::ModelParams;
use crate::reduced::analytics::{analytic_density, kappa_coefficient, kappa_scaling};
use crate::reduced::pde::{evolve_pde, PdeConfig, ProbabilityDensity};
use crate::reduced::{evolve_reduced, ReducedState};
use crate::spectra::{fit_gap_scaling, spectrum, SpectrumResult};

const COLLAPSE_FAMILY: [(usize, f64, f64); 3] = [(40, 20.0, 1.0), (40, 40.0, 1.0), (40, 40.0, 0.5)];
const FIG1_FAMILY: [(usize, f64, f64); 2] = [(40, 20.0, 1.0), (40, 40.0, 1.0)];
const GAP_SIZES: [usize; 5] = [8, 12, 16, 24, 32];
const FIG4_PAIR: [(usize, f64, f64); 2] = [(60, 5.0, 1.0), (60, 20.0, 1.0)];

pub(crate) fn tag(p: &ModelParams) -> String {
    format!("N{}_u{}_g{}", p.n, p.u, p.g)
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn require_points(cfg: &ExperimentConfig, scenario: &str) -> Result<Vec<ModelParams>> {
    let pts = cfg.points_or_empty()?;
    if pts.is_empty() {
        return Err(Error::Config(format!("scenario `{scenario}` needs a [model] or [sweep] section")));
    }
    Ok(pts)
}

/// Evolution settings in which `tau_end` and the hand-off get scenario defaults.
fn with_defaults(sec: &EvolutionSection, tau_end: Option<f64>, handoff: bool) -> EvolutionSection {
    let mut s = sec.clone();
    if s.t_end.is_none() && s.tau_end.is_none() {
        s.tau_end = tau_end;
    }
    if handoff && s.handoff.is_none() {
        s.handoff = Some(DEFAULT_HANDOFF);
    }
    s
}

fn run_series(points: &[ModelParams], sec: &EvolutionSection, default_t_end: impl Fn(&ModelParams) -> f64 + Sync) -> Result<Vec<ObservableSeries>> {
    let cfgs = points
        .iter()
        .map(|p| sec.for_params(p, default_t_end(p)))
        .collect::<Result<Vec<_>>>()?;
    points
        .par_iter()
        .zip(cfgs.par_iter())
        .map(|(p, c)| evolve(p, c).map(|e| e.series))
        .collect()
}

fn gamma_end(p: &ModelParams, gamma_t: f64) -> f64 {
    if p.g > 0.0 {
        gamma_t / p.g
    } else {
        gamma_t
    }
}

/// Standard observable table.
pub(crate) fn series_csv(s: &ObservableSeries) -> String {
    let n = s.params.n as f64;
    let mut out = String::from("t,gamma_t,tau,C,C_over_N,kappa_over_N2,P_b,purity,trace_err\n");
    for x in &s.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(x.t),
            num(x.gamma_t),
            num(x.tau),
            num(x.obs.coherence),
            num(x.obs.coherence / n),
            num(x.obs.kappa / (n * n)),
            num(x.obs.balanced),
            num(x.obs.purity),
            num(x.trace_err)
        );
    }
    out
}

fn diagonals_csv(s: &ObservableSeries) -> String {
    let mut out = String::from("t,n,rho_nn\n");
    for x in &s.samples {
        if let Some(pops) = &x.populations {
            for (n, p) in pops.iter().enumerate() {
                let _ = writeln!(out, "{},{n},{}", num(x.t), num(*p));
            }
        }
    }
    out
}

fn time_axis(s: &ObservableSeries) -> (Vec<f64>, &'static str) {
    if s.params.g > 0.0 {
        (s.samples.iter().map(|x| x.gamma_t).collect(), "gamma t")
    } else {
        (s.samples.iter().map(|x| x.t).collect(), "t")
    }
}

fn record_series(out: &mut Output, prefix: &str, s: &ObservableSeries) {
    let t = tag(&s.params);
    out.text(format!("{prefix}_{t}.csv"), series_csv(s));
    if s.samples.iter().any(|x| x.populations.is_some()) {
        out.text(format!("diagonals_{t}.csv"), diagonals_csv(s));
    }
    if let Some(th) = s.handoff_time {
        out.result(format!("{t}.handoff_time"), th);
    }
    let rep = s.property_report();
    out.result(format!("{t}.max_trace_err"), rep.max_trace_err);
    out.result(format!("{t}.max_herm_err"), rep.max_herm_err);
}

pub(crate) fn evolve_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let points = require_points(cfg, "evolve")?;
    let series = run_series(&points, &cfg.evolution, |p| gamma_end(p, 10.0))?;
    for s in &series {
        record_series(out, "evolve", s);
        if let Some(last) = s.samples.last() {
            out.result(format!("{}.final_C_over_N", tag(&s.params)), last.obs.coherence / s.params.n as f64);
        }
    }
    if out.plots {
        for s in &series {
            let (xs, xl) = time_axis(s);
            let n = s.params.n as f64;
            let plot = Plot::new(&format!("coherence, {}", tag(&s.params)), xl, "C / N")
                .log_x()
                .with(Curve::line("C/N", xs.iter().zip(&s.samples).map(|(x, y)| (*x, y.obs.coherence / n)).collect()));
            out.text(format!("evolve_{}.svg", tag(&s.params)), plot.render());
        }
    }
    Ok(())
}

fn gaps_csv(results: &[SpectrumResult]) -> String {
    let mut out = String::from("N,u,g,gap,gap_im,gap_residual,steady_deviation,null_count\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.params.n,
            num(r.params.u),
            num(r.params.g),
            num(r.gap()),
            num(r.gap_eigenvalue.im),
            num(r.gap_residual),
            num(r.steady_deviation),
            r.null_count
        );
    }
    out
}

fn spectra_of(points: &[ModelParams]) -> Result<Vec<SpectrumResult>> {
    points.par_iter().map(spectrum).collect()
}

/// Fit `gap ~ x^a` along whichever parameter varies while the others are fixed.
fn gap_fits(results: &[SpectrumResult], out: &mut Output) {
    let by = |f: &dyn Fn(&ModelParams) -> f64, others: &dyn Fn(&ModelParams) -> (u64, u64)| -> Option<crate::analysis::FitReport> {
        let key = others(&results.first()?.params);
        if results.iter().any(|r| others(&r.params) != key) {
            return None;
        }
        let pts: Vec<(f64, f64)> = results.iter().map(|r| (f(&r.params), r.gap())).collect();
        fit_gap_scaling(&pts).ok()
    };
    if let Some(f) = by(&|p| p.n as f64, &|p| (p.u.to_bits(), p.g.to_bits())) {
        out.result("gap_exponent_N", f.exponent);
        out.result("gap_exponent_N_err", f.exponent_err);
    }
    if let Some(f) = by(&|p| p.u, &|p| (p.n as u64, p.g.to_bits())) {
        out.result("gap_exponent_u", f.exponent);
        out.result("gap_exponent_u_err", f.exponent_err);
    }
}

pub(crate) fn spectrum_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let points = require_points(cfg, "spectrum")?;
    let results = spectra_of(&points)?;
    for r in &results {
        let mut buf = Vec::new();
        r.write_csv(&mut buf).expect("writing to memory");
        out.bytes(format!("spectrum_{}.csv", tag(&r.params)), buf);
        out.result(format!("{}.gap", tag(&r.params)), r.gap());
    }
    out.text("gaps.csv", gaps_csv(&results));
    gap_fits(&results, out);
    if out.plots {
        for r in results.iter().filter(|r| r.dense) {
            let plot = Plot::new(&format!("Liouvillian spectrum, {}", tag(&r.params)), "Re lambda", "Im lambda")
                .with(Curve::scatter("lambda", r.eigenvalues.iter().map(|z| (z.re, z.im)).collect()));
            out.text(format!("spectrum_{}.svg", tag(&r.params)), plot.render());
        }
        if results.len() > 1 {
            let plot = Plot::new("spectral gap", "N", "gap")
                .log_log()
                .with(Curve::scatter("gap", results.iter().map(|r| (r.params.n as f64, r.gap())).collect()));
            out.text("gaps.svg", plot.render());
        }
    }
    Ok(())
}

fn reduced_run(n: usize, cfg: &ExperimentConfig) -> Result<(Vec<f64>, Vec<ReducedState>)> {
    let r = &cfg.reduced;
    let taus = log_grid(r.tau_start, r.tau_end, r.samples_per_decade);
    let states = evolve_reduced(&ReducedState::balanced(n), &taus)?;
    Ok((taus, states))
}

fn reduced_sizes(cfg: &ExperimentConfig, default: usize) -> Result<Vec<usize>> {
    let mut ns: Vec<usize> = cfg.points_or(&[(default, 1.0, 1.0)])?.iter().map(|p| p.n).collect();
    ns.dedup();
    Ok(ns)
}

pub(crate) fn reduced_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let ns = reduced_sizes(cfg, 80)?;
    let runs = ns
        .par_iter()
        .map(|&n| reduced_run(n, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut curves = Vec::new();
    for (&n, (taus, states)) in ns.iter().zip(&runs) {
        let nf = n as f64;
        let mut table = String::from("tau,P_b,kappa_over_N2\n");
        let mut long = String::from("tau,n,p_n\n");
        for s in states {
            let _ = writeln!(table, "{},{},{}", num(s.tau), num(s.diag[n / 2]), num(number_variance(&s.diag) / (nf * nf)));
            for (k, p) in s.diag.iter().enumerate() {
                let _ = writeln!(long, "{},{k},{}", num(s.tau), num(*p));
            }
        }
        out.text(format!("reduced_N{n}.csv"), table);
        out.text(format!("reduced_diagonals_N{n}.csv"), long);
        let pb: Vec<f64> = states.iter().map(|s| s.diag[n / 2]).collect();
        if let Ok(f) = fit_power_law(taus, &pb, cfg.analysis.window) {
            out.result(format!("N{n}.P_b_exponent"), f.exponent);
            out.result(format!("N{n}.P_b_exponent_err"), f.exponent_err);
        }
        curves.push(Curve::line(format!("N = {n}"), taus.iter().copied().zip(pb).collect()));
    }
    if out.plots {
        let mut plot = Plot::new("balanced population", "tau", "P_b").log_log();
        plot.curves = curves;
        out.text("reduced.svg", plot.render());
    }
    Ok(())
}

pub(crate) fn pde_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let r = &cfg.reduced;
    let taus = log_grid(r.tau_start, r.tau_end, r.samples_per_decade);
    let init = ProbabilityDensity::central_box(r.cells)?;
    let pde_cfg = PdeConfig {
        steps_per_decade: r.steps_per_decade,
        ..PdeConfig::default()
    };
    let states = evolve_pde(&init, &taus, &pde_cfg)?;
    let mut moments = String::from("tau,x2,x2_law,l1,mass\n");
    let mut profiles = String::from("tau,x,p,p_analytic\n");
    for s in &states {
        let l1 = s.l1_distance(|x| analytic_density(x, s.tau));
        let _ = writeln!(
            moments,
            "{},{},{},{},{}",
            num(s.tau),
            num(s.second_moment()),
            num(kappa_scaling(s.tau)),
            num(l1),
            num(s.mass())
        );
        for (x, p) in s.centers().zip(&s.values) {
            let _ = writeln!(profiles, "{},{},{},{}", num(s.tau), num(x), num(*p), num(analytic_density(x, s.tau)));
        }
    }
    out.text("pde_moments.csv", moments);
    out.text("pde_profiles.csv", profiles);

    let (lo, hi) = cfg.analysis.window;
    let in_win: Vec<&ProbabilityDensity> = states.iter().filter(|s| s.tau >= lo && s.tau <= hi).collect();
    if !in_win.is_empty() {
        let num_: f64 = in_win.iter().map(|s| s.second_moment() * s.tau.sqrt()).sum();
        let den: f64 = in_win.iter().map(|s| s.tau).sum();
        out.result("x2_coefficient", num_ / den);
        out.result("x2_coefficient_law", kappa_coefficient());
        let l1 = in_win
            .iter()
            .map(|s| s.l1_distance(|x| analytic_density(x, s.tau)))
            .fold(0.0, f64::max);
        out.result("max_l1_in_window", l1);
    }
    if out.plots {
        let plot = Plot::new("second moment", "tau", "<x^2>")
            .log_log()
            .with(Curve::line("finite volume", states.iter().map(|s| (s.tau, s.second_moment())).collect()))
            .with(Curve::dashed("scaling law", states.iter().map(|s| (s.tau, kappa_scaling(s.tau))).collect()));
        out.text("pde_moments.svg", plot.render());
    }
    Ok(())
}

fn rescaled_csv(s: &ObservableSeries) -> String {
    let n = s.params.n as f64;
    let mut out = String::from("tau,C_times_u,kappa_over_N2\n");
    for x in s.samples.iter().filter(|x| x.tau > 0.0) {
        let _ = writeln!(out, "{},{},{}", num(x.tau), num(x.obs.coherence * s.params.u), num(x.obs.kappa / (n * n)));
    }
    out
}

fn scaling_runs(cfg: &ExperimentConfig, family: &[(usize, f64, f64)]) -> Result<Vec<ObservableSeries>> {
    let points = cfg.points_or(family)?;
    if let Some(p) = points.iter().find(|p| p.t_star().is_none()) {
        return Err(Error::Config(format!("{} has no t*; u and g must both be positive", tag(p))));
    }
    let sec = with_defaults(&cfg.evolution, Some(1.0), true);
    run_series(&points, &sec, |p| p.t_star().unwrap_or(1.0))
}

fn kappa_plot(series: &[ObservableSeries]) -> Plot {
    let mut plot = Plot::new("number fluctuations", "tau", "kappa / N^2").log_log();
    for s in series {
        let n = s.params.n as f64;
        plot.curves.push(Curve::line(
            tag(&s.params),
            s.samples.iter().map(|x| (x.tau, x.obs.kappa / (n * n))).collect(),
        ));
    }
    let taus: Vec<f64> = series.first().map(|s| s.samples.iter().map(|x| x.tau).collect()).unwrap_or_default();
    plot.with(Curve::dashed("law", taus.iter().map(|&t| (t, kappa_scaling(t))).collect()))
}

pub(crate) fn collapse_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let series = scaling_runs(cfg, &COLLAPSE_FAMILY)?;
    for s in &series {
        out.text(format!("collapse_{}.csv", tag(&s.params)), rescaled_csv(s));
    }
    let rep = collapse_check(&series, cfg.analysis.window)?;
    out.result("window_lo", rep.window.0);
    out.result("window_hi", rep.window.1);
    out.result("coherence_deviation", rep.coherence_deviation);
    out.result("kappa_deviation", rep.kappa_deviation);
    if out.plots {
        let mut plot = Plot::new("rescaled coherence", "tau", "C u").log_log();
        for s in &series {
            plot.curves.push(Curve::line(
                tag(&s.params),
                s.samples.iter().map(|x| (x.tau, x.obs.coherence * s.params.u)).collect(),
            ));
        }
        out.text("collapse_coherence.svg", plot.render());
        out.text("collapse_kappa.svg", kappa_plot(&series).render());
    }
    Ok(())
}

pub(crate) fn fig1_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let series = scaling_runs(cfg, &FIG1_FAMILY)?;
    let mut long = String::from("series,tau,kappa_over_N2,kappa_law\n");
    for s in &series {
        let n = s.params.n as f64;
        for x in s.samples.iter().filter(|x| x.tau > 0.0) {
            let _ = writeln!(long, "{},{},{},{}", tag(&s.params), num(x.tau), num(x.obs.kappa / (n * n)), num(kappa_scaling(x.tau)));
        }
    }
    out.text("fig1_kappa.csv", long);

    let base = series.first().map(|s| s.params).expect("nonempty family");
    let gap_points = GAP_SIZES
        .iter()
        .map(|&n| ModelParams::new(n, base.u, base.g))
        .collect::<Result<Vec<_>>>()?;
    let gaps = spectra_of(&gap_points)?;
    out.text("fig1_gap.csv", gaps_csv(&gaps));
    gap_fits(&gaps, out);
    if out.plots {
        out.text("fig1.svg", kappa_plot(&series).render());
        let plot = Plot::new("spectral gap", "N", "gap")
            .log_log()
            .with(Curve::scatter("gap", gaps.iter().map(|r| (r.params.n as f64, r.gap())).collect()));
        out.text("fig1_gap.svg", plot.render());
    }
    Ok(())
}

pub(crate) fn fig2_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let n = reduced_sizes(cfg, 80)?[0];
    let (taus, states) = reduced_run(n, cfg)?;
    let picks: Vec<usize> = [0, n / 8, n / 4, 3 * n / 8].iter().map(|d| n / 2 + d).collect();
    let mut long = String::from("tau,n,p_n\n");
    for s in &states {
        for &k in &picks {
            let _ = writeln!(long, "{},{k},{}", num(s.tau), num(s.diag[k]));
        }
    }
    out.text("fig2.csv", long);
    let pb: Vec<f64> = states.iter().map(|s| s.diag[n / 2]).collect();
    let fit = fit_power_law(&taus, &pb, cfg.analysis.window)?;
    out.result("P_b_exponent", fit.exponent);
    out.result("P_b_exponent_err", fit.exponent_err);
    out.result("P_b_prefactor", fit.prefactor);
    if out.plots {
        let mut plot = Plot::new(&format!("populations, N = {n}"), "tau", "p_n").log_log();
        for &k in &picks {
            plot.curves.push(Curve::line(format!("n = {k}"), states.iter().map(|s| (s.tau, s.diag[k])).collect()));
        }
        let reference: Vec<(f64, f64)> = taus.iter().map(|&t| (t, fit.prefactor * t.powf(-0.25))).collect();
        out.text("fig2.svg", plot.with(Curve::dashed("tau^-1/4", reference)).render());
    }
    Ok(())
}

/// First `gamma t > 1` at which `b` rises above `a`, and whether it stays
/// above for the rest of the run.
fn crossing(a: &ObservableSeries, b: &ObservableSeries) -> Option<(f64, f64)> {
    let pairs: Vec<(f64, f64, f64)> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x.gamma_t, x.obs.coherence, y.obs.coherence))
        .filter(|(gt, _, _)| *gt > 1.0)
        .collect();
    let start = pairs.iter().position(|(_, ca, cb)| cb > ca)?;
    let end = pairs[start..]
        .iter()
        .position(|(_, ca, cb)| cb <= ca)
        .map_or(pairs.len() - 1, |k| start + k - 1);
    Some((pairs[start].0, (pairs[end].0 / pairs[start].0).log10()))
}

pub(crate) fn fig4_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let points = cfg.points_or(&FIG4_PAIR)?;
    if points.iter().any(|p| p.g <= 0.0) {
        return Err(Error::Config("fig4 needs g > 0 for every series".into()));
    }
    let sec = with_defaults(&cfg.evolution, None, true);
    let series = run_series(&points, &sec, |p| gamma_end(p, 1e5))?;
    for s in &series {
        record_series(out, "fig4", s);
    }
    if let [a, b] = series.as_slice() {
        if let Some((gt, decades)) = crossing(a, b) {
            out.result("crossing_gamma_t", gt);
            out.result("crossing_decades_above", decades);
        }
    }
    if out.plots {
        let mut plot = Plot::new("coherence", "gamma t", "C / N").log_log();
        for s in &series {
            let n = s.params.n as f64;
            plot.curves.push(Curve::line(tag(&s.params), s.samples.iter().map(|x| (x.gamma_t, x.obs.coherence / n)).collect()));
        }
        out.text("fig4.svg", plot.render());
    }
    Ok(())
}

pub(crate) fn regimes_scenario(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let points = cfg.points_or(&[(60, 20.0, 1.0)])?;
    let sec = with_defaults(&cfg.evolution, Some(10.0), true);
    let series = run_series(&points, &sec, |p| gamma_end(p, 1e4))?;
    for s in &series {
        record_series(out, "regimes_series", s);
        let regimes = detect_coherence_regimes(s, &cfg.analysis.regimes)?;
        let mut table = String::from("kind,start,end,value,value_err\n");
        for r in &regimes {
            let _ = writeln!(table, "{},{},{},{},{}", r.kind.label(), num(r.window.0), num(r.window.1), num(r.value), num(r.value_err));
        }
        out.text(format!("regimes_{}.csv", tag(&s.params)), table);
        out.result(format!("{}.regime_count", tag(&s.params)), regimes.len() as f64);
        if out.plots {
            let (xs, xl) = time_axis(s);
            let plot = Plot::new(&format!("coherence regimes, {}", tag(&s.params)), xl, "C")
                .log_log()
                .with(Curve::line(
                    "C",
                    xs.iter()
                        .zip(&s.samples)
                        .map(|(t, x)| (*t, x.obs.coherence))
                        .collect(),
                ));
            out.text(format!("regimes_{}.svg", tag(&s.params)), plot.render());
        }
    }
    Ok(())
}
