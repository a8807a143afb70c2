use dimerlab_core::analysis::{collapse_check, detect_coherence_regimes, RegimeKind, RegimeOptions};
use dimerlab_core::evolve::{log_grid, Phase};
use dimerlab_core::reduced::pde::{evolve_pde, PdeConfig, ProbabilityDensity};
use dimerlab_core::reduced::{evolve_reduced, ReducedState};
use dimerlab_core::{evolve, EvolutionConfig, ModelParams, ObservableSeries};

fn params(n: usize, u: f64, g: f64) -> ModelParams {
    ModelParams::new(n, u, g).unwrap()
}

fn run(p: &ModelParams, t_end: f64, handoff: Option<f64>, grid: Vec<f64>) -> ObservableSeries {
    let cfg = EvolutionConfig {
        sample_times: grid,
        handoff,
        ..EvolutionConfig::to_time(t_end)
    };
    evolve(p, &cfg).unwrap().series
}

#[test]
fn slaved_coherence_tracks_full_dynamics() {
    let p = params(20, 20.0, 1.0);
    let grid = log_grid(0.1, 60.0, 10);
    let full = run(&p, 60.0, None, grid.clone());
    let handed = run(&p, 60.0, Some(20.0), grid);
    let mut compared = 0;
    for (a, b) in full.samples.iter().zip(&handed.samples) {
        assert_eq!(a.t, b.t);
        if b.phase == Phase::Reduced {
            let rel = (a.obs.coherence - b.obs.coherence).abs() / a.obs.coherence.abs();
            assert!(rel < 0.10, "t = {}: {} vs {}", a.t, a.obs.coherence, b.obs.coherence);
            let kr = (a.obs.kappa - b.obs.kappa).abs() / a.obs.kappa;
            assert!(kr < 0.05, "t = {}: kappa {} vs {}", a.t, a.obs.kappa, b.obs.kappa);
            compared += 1;
        }
    }
    assert!(compared >= 4);
}

#[test]
fn coherence_times_u_is_invariant_under_doubling_u() {
    let runs: Vec<ObservableSeries> = [8.0, 16.0].iter().map(|&u| full_to_tau(params(12, u, 1.0), 1e-2)).collect();
    let rep = collapse_check(&runs, (1e-3, 1e-2)).unwrap();
    assert!(rep.coherence_deviation < 0.10, "{rep:?}");
    assert!(rep.kappa_deviation < 0.10, "{rep:?}");

    let same = collapse_check(&[runs[0].clone(), runs[0].clone()], (1e-3, 1e-2)).unwrap();
    assert_eq!(same.max_deviation(), 0.0);
}

fn full_to_tau(p: ModelParams, tau: f64) -> ObservableSeries {
    let t_end = tau * p.t_star().unwrap();
    run(&p, t_end, None, log_grid(1e-2, t_end, 20))
}

#[test]
fn collapse_fails_for_weak_interaction() {
    // at u = 1 the reduced description does not apply
    let runs: Vec<ObservableSeries> = [1.0, 8.0].iter().map(|&u| full_to_tau(params(12, u, 1.0), 1e-2)).collect();
    let rep = collapse_check(&runs, (1e-3, 1e-2)).unwrap();
    assert!(rep.max_deviation() > 0.2, "{rep:?}");
}

#[test]
fn collapse_requires_t_star() {
    let s = run(&params(8, 0.0, 1.0), 1.0, None, Vec::new());
    assert!(collapse_check(&[s.clone(), s], (1e-3, 1e-2)).is_err());
}

#[test]
fn reduced_model_approaches_continuum_limit() {
    let n = 160;
    let tau = 1e-3;
    let states = evolve_reduced(&ReducedState::balanced(n), &[tau]).unwrap();
    let pde = evolve_pde(&ProbabilityDensity::central_box(800).unwrap(), &[tau], &PdeConfig::default()).unwrap();
    // population p_n sits at x = n/N - 1/2 with cell width 1/N
    let h = 1.0 / n as f64;
    let l1: f64 = states[0]
        .diag
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let x = k as f64 * h - 0.5;
            (p / h - pde[0].interpolate(x)).abs() * h
        })
        .sum();
    assert!(l1 < 0.03, "L1 = {l1}");
}

#[test]
fn moment_rate_matches_finite_difference() {
    let init = ProbabilityDensity::central_box(400).unwrap();
    let cfg = PdeConfig { steps_per_decade: 20000, ..PdeConfig::default() };
    for tau in [1e-4, 1e-3, 1e-2] {
        let dt = 1e-3 * tau;
        let s = evolve_pde(&init, &[tau - dt, tau, tau + dt], &cfg).unwrap();
        let fd = (s[2].second_moment() - s[0].second_moment()) / (2.0 * dt);
        let rate = s[1].second_moment_rate();
        assert!((fd / rate - 1.0).abs() < 0.02, "tau = {tau}: {fd} vs {rate}");
    }
}

#[test]
fn coherence_decays_at_unit_rate_without_interaction() {
    let p = params(20, 0.0, 1.0);
    let s = run(&p, 10.0, None, log_grid(0.01, 10.0, 25));
    let regimes = detect_coherence_regimes(&s, &RegimeOptions::default()).unwrap();
    assert_eq!(regimes.len(), 1, "{regimes:?}");
    assert_eq!(regimes[0].kind, RegimeKind::Exponential);
    assert!((regimes[0].value - 1.0).abs() < 0.02, "{regimes:?}");
}

#[test]
fn three_coherence_regimes_at_strong_interaction() {
    let p = params(60, 20.0, 1.0);
    let t_end = 10.0 * p.t_star().unwrap();
    let s = run(&p, t_end, Some(20.0), log_grid(0.01, t_end, 25));
    let regimes = detect_coherence_regimes(&s, &RegimeOptions::default()).unwrap();
    let kinds: Vec<RegimeKind> = regimes.iter().map(|r| r.kind).collect();
    assert_eq!(kinds, [RegimeKind::Exponential, RegimeKind::PowerLaw, RegimeKind::Exponential], "{regimes:?}");
    assert!(regimes[0].window.0 < 1.0);
    assert!(regimes[2].window.0 >= regimes[1].window.1);
    let mid = regimes
        .iter()
        .find(|r| r.kind == RegimeKind::PowerLaw && r.window.0 >= 1.0)
        .expect("intermediate power law");
    assert!((mid.value + 0.5).abs() < 0.05, "{mid:?}");
}
