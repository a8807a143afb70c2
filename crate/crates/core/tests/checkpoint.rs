use std::fs;
use std::path::PathBuf;

use dimerlab_core::evolve::checkpoint::{load_for, load_state, save_state};
use dimerlab_core::{evolve, evolve_from, DensityMatrix, Error, EvolutionConfig, ModelParams};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dimerlab-ck-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn params(n: usize, u: f64, g: f64) -> ModelParams {
    ModelParams::new(n, u, g).unwrap()
}

#[test]
fn round_trip_is_bitwise() {
    let p = params(10, 3.0, 0.7);
    let run = evolve(&p, &EvolutionConfig::to_time(0.5)).unwrap();
    let path = scratch("rt.ck");
    save_state(&path, &p, run.t_final, &run.final_state).unwrap();
    let (hdr, rho) = load_state(&path).unwrap();
    assert_eq!(hdr.params, p);
    assert_eq!(hdr.t.to_bits(), run.t_final.to_bits());
    for (a, b) in rho.as_slice().iter().zip(run.final_state.as_slice()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
    assert_eq!(fs::metadata(&path).unwrap().len(), 44 + 16 * 11 * 11);
}

#[test]
fn mismatched_or_corrupt_files_are_rejected() {
    let p = params(6, 1.0, 1.0);
    let path = scratch("mm.ck");
    save_state(&path, &p, 1.0, &DensityMatrix::maximally_mixed(7)).unwrap();
    assert!(matches!(load_for(&path, &params(8, 1.0, 1.0)), Err(Error::Checkpoint { .. })));
    assert!(matches!(load_for(&path, &params(6, 2.0, 1.0)), Err(Error::Checkpoint { .. })));
    assert!(load_for(&path, &p).is_ok());

    let bytes = fs::read(&path).unwrap();
    let short = scratch("short.ck");
    fs::write(&short, &bytes[..bytes.len() - 8]).unwrap();
    assert!(matches!(load_state(&short), Err(Error::Checkpoint { .. })));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    fs::write(&short, &bad).unwrap();
    assert!(matches!(load_state(&short), Err(Error::Checkpoint { .. })));
    let mut bad = bytes;
    bad[8] = 9;
    fs::write(&short, &bad).unwrap();
    assert!(matches!(load_state(&short), Err(Error::Checkpoint { .. })));

    assert!(matches!(
        save_state(&path, &p, 0.0, &DensityMatrix::maximally_mixed(5)),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let p = params(12, 4.0, 1.0);
    let cfg = |t_end: f64| EvolutionConfig {
        sample_times: vec![t_end],
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        ..EvolutionConfig::to_time(t_end)
    };
    let whole = evolve(&p, &cfg(2.0)).unwrap();
    let half = evolve(&p, &cfg(1.0)).unwrap();
    let path = scratch("resume.ck");
    save_state(&path, &p, half.t_final, &half.final_state).unwrap();
    let (t0, rho0) = load_for(&path, &p).unwrap();
    let resumed = evolve_from(&p, &cfg(2.0), rho0, t0).unwrap();
    let diff = resumed.final_state.max_abs_diff(&whole.final_state);
    assert!(diff < 1e-8, "resumed state differs by {diff:e}");
    let c = |e: &dimerlab_core::evolve::Evolution| e.series.samples.last().unwrap().obs.coherence;
    assert!((c(&resumed) - c(&whole)).abs() < 1e-7);
}
