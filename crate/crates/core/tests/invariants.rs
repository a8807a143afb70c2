use dimerlab_core::reduced::pde::{evolve_pde, PdeConfig, ProbabilityDensity};
use dimerlab_core::reduced::{evolve_reduced, ReducedState};
use dimerlab_core::{evolve, master_rhs, DensityMatrix, EvolutionConfig, ModelParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn hermitian(dim: usize, seed: &[f64]) -> DensityMatrix {
    let mut k = 0;
    let mut next = || {
        k += 1;
        seed[k % seed.len()] * (1.0 + 0.1 * k as f64).sin()
    };
    let mut m = DensityMatrix::zeros(dim);
    for i in 0..dim {
        for j in i..dim {
            let z = if i == j { Complex64::new(next(), 0.0) } else { Complex64::new(next(), next()) };
            m.as_mut_slice()[i * dim + j] = z;
            m.as_mut_slice()[j * dim + i] = z.conj();
        }
    }
    m
}

fn model() -> impl Strategy<Value = ModelParams> {
    (1usize..7, 0.0f64..30.0, 0.0f64..5.0).prop_map(|(h, u, g)| ModelParams::new(2 * h, u, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_is_traceless_and_hermitian(p in model(), seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let rho = hermitian(p.dim(), &seed);
        let d = master_rhs(&p, &rho).unwrap();
        prop_assert!(d.trace().norm() < 1e-10);
        prop_assert!(d.hermiticity_error() < 1e-10);
    }

    #[test]
    fn generator_commutes_with_mirror(p in model(), seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let rho = hermitian(p.dim(), &seed);
        let a = master_rhs(&p, &rho.mirrored()).unwrap();
        let b = master_rhs(&p, &rho).unwrap().mirrored();
        prop_assert!(a.max_abs_diff(&b) < 1e-10 * (1.0 + b.max_abs()));
    }

    #[test]
    fn short_runs_stay_physical(p in model(), t in 0.05f64..1.0) {
        let cfg = EvolutionConfig { renormalize: false, ..EvolutionConfig::to_time(t) };
        let run = evolve(&p, &cfg).unwrap();
        let rep = run.series.property_report();
        prop_assert!(rep.max_trace_err < 1e-8);
        prop_assert!(rep.max_herm_err < 1e-10);
        prop_assert!(rep.min_eig > -1e-7);
        prop_assert!(rep.max_purity_increase <= 1e-9);
        prop_assert!(rep.max_mirror_err < 1e-8);
    }

    #[test]
    fn reduced_dynamics_conserves_probability(
        h in 2usize..40,
        weights in prop::collection::vec(0.0f64..1.0, 81),
        tau in 1e-6f64..1.0,
    ) {
        let n = 2 * h;
        let mut diag: Vec<f64> = weights[..=n].to_vec();
        diag[n / 2] += 0.1;
        let s: f64 = diag.iter().sum();
        diag.iter_mut().for_each(|x| *x /= s);
        let out = evolve_reduced(&ReducedState::new(diag, 0.0).unwrap(), &[tau]).unwrap();
        let d = &out[0].diag;
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(d.iter().all(|x| *x > -1e-12));
    }

    #[test]
    fn pde_conserves_mass(cells in (4usize..100).prop_map(|k| 2 * k), tau in 1e-5f64..0.1) {
        let init = ProbabilityDensity::central_box(cells).unwrap();
        let out = evolve_pde(&init, &[tau], &PdeConfig { steps_per_decade: 200, ..PdeConfig::default() }).unwrap();
        prop_assert!((out[0].mass() - 1.0).abs() < 1e-10);
        prop_assert!(out[0].values.iter().all(|v| *v >= 0.0));
    }
}
