//! Dissipative two-site Bose-Hubbard dynamics.
//!
//! The model: `N` bosons in a double well, tunnelling `J = 1`, on-site
//! interaction `u`, and local-density dephasing at rate `g`, all in units
//! with `hbar = J = 1`. States are density matrices over the Fock basis
//! labelled by the left-well occupation `n = 0..=N`.
//!
//! - [`model`]: Hamiltonian, dissipator, master-equation right-hand side, observables.
//! - [`evolve`]: adaptive time integration with checkpoints and a reduced-model handoff.
//! - [`spectra`]: Liouvillian matrix, eigenvalues and spectral gap.
//! - [`reduced`]: population dynamics after adiabatic elimination, its continuum limit,
//!   and the closed-form scaling laws.
//! - [`analysis`]: power-law fits, regime detection, data collapse.
//! - [`lab`]: experiment configs, scenarios and output writers behind the CLI.

pub mod analysis;
pub mod density;
pub mod error;
pub mod evolve;
pub mod lab;
pub mod model;
pub mod params;
pub mod reduced;
pub mod spectra;

pub use density::{DensityMatrix, StateVector};
pub use error::{Error, Result};
pub use evolve::{evolve, evolve_from, EvolutionConfig, ObservableSeries};
pub use model::{build_hamiltonian, ground_state, master_rhs, observables_of, Observables};
pub use params::{FockIndex, ModelParams, Tolerances};
