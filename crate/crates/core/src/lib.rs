//! Energy-driven wavefunction collapse.
//!
//! The crate is split along the lines of the computation:
//!
//! - [`units`] and [`state`]: MeV/second quantities, physical constants,
//!   amplitude vectors in the energy eigenbasis and density matrices.
//! - [`analytic`]: closed-form two-level decoherence and the collapse time
//!   `t_c = k·ħ·E_p / ΔE²`.
//! - [`sde`]: a Monte Carlo engine integrating the energy-driven stochastic
//!   Schrödinger equation, whose ensemble means reproduce [`analytic`].
//! - [`structure`]: particle composition trees, the summed cross-branch
//!   energy difference, and collapse-time predictions for substructure
//!   hypotheses (including the neutral long-lived kaon).

pub mod analytic;
pub mod error;
pub mod sde;
pub mod state;
pub mod structure;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use state::{DensityMatrix, NLevelState};
pub use units::{Duration, Energy, PhysicalConstants};
