//! Steady-state simulation of Rydberg EIT ladders dressed by a linearly
//! polarized RF field.
//!
//! The crate is layered bottom-up: [`angular`] provides Wigner symbols,
//! [`basis`] enumerates hyperfine states of a ladder, [`couplings`] turns
//! field polarizations into dipole-coupling blocks, [`dressed`] holds the
//! analytic dressed-state picture, [`master`] assembles and solves the
//! Lindblad master equation, and [`spectra`] converts steady states into
//! probe transmission spectra and polarization spectrograms.

pub mod angular;
pub mod basis;
pub mod couplings;
pub mod dressed;
pub mod error;
pub mod master;
pub mod spectra;
pub mod verify;

pub use angular::HalfInt;
pub use basis::{enumerate_basis, preset, Basis, HyperfineState, LadderSpec, LevelSpec, Preset};
pub use couplings::{FieldConfig, Polarization};
pub use error::{Error, Result};

/// Complex double used for all operators.
pub type C64 = num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
