//! Exact-diagonalization laboratory for a cutoff charged scalar field on a
//! finite-mode, particle-number-truncated boson Fock space.
//!
//! The crate builds a mirror-symmetric momentum grid with an even cutoff
//! profile, enumerates the two-species occupation basis with total particle
//! number at most `n_max`, assembles the free and interacting Hamiltonians
//! together with the charge, number and auxiliary operator families as
//! sparse matrices, computes low-lying spectra per charge sector, and runs
//! a registry of machine-checkable operator identities and inequalities
//! with measured residuals.

pub mod config;
pub mod error;
pub mod fock;
pub mod grid;
pub mod operators;
pub mod record;
pub mod run;
pub mod sparse;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
