//! Dense-matrix checks of the error-composition rules.
//!
//! Everything here works on explicit `2ⁿ×2ⁿ` complex matrices with `n ≤ 6`
//! and is meant as a numerical oracle, not a simulator.

mod composition;
mod matrix;
mod trotter;

pub use composition::{perturb_unitary, random_unitary, verify_composition_bound, CompositionReport, MAX_PRODUCTS};
pub use matrix::{rx, rz, spectral_norm, ComplexMatrix, MAX_DIMENSION};
pub use trotter::{tfim_hamiltonian, trotter_error, trotter_product, trotter_sweep, SplitOrder, TfimHamiltonianSpec};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("assembled Hamiltonian is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),
    #[error("{0} matrix products requested, limit is {MAX_PRODUCTS}")]
    TooLarge(usize),
}
