//! Approximation-error budgeting for compiled quantum programs.
//!
//! A program is modelled as a tree of subroutine sets ([`budget`]); the
//! optimizer ([`anneal`]) distributes an overall error bound over the tree's
//! tolerance parameters so that the total gate cost is small. [`tfim`] builds
//! the phase-estimation benchmark, [`norm`] checks the error-composition rules
//! on explicit matrices and [`experiment`] runs the benchmark studies.

pub mod anneal;
pub mod budget;
pub mod experiment;
pub mod norm;
pub mod stats;
pub mod tfim;

pub use anneal::{anneal, find_feasible, find_feasible_within, AnnealConfig, AnnealError, AnnealResult};
pub use budget::{BudgetModel, BudgetNode, ModelError, ModelFile, ParameterBinding, ToleranceVector};
pub use tfim::{build_tfim_model, tfim_model, Preset, TfimConfig};
