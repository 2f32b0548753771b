//! Hierarchical cost/error models.
//!
//! A program is described as a tree of subroutine sets. Every composite node
//! may spend part of the error budget on its own decomposition (its
//! *self-error*), and invokes each child a number of times that can depend on
//! that self-error. Leaves are sets of identical primitive gates whose cost
//! grows like `log(1/ε)`.
//!
//! Nodes refer to named *parameter slots*. A [`ParameterBinding`] groups slots
//! so that every slot in a group receives the same tolerance, which is how the
//! granularity of the optimization problem is chosen. A [`ToleranceVector`]
//! holds one value per group.
//!
//! For a composite node `U` with self-error `ε_U`:
//!
//! ```text
//! cost(U)  =       Σ_child f_child(ε_U) · cost(child)
//! error(U) = ε_U + Σ_child f_child(ε_U) · error(child)
//! ```

mod eval;
mod flat;
mod types;
mod validate;

pub use eval::{BudgetModel, Evaluation};
pub use flat::{FlatEntry, FlatExpansion, FlatKind};
pub use types::{
    BudgetNode, ChildEdge, LeafCostForm, ModelFile, MultiplicityForm, NodeKind, ParameterBinding,
    Rounding, ToleranceVector, MAX_TOLERANCE, TOLERANCE_FLOOR,
};
pub use validate::{validate_model, ValidationReport, Violation};

use thiserror::Error;

/// Errors raised while binding, evaluating or expanding a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("tolerance {value} at index {index} is outside [{TOLERANCE_FLOOR:e}, 1)")]
    Domain { index: usize, value: f64 },
    #[error("multiplicity evaluated at non-positive tolerance {0}")]
    NonPositiveTolerance(f64),
    #[error("tolerance vector has dimension {got}, binding has {expected} groups")]
    Dimension { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Invalid(ValidationReport),
    #[error("flat expansion exceeds {limit} instances")]
    TooLarge { limit: u64 },
    #[error("flat expansion requires ceil rounding, multiplicity below `{node}` is continuous")]
    RequiresCeil { node: String },
    #[error("flat expansion requires integer leaf counts, `{node}` has count {count}")]
    FractionalCount { node: String, count: f64 },
    #[error("{0}")]
    Parse(String),
    #[error("binding: {0}")]
    Binding(String),
}
