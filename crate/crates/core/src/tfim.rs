//! Phase estimation over a Trotterized transverse-field Ising propagator.
//!
//! The tree has three levels:
//!
//! * `qpe` consumes `eps_qpe` and calls the controlled propagator
//!   `qpe_coefficient / eps_qpe` times,
//! * `controlled_u` consumes `eps_trotter` and calls each of its two halves
//!   `M = trotter_coefficient / sqrt(eps_trotter)` times,
//! * each half is `2N` synthesized rotations at tolerance `eps_r`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{
    BudgetModel, BudgetNode, ChildEdge, LeafCostForm, MultiplicityForm, ParameterBinding, Rounding,
};

pub const EPS_QPE: &str = "eps_qpe";
pub const EPS_TROTTER: &str = "eps_trotter";
pub const EPS_R: &str = "eps_r";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TfimError {
    #[error("chain length must be at least 2, got {0}")]
    ChainTooShort(usize),
    #[error("coefficient `{0}` must be positive and finite")]
    Coefficient(&'static str),
    #[error("{groups} rotation groups requested but only {units} rotations per Trotter step")]
    TooManyGroups { groups: usize, units: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfimConfig {
    /// Spin-chain length (periodic boundary).
    pub n: usize,
    /// `c` in `M(ε) = c / sqrt(ε)`.
    pub trotter_coefficient: f64,
    pub qpe_coefficient: f64,
    /// T gates per unit of `log(1/ε_R)`.
    pub synthesis_gates_per_log: f64,
    pub log_base: f64,
    pub rounding: Rounding,
}

impl Default for TfimConfig {
    fn default() -> Self {
        Self {
            n: 10,
            trotter_coefficient: 1.0,
            qpe_coefficient: 16.0 * PI,
            synthesis_gates_per_log: 4.0,
            log_base: 2.0,
            rounding: Rounding::Continuous,
        }
    }
}

impl TfimConfig {
    pub fn with_n(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), TfimError> {
        if self.n < 2 {
            return Err(TfimError::ChainTooShort(self.n));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.trotter_coefficient) {
            return Err(TfimError::Coefficient("trotter_coefficient"));
        }
        if !positive(self.qpe_coefficient) {
            return Err(TfimError::Coefficient("qpe_coefficient"));
        }
        if !positive(self.synthesis_gates_per_log) {
            return Err(TfimError::Coefficient("synthesis_gates_per_log"));
        }
        if !(self.log_base > 1.0 && self.log_base.is_finite()) {
            return Err(TfimError::Coefficient("log_base"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `{eps_qpe}`, `{eps_trotter}`, `{eps_r}`.
    ThreeParam,
    /// `{eps_qpe}`, `{eps_trotter, eps_r}`.
    TwoParam,
    /// Rotations split into `k + 1` groups of near-equal size, each with its
    /// own tolerance.
    Redundancy(usize),
}

impl Preset {
    pub fn num_params(&self) -> usize {
        match self {
            Preset::ThreeParam => 3,
            Preset::TwoParam => 2,
            Preset::Redundancy(k) => 3 + k,
        }
    }
}

/// Name of the slot for rotation group `g` in the redundancy preset.
pub fn rotation_slot(g: usize) -> String {
    if g == 0 {
        EPS_R.to_owned()
    } else {
        format!("{EPS_R}_{g}")
    }
}

pub fn build_tfim_model(config: &TfimConfig, preset: Preset) -> Result<(BudgetNode, ParameterBinding), TfimError> {
    config.check()?;
    let per_half = 2 * config.n;
    let units = 2 * per_half;
    let groups = match preset {
        Preset::Redundancy(k) => k + 1,
        _ => 1,
    };
    if groups > units {
        return Err(TfimError::TooManyGroups { groups, units });
    }

    let trotter_steps = MultiplicityForm::new(config.trotter_coefficient, 0.5, config.rounding);
    let leaf = |name: String, slot: String, count: usize| {
        let cost = LeafCostForm::new(count as f64, config.synthesis_gates_per_log).with_log_base(config.log_base);
        ChildEdge::new(trotter_steps, BudgetNode::leaf(name, slot, cost))
    };

    // Rotation units 0..2N belong to the first half, 2N..4N to the second.
    // Group g owns a contiguous run of them; the first `units % groups`
    // groups are one larger.
    let mut leaves = Vec::new();
    let (base, extra) = (units / groups, units % groups);
    let mut start = 0;
    for g in 0..groups {
        let end = start + base + usize::from(g < extra);
        for (half, lo, hi) in [(1, 0, per_half), (2, per_half, units)] {
            let count = end.min(hi).saturating_sub(start.max(lo));
            if count == 0 {
                continue;
            }
            let name = if groups == 1 {
                format!("u{half}")
            } else {
                format!("u{half}_g{g}")
            };
            leaves.push(leaf(name, rotation_slot(g), count));
        }
        start = end;
    }

    let controlled_u = BudgetNode::composite("controlled_u", Some(EPS_TROTTER), leaves);
    let root = BudgetNode::composite(
        "qpe",
        Some(EPS_QPE),
        vec![ChildEdge::new(
            MultiplicityForm::new(config.qpe_coefficient, 1.0, config.rounding),
            controlled_u,
        )],
    );

    let binding = match preset {
        Preset::ThreeParam => ParameterBinding::singletons(&[EPS_QPE, EPS_TROTTER, EPS_R]),
        Preset::TwoParam => ParameterBinding::new([(EPS_QPE, vec![EPS_QPE]), (EPS_TROTTER, vec![EPS_TROTTER, EPS_R])]),
        Preset::Redundancy(k) => {
            let mut names = vec![EPS_QPE.to_owned(), EPS_TROTTER.to_owned()];
            names.extend((0..=k).map(rotation_slot));
            ParameterBinding::singletons(&names)
        }
    };
    Ok((root, binding))
}

/// Three-group binding of the `Redundancy(k)` tree: all rotation slots share
/// `eps_r`. A three-parameter solution lifts onto the redundant model through
/// this binding.
pub fn merged_rotation_binding(k: usize) -> ParameterBinding {
    ParameterBinding::new([
        (EPS_QPE.to_owned(), vec![EPS_QPE.to_owned()]),
        (EPS_TROTTER.to_owned(), vec![EPS_TROTTER.to_owned()]),
        (EPS_R.to_owned(), (0..=k).map(rotation_slot).collect()),
    ])
}

/// [`build_tfim_model`] followed by validation and binding.
pub fn tfim_model(config: &TfimConfig, preset: Preset) -> Result<BudgetModel, TfimError> {
    let (tree, binding) = build_tfim_model(config, preset)?;
    Ok(BudgetModel::new(tree, binding).expect("generated model is well-formed"))
}
