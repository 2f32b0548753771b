use serde::Serialize;

use super::eval::{Body, BudgetModel};
use super::types::{Rounding, ToleranceVector};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatKind {
    /// Primitive gates of a leaf.
    Leaf,
    /// Decomposition error of a composite with a slot; costs nothing.
    Decomposition,
}

/// All instances of one tree node in the fully expanded program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatEntry {
    pub path: String,
    pub kind: FlatKind,
    pub instances: u64,
    pub cost_per_instance: f64,
    pub tolerance: f64,
}

/// The program flattened to a product of primitive operations, aggregated by
/// tree node. Totals are sums of integer instance counts times per-instance
/// values and do not go through the recursive evaluator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatExpansion {
    pub entries: Vec<FlatEntry>,
    /// Every expanded instance (composite invocations and primitive gates).
    pub total_instances: u64,
}

impl FlatExpansion {
    pub fn total_cost(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.instances as f64 * e.cost_per_instance)
            .sum()
    }

    pub fn total_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.instances as f64 * e.tolerance)
            .sum()
    }

    pub fn leaf_instances(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.kind == FlatKind::Leaf)
            .map(|e| e.instances)
            .sum()
    }
}

impl BudgetModel {
    /// Expand the tree to integer instance counts. Requires ceil rounding on
    /// every multiplicity and integer leaf counts.
    pub fn expand_flat(&self, theta: &ToleranceVector, max_instances: u64) -> Result<FlatExpansion, ModelError> {
        self.check_dimension(theta)?;
        let mut out = FlatExpansion {
            entries: Vec::new(),
            total_instances: 0,
        };
        self.expand(0, 1, theta.values(), max_instances, &mut out)?;
        Ok(out)
    }

    fn expand(
        &self,
        index: usize,
        occurrences: u64,
        theta: &[f64],
        limit: u64,
        out: &mut FlatExpansion,
    ) -> Result<(), ModelError> {
        let node = &self.nodes[index];
        let too_large = ModelError::TooLarge { limit };
        match &node.body {
            Body::Leaf(form) => {
                if form.count.fract() != 0.0 {
                    return Err(ModelError::FractionalCount {
                        node: node.path.clone(),
                        count: form.count,
                    });
                }
                let instances = occurrences
                    .checked_mul(form.count as u64)
                    .ok_or(too_large.clone())?;
                out.total_instances = out.total_instances.checked_add(instances).ok_or(too_large.clone())?;
                if out.total_instances > limit {
                    return Err(too_large);
                }
                let eps = theta[node.group.expect("leaf has slot")];
                out.entries.push(FlatEntry {
                    path: node.path.clone(),
                    kind: FlatKind::Leaf,
                    instances,
                    cost_per_instance: form.cost_per_instance(eps),
                    tolerance: eps,
                });
            }
            Body::Composite(children) => {
                out.total_instances = out.total_instances.checked_add(occurrences).ok_or(too_large.clone())?;
                if out.total_instances > limit {
                    return Err(too_large);
                }
                let at = match node.group {
                    Some(g) => {
                        out.entries.push(FlatEntry {
                            path: node.path.clone(),
                            kind: FlatKind::Decomposition,
                            instances: occurrences,
                            cost_per_instance: 0.0,
                            tolerance: theta[g],
                        });
                        theta[g]
                    }
                    None => 1.0,
                };
                for (form, child) in children {
                    if form.rounding != Rounding::Ceil {
                        return Err(ModelError::RequiresCeil {
                            node: node.path.clone(),
                        });
                    }
                    let times = form.eval_positive(at);
                    if times > limit as f64 {
                        return Err(too_large);
                    }
                    let inner = occurrences.checked_mul(times as u64).ok_or(too_large.clone())?;
                    self.expand(*child, inner, theta, limit, out)?;
                }
            }
        }
        Ok(())
    }
}
