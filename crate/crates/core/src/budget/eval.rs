use std::collections::HashMap;

use serde::Serialize;

use super::types::{BudgetNode, LeafCostForm, MultiplicityForm, NodeKind, ParameterBinding, ToleranceVector};
use super::validate::{validate_model, ValidationReport, Violation};
use super::ModelError;

/// Cost and composed error of a model at one tolerance assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub cost: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub(super) enum Body {
    Leaf(LeafCostForm),
    Composite(Vec<(MultiplicityForm, usize)>),
}

#[derive(Debug, Clone)]
pub(super) struct CompiledNode {
    pub path: String,
    pub group: Option<usize>,
    pub body: Body,
}

/// A tree with its binding resolved to tolerance-vector indices.
///
/// Immutable once built; every evaluator is a pure function of the model and
/// a [`ToleranceVector`].
#[derive(Debug, Clone)]
pub struct BudgetModel {
    tree: BudgetNode,
    binding: ParameterBinding,
    pub(super) nodes: Vec<CompiledNode>,
}

impl BudgetModel {
    /// Validate and bind. Fails with [`ModelError::Invalid`] on any violation.
    pub fn new(tree: BudgetNode, binding: ParameterBinding) -> Result<Self, ModelError> {
        let report = validate_model(&tree, &binding);
        if !report.is_ok() {
            return Err(ModelError::Invalid(report));
        }
        Self::bind(tree, binding)
    }

    /// Resolve slots without the structural checks of [`validate_model`].
    /// Only what evaluation itself needs is enforced: every slot maps to
    /// exactly one group and every leaf has a slot and a cost form.
    pub fn bind(tree: BudgetNode, binding: ParameterBinding) -> Result<Self, ModelError> {
        let mut slot_group: HashMap<&str, usize> = HashMap::new();
        let mut report = ValidationReport::default();
        for (index, (_, slots)) in binding.groups.iter().enumerate() {
            for slot in slots {
                if let Some(&other) = slot_group.get(slot.as_str()) {
                    if other != index {
                        report.violations.push(Violation::DoublyBoundSlot {
                            slot: slot.clone(),
                            groups: vec![
                                binding.groups.get_index(other).unwrap().0.clone(),
                                binding.groups.get_index(index).unwrap().0.clone(),
                            ],
                        });
                    }
                } else {
                    slot_group.insert(slot, index);
                }
            }
        }
        let mut nodes = Vec::new();
        compile(&tree, "", &slot_group, &mut nodes, &mut report);
        if !report.is_ok() {
            return Err(ModelError::Invalid(report));
        }
        Ok(Self { tree, binding, nodes })
    }

    pub fn tree(&self) -> &BudgetNode {
        &self.tree
    }

    pub fn binding(&self) -> &ParameterBinding {
        &self.binding
    }

    pub fn dimension(&self) -> usize {
        self.binding.dimension()
    }

    /// Same model with every multiplicity rounded as `rounding`.
    pub fn with_rounding(&self, rounding: super::Rounding) -> Self {
        Self::bind(self.tree.with_rounding(rounding), self.binding.clone())
            .expect("rounding does not change the binding")
    }

    pub fn evaluate(&self, theta: &ToleranceVector) -> Result<Evaluation, ModelError> {
        self.check_dimension(theta)?;
        Ok(self.eval_index(0, theta.values()))
    }

    pub fn total_cost(&self, theta: &ToleranceVector) -> Result<f64, ModelError> {
        self.evaluate(theta).map(|e| e.cost)
    }

    pub fn total_error(&self, theta: &ToleranceVector) -> Result<f64, ModelError> {
        self.evaluate(theta).map(|e| e.error)
    }

    pub fn is_feasible(&self, theta: &ToleranceVector, target: f64) -> Result<bool, ModelError> {
        self.total_error(theta).map(|e| e <= target)
    }

    pub(crate) fn check_dimension(&self, theta: &ToleranceVector) -> Result<(), ModelError> {
        if theta.len() != self.dimension() {
            return Err(ModelError::Dimension {
                expected: self.dimension(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    fn eval_index(&self, index: usize, theta: &[f64]) -> Evaluation {
        let node = &self.nodes[index];
        match &node.body {
            Body::Leaf(form) => {
                let eps = theta[node.group.expect("leaf slot resolved at bind time")];
                Evaluation {
                    cost: form.cost(eps),
                    error: form.error(eps),
                }
            }
            Body::Composite(children) => {
                // A composite without a slot has no decomposition error; its
                // children's multiplicities are then constants.
                let (own, at) = match node.group {
                    Some(g) => (theta[g], theta[g]),
                    None => (0.0, 1.0),
                };
                let mut cost = 0.0;
                let mut error = own;
                for (form, child) in children {
                    let times = form.eval_positive(at);
                    let sub = self.eval_index(*child, theta);
                    cost += times * sub.cost;
                    error += times * sub.error;
                }
                Evaluation { cost, error }
            }
        }
    }

    /// Values of every slot under `theta`, keyed by slot name.
    pub fn slot_values(&self, theta: &ToleranceVector) -> Vec<(String, f64)> {
        self.binding
            .groups
            .values()
            .zip(theta.values())
            .flat_map(|(slots, &v)| slots.iter().map(move |s| (s.clone(), v)))
            .collect()
    }
}

fn compile(
    node: &BudgetNode,
    parent: &str,
    slot_group: &HashMap<&str, usize>,
    out: &mut Vec<CompiledNode>,
    report: &mut ValidationReport,
) -> usize {
    let path = if parent.is_empty() {
        node.name.clone()
    } else {
        format!("{parent}/{}", node.name)
    };
    let group = node.slot.as_ref().and_then(|slot| {
        let g = slot_group.get(slot.as_str()).copied();
        if g.is_none() {
            report.violations.push(Violation::UnboundSlot {
                node: node.name.clone(),
                slot: slot.clone(),
            });
        }
        g
    });
    let index = out.len();
    match node.kind {
        NodeKind::Leaf => {
            if node.slot.is_none() {
                report.violations.push(Violation::LeafWithoutSlot {
                    node: node.name.clone(),
                });
            }
            let form = node.leaf_cost.unwrap_or_else(|| {
                report.violations.push(Violation::LeafWithoutCost {
                    node: node.name.clone(),
                });
                LeafCostForm::new(0.0, 1.0)
            });
            out.push(CompiledNode {
                path,
                group,
                body: Body::Leaf(form),
            });
        }
        NodeKind::Composite => {
            out.push(CompiledNode {
                path: path.clone(),
                group,
                body: Body::Composite(Vec::new()),
            });
            let mut children = Vec::with_capacity(node.children.len());
            for edge in &node.children {
                let child = compile(&edge.node, &path, slot_group, out, report);
                children.push((edge.multiplicity, child));
            }
            out[index].body = Body::Composite(children);
        }
    }
    index
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{ChildEdge, Rounding};
    use std::f64::consts::PI;

    fn tv(v: &[f64]) -> ToleranceVector {
        ToleranceVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_leaf_cost() {
        let model = BudgetModel::new(
            BudgetNode::leaf("r", "r", LeafCostForm::new(20.0, 4.0)),
            ParameterBinding::singletons(&["r"]),
        )
        .unwrap();
        assert_eq!(model.total_cost(&tv(&[0.5])).unwrap(), 80.0);
        assert_eq!(model.total_error(&tv(&[0.25])).unwrap(), 5.0);
    }

    #[test]
    fn empty_program_costs_nothing() {
        let tree = BudgetNode::composite(
            "prog",
            None,
            vec![
                ChildEdge::new(MultiplicityForm::constant(1.0), BudgetNode::leaf("a", "r", LeafCostForm::new(0.0, 4.0))),
                ChildEdge::new(MultiplicityForm::constant(1.0), BudgetNode::leaf("b", "r", LeafCostForm::new(0.0, 4.0))),
            ],
        );
        let model = BudgetModel::new(tree, ParameterBinding::singletons(&["r"])).unwrap();
        let e = model.evaluate(&tv(&[1e-5])).unwrap();
        assert_eq!(e.cost, 0.0);
        assert_eq!(e.error, 0.0);
    }

    #[test]
    fn childless_composite_error_is_self_error() {
        let tree = BudgetNode::composite("u", Some("u"), vec![]);
        let model = BudgetModel::bind(tree.clone(), ParameterBinding::singletons(&["u"])).unwrap();
        assert_eq!(model.total_error(&tv(&[0.03])).unwrap(), 0.03);
        assert!(BudgetModel::new(tree, ParameterBinding::singletons(&["u"])).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let model = BudgetModel::new(
            BudgetNode::leaf("r", "r", LeafCostForm::new(2.0, 4.0)),
            ParameterBinding::singletons(&["r"]),
        )
        .unwrap();
        assert!(matches!(
            model.total_cost(&tv(&[0.1, 0.1])),
            Err(ModelError::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn self_error_has_interior_minimum() {
        // E(ε) = ε + (c/ε)·n·r has its minimum at ε = √(c·n·r).
        let (c, n, r) = (3.0, 5.0, 1e-4);
        let tree = BudgetNode::composite(
            "u",
            Some("u"),
            vec![ChildEdge::new(
                MultiplicityForm::new(c, 1.0, Rounding::Continuous),
                BudgetNode::leaf("g", "r", LeafCostForm::new(n, 4.0)),
            )],
        );
        let model = BudgetModel::new(tree, ParameterBinding::singletons(&["u", "r"])).unwrap();
        let err = |u: f64| model.total_error(&tv(&[u, r])).unwrap();
        let best = (c * n * r).sqrt();
        let closed = 2.0 * best;
        assert!((err(best) - closed).abs() < 1e-15);
        for k in 1..=20 {
            let f = 1.0 + 0.05 * k as f64;
            assert!(err(best * f) > err(best));
            assert!(err(best / f) > err(best));
        }
        // Scan: the minimum over a fine grid sits next to the closed form.
        let scan = (0..4000)
            .map(|i| best * 0.5 + best * 1e-3 * i as f64 / 2.0)
            .min_by(|a, b| err(*a).total_cmp(&err(*b)))
            .unwrap();
        assert!((scan - best).abs() / best < 1e-3);
    }

    #[test]
    fn halving_self_error_doubles_children() {
        let tree = BudgetNode::composite(
            "u",
            Some("u"),
            vec![ChildEdge::new(
                MultiplicityForm::new(16.0 * PI, 1.0, Rounding::Continuous),
                BudgetNode::leaf("g", "r", LeafCostForm::new(20.0, 4.0)),
            )],
        );
        let model = BudgetModel::new(tree, ParameterBinding::singletons(&["u", "r"])).unwrap();
        let u = 0.0375;
        let a = model.evaluate(&tv(&[u, 1e-7])).unwrap();
        let b = model.evaluate(&tv(&[u / 2.0, 1e-7])).unwrap();
        assert_eq!(b.cost, 2.0 * a.cost);
        let (ca, cb) = (a.error - u, b.error - u / 2.0);
        assert!((cb - 2.0 * ca).abs() <= 1e-14 * cb);
    }
}
