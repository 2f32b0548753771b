use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::types::{BudgetNode, NodeKind, ParameterBinding};

/// A single structural problem found in a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    UnboundSlot { node: String, slot: String },
    DoublyBoundSlot { slot: String, groups: Vec<String> },
    UnreferencedSlot { group: String, slot: String },
    EmptyGroup { group: String },
    EmptyComposite { node: String },
    NonPositiveCoefficient { node: String, child: usize },
    InvalidExponent { node: String, child: usize },
    SlotlessMultiplicity { node: String, child: usize },
    LeafWithoutCost { node: String },
    LeafWithoutSlot { node: String },
    LeafWithChildren { node: String },
    CompositeWithLeafCost { node: String },
    InvalidLeafCost { node: String, reason: &'static str },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnboundSlot { node, slot } => {
                write!(f, "slot `{slot}` used by `{node}` is unbound")
            }
            Violation::DoublyBoundSlot { slot, groups } => {
                write!(f, "slot doubly bound: `{slot}` appears in groups {}", groups.join(", "))
            }
            Violation::UnreferencedSlot { group, slot } => {
                write!(f, "group `{group}` binds slot `{slot}` which no node uses")
            }
            Violation::EmptyGroup { group } => write!(f, "group `{group}` is empty"),
            Violation::EmptyComposite { node } => write!(f, "composite `{node}` has no children"),
            Violation::NonPositiveCoefficient { node, child } => {
                write!(f, "non-positive coefficient on child {child} of `{node}`")
            }
            Violation::InvalidExponent { node, child } => {
                write!(f, "exponent on child {child} of `{node}` must be finite and non-negative")
            }
            Violation::SlotlessMultiplicity { node, child } => write!(
                f,
                "child {child} of `{node}` depends on a self-error but `{node}` has no slot"
            ),
            Violation::LeafWithoutCost { node } => write!(f, "leaf `{node}` has no leaf_cost"),
            Violation::LeafWithoutSlot { node } => write!(f, "leaf `{node}` has no slot"),
            Violation::LeafWithChildren { node } => write!(f, "leaf `{node}` has children"),
            Violation::CompositeWithLeafCost { node } => {
                write!(f, "composite `{node}` carries a leaf_cost")
            }
            Violation::InvalidLeafCost { node, reason } => {
                write!(f, "leaf `{node}`: {reason}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check the tree and binding for structural problems. Never fails; all
/// findings are collected into the report.
pub fn validate_model(tree: &BudgetNode, binding: &ParameterBinding) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut owners: HashMap<&str, Vec<String>> = HashMap::new();
    for (group, slots) in &binding.groups {
        if slots.is_empty() {
            report.violations.push(Violation::EmptyGroup {
                group: group.clone(),
            });
        }
        for slot in slots {
            let entry = owners.entry(slot.as_str()).or_default();
            if !entry.contains(group) {
                entry.push(group.clone());
            }
        }
    }
    let mut doubly: Vec<_> = owners
        .iter()
        .filter(|(_, groups)| groups.len() > 1)
        .map(|(slot, groups)| Violation::DoublyBoundSlot {
            slot: (*slot).to_owned(),
            groups: groups.clone(),
        })
        .collect();
    doubly.sort_by_key(|v| v.to_string());
    report.violations.extend(doubly);

    check_node(tree, &owners, &mut report);

    let used = tree.slots();
    for (group, slots) in &binding.groups {
        for slot in slots {
            if !used.contains(slot) {
                report.violations.push(Violation::UnreferencedSlot {
                    group: group.clone(),
                    slot: slot.clone(),
                });
            }
        }
    }
    report
}

fn check_node(node: &BudgetNode, owners: &HashMap<&str, Vec<String>>, report: &mut ValidationReport) {
    let name = || node.name.clone();
    if let Some(slot) = &node.slot {
        if !owners.contains_key(slot.as_str()) {
            report.violations.push(Violation::UnboundSlot {
                node: name(),
                slot: slot.clone(),
            });
        }
    }
    match node.kind {
        NodeKind::Leaf => {
            if !node.children.is_empty() {
                report.violations.push(Violation::LeafWithChildren { node: name() });
            }
            if node.slot.is_none() {
                report.violations.push(Violation::LeafWithoutSlot { node: name() });
            }
            match &node.leaf_cost {
                None => report.violations.push(Violation::LeafWithoutCost { node: name() }),
                Some(cost) => {
                    let reason = if !(cost.count >= 0.0 && cost.count.is_finite()) {
                        Some("count must be finite and non-negative")
                    } else if !(cost.gates_per_unit_logeps > 0.0 && cost.gates_per_unit_logeps.is_finite()) {
                        Some("gates_per_unit_logeps must be positive")
                    } else if !(cost.additive_offset >= 0.0 && cost.additive_offset.is_finite()) {
                        Some("additive_offset must be non-negative")
                    } else if !(cost.log_base > 1.0 && cost.log_base.is_finite()) {
                        Some("log_base must exceed one")
                    } else {
                        None
                    };
                    if let Some(reason) = reason {
                        report.violations.push(Violation::InvalidLeafCost { node: name(), reason });
                    }
                }
            }
        }
        NodeKind::Composite => {
            if node.leaf_cost.is_some() {
                report.violations.push(Violation::CompositeWithLeafCost { node: name() });
            }
            if node.children.is_empty() {
                report.violations.push(Violation::EmptyComposite { node: name() });
            }
            for (child, edge) in node.children.iter().enumerate() {
                let m = &edge.multiplicity;
                if !(m.coefficient > 0.0 && m.coefficient.is_finite()) {
                    report.violations.push(Violation::NonPositiveCoefficient { node: name(), child });
                }
                if !(m.exponent >= 0.0 && m.exponent.is_finite()) {
                    report.violations.push(Violation::InvalidExponent { node: name(), child });
                } else if m.exponent != 0.0 && node.slot.is_none() {
                    report.violations.push(Violation::SlotlessMultiplicity { node: name(), child });
                }
                check_node(&edge.node, owners, report);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{ChildEdge, LeafCostForm, MultiplicityForm};

    fn leaf(slot: &str) -> BudgetNode {
        BudgetNode::leaf("gates", slot, LeafCostForm::new(20.0, 4.0))
    }

    #[test]
    fn single_leaf_is_valid() {
        let report = validate_model(&leaf("r"), &ParameterBinding::singletons(&["r"]));
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn doubly_bound_slot() {
        let binding = ParameterBinding::new([("a", vec!["r"]), ("b", vec!["r"])]);
        let report = validate_model(&leaf("r"), &binding);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DoublyBoundSlot { slot, .. } if slot == "r")));
        assert!(report.to_string().contains("slot doubly bound"));
    }

    #[test]
    fn unbound_and_unreferenced() {
        let report = validate_model(&leaf("r"), &ParameterBinding::singletons(&["q"]));
        assert!(report.violations.contains(&Violation::UnboundSlot {
            node: "gates".into(),
            slot: "r".into()
        }));
        assert!(report.violations.contains(&Violation::UnreferencedSlot {
            group: "q".into(),
            slot: "q".into()
        }));
    }

    #[test]
    fn empty_composite_and_bad_coefficient() {
        let empty = BudgetNode::composite("u", Some("e"), vec![]);
        let report = validate_model(&empty, &ParameterBinding::singletons(&["e"]));
        assert_eq!(report.violations, vec![Violation::EmptyComposite { node: "u".into() }]);

        let bad = BudgetNode::composite(
            "u",
            None,
            vec![ChildEdge::new(MultiplicityForm::constant(-1.0), leaf("r"))],
        );
        let report = validate_model(&bad, &ParameterBinding::singletons(&["r"]));
        assert_eq!(
            report.violations,
            vec![Violation::NonPositiveCoefficient { node: "u".into(), child: 0 }]
        );
    }

    #[test]
    fn multiplicity_needs_slot() {
        let tree = BudgetNode::composite(
            "u",
            None,
            vec![ChildEdge::new(MultiplicityForm::new(1.0, 1.0, Default::default()), leaf("r"))],
        );
        let report = validate_model(&tree, &ParameterBinding::singletons(&["r"]));
        assert_eq!(
            report.violations,
            vec![Violation::SlotlessMultiplicity { node: "u".into(), child: 0 }]
        );
    }

    #[test]
    fn zero_count_leaf_is_allowed() {
        let tree = BudgetNode::leaf("idle", "r", LeafCostForm::new(0.0, 4.0));
        assert!(validate_model(&tree, &ParameterBinding::singletons(&["r"])).is_ok());
    }
}
