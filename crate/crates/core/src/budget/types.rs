use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Smallest tolerance any slot may take.
pub const TOLERANCE_FLOOR: f64 = 1e-30;

/// Largest tolerance any slot may take (the largest double below one).
pub const MAX_TOLERANCE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Continuous,
    /// Round up to an integer, never below one.
    Ceil,
}

/// Number of child invocations as a function of the parent's self-error:
/// `f(ε) = coefficient · ε^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplicityForm {
    pub coefficient: f64,
    pub exponent: f64,
    #[serde(default)]
    pub rounding: Rounding,
}

impl MultiplicityForm {
    pub fn new(coefficient: f64, exponent: f64, rounding: Rounding) -> Self {
        Self {
            coefficient,
            exponent,
            rounding,
        }
    }

    /// A count that does not depend on the tolerance.
    pub fn constant(count: f64) -> Self {
        Self::new(count, 0.0, Rounding::Continuous)
    }

    pub fn with_rounding(mut self, rounding: Rounding) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn evaluate(&self, eps: f64) -> Result<f64, ModelError> {
        if eps <= 0.0 || eps.is_nan() {
            return Err(ModelError::NonPositiveTolerance(eps));
        }
        Ok(self.eval_positive(eps))
    }

    pub(crate) fn eval_positive(&self, eps: f64) -> f64 {
        // Common exponents get dedicated paths so that scaling ε by a power of
        // two scales the result exactly.
        let raw = if self.exponent == 0.0 {
            self.coefficient
        } else if self.exponent == 1.0 {
            self.coefficient / eps
        } else if self.exponent == 0.5 {
            self.coefficient / eps.sqrt()
        } else {
            self.coefficient * eps.powf(-self.exponent)
        };
        match self.rounding {
            Rounding::Continuous => raw,
            Rounding::Ceil => raw.ceil().max(1.0),
        }
    }
}

fn default_log_base() -> f64 {
    2.0
}

fn is_default_log_base(base: &f64) -> bool {
    *base == 2.0
}

/// Cost of a set of `count` identical synthesized gates:
/// `count · (gates_per_unit_logeps · log_base(1/ε) + additive_offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafCostForm {
    pub count: f64,
    pub gates_per_unit_logeps: f64,
    #[serde(default)]
    pub additive_offset: f64,
    #[serde(default = "default_log_base", skip_serializing_if = "is_default_log_base")]
    pub log_base: f64,
}

impl LeafCostForm {
    pub fn new(count: f64, gates_per_unit_logeps: f64) -> Self {
        Self {
            count,
            gates_per_unit_logeps,
            additive_offset: 0.0,
            log_base: 2.0,
        }
    }

    pub fn with_offset(mut self, additive_offset: f64) -> Self {
        self.additive_offset = additive_offset;
        self
    }

    pub fn with_log_base(mut self, log_base: f64) -> Self {
        self.log_base = log_base;
        self
    }

    /// Gates needed for one primitive at tolerance `eps`, clamped at zero.
    pub fn cost_per_instance(&self, eps: f64) -> f64 {
        let log_inv = if self.log_base == 2.0 {
            -eps.log2()
        } else {
            -eps.ln() / self.log_base.ln()
        };
        (self.gates_per_unit_logeps * log_inv + self.additive_offset).max(0.0)
    }

    pub fn cost(&self, eps: f64) -> f64 {
        self.count * self.cost_per_instance(eps)
    }

    pub fn error(&self, eps: f64) -> f64 {
        self.count * eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Composite,
    Leaf,
}

/// One subroutine set in the decomposition tree.
///
/// `slot` names the tolerance parameter the node consumes: the decomposition
/// error for composites, the per-primitive tolerance for leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetNode {
    pub name: String,
    pub kind: NodeKind,
    #[serde(rename = "self_error_group", default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ChildEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_cost: Option<LeafCostForm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChildEdge {
    pub multiplicity: MultiplicityForm,
    pub node: BudgetNode,
}

impl ChildEdge {
    pub fn new(multiplicity: MultiplicityForm, node: BudgetNode) -> Self {
        Self { multiplicity, node }
    }
}

impl BudgetNode {
    pub fn leaf(name: impl Into<String>, slot: impl Into<String>, cost: LeafCostForm) -> Self {
        Self {
            name: name.into(),
            kind: NodeKind::Leaf,
            slot: Some(slot.into()),
            children: Vec::new(),
            leaf_cost: Some(cost),
        }
    }

    pub fn composite(name: impl Into<String>, slot: Option<&str>, children: Vec<ChildEdge>) -> Self {
        Self {
            name: name.into(),
            kind: NodeKind::Composite,
            slot: slot.map(str::to_owned),
            children,
            leaf_cost: None,
        }
    }

    /// Copy of the tree with every multiplicity switched to `rounding`.
    pub fn with_rounding(&self, rounding: Rounding) -> Self {
        let mut out = self.clone();
        out.set_rounding(rounding);
        out
    }

    fn set_rounding(&mut self, rounding: Rounding) {
        for edge in &mut self.children {
            edge.multiplicity.rounding = rounding;
            edge.node.set_rounding(rounding);
        }
    }

    /// Every slot referenced anywhere in the tree, in depth-first order,
    /// without duplicates.
    pub fn slots(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_slots(&mut out);
        out
    }

    fn collect_slots(&self, out: &mut Vec<String>) {
        if let Some(slot) = &self.slot {
            if !out.contains(slot) {
                out.push(slot.clone());
            }
        }
        for edge in &self.children {
            edge.node.collect_slots(out);
        }
    }
}

/// Partition of parameter slots into groups that share one tolerance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBinding {
    pub groups: IndexMap<String, Vec<String>>,
}

impl ParameterBinding {
    pub fn new<I, G, S>(groups: I) -> Self
    where
        I: IntoIterator<Item = (G, Vec<S>)>,
        G: Into<String>,
        S: Into<String>,
    {
        Self {
            groups: groups
                .into_iter()
                .map(|(g, slots)| (g.into(), slots.into_iter().map(Into::into).collect()))
                .collect(),
        }
    }

    /// One group per slot, named after the slot.
    pub fn singletons<S: AsRef<str>>(slots: &[S]) -> Self {
        Self::new(slots.iter().map(|s| (s.as_ref(), vec![s.as_ref()])))
    }

    pub fn dimension(&self) -> usize {
        self.groups.len()
    }

    pub fn group_names(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn group_index(&self, group: &str) -> Option<usize> {
        self.groups.get_index_of(group)
    }

    /// Index of the first group containing `slot`.
    pub fn group_of_slot(&self, slot: &str) -> Option<usize> {
        self.groups
            .values()
            .position(|slots| slots.iter().any(|s| s == slot))
    }

    /// Merge group `second` into `first`; `first` keeps its name and position.
    pub fn merged(&self, first: &str, second: &str) -> Result<Self, ModelError> {
        if first == second {
            return Err(ModelError::Binding(format!("cannot merge `{first}` with itself")));
        }
        let moved = self
            .groups
            .get(second)
            .ok_or_else(|| ModelError::Binding(format!("unknown group `{second}`")))?
            .clone();
        let mut out = self.clone();
        out.groups
            .get_mut(first)
            .ok_or_else(|| ModelError::Binding(format!("unknown group `{first}`")))?
            .extend(moved);
        out.groups.shift_remove(second);
        Ok(out)
    }
}

/// One tolerance per binding group, each in `[TOLERANCE_FLOOR, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ToleranceVector(Vec<f64>);

impl ToleranceVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        for (index, &value) in values.iter().enumerate() {
            if !(TOLERANCE_FLOOR..1.0).contains(&value) {
                return Err(ModelError::Domain { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn uniform(dimension: usize, value: f64) -> Result<Self, ModelError> {
        Self::new(vec![value; dimension])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    /// Set one entry, clamping into the valid range.
    pub(crate) fn set_clamped(&mut self, index: usize, value: f64) {
        self.0[index] = value.clamp(TOLERANCE_FLOOR, MAX_TOLERANCE);
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for ToleranceVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Self::new(values).map_err(serde::de::Error::custom)
    }
}

/// On-disk model: a tree plus the binding of its slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub root: BudgetNode,
    pub binding: ParameterBinding,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicity_rejects_non_positive() {
        let f = MultiplicityForm::new(16.0, 1.0, Rounding::Continuous);
        assert!(matches!(f.evaluate(0.0), Err(ModelError::NonPositiveTolerance(_))));
        assert!(f.evaluate(-1.0).is_err());
        assert_eq!(f.evaluate(0.5).unwrap(), 32.0);
    }

    #[test]
    fn multiplicity_ceil_never_below_one() {
        let f = MultiplicityForm::new(0.25, 0.0, Rounding::Ceil);
        assert_eq!(f.evaluate(0.3).unwrap(), 1.0);
        let g = MultiplicityForm::new(16.0 * std::f64::consts::PI, 1.0, Rounding::Ceil);
        assert_eq!(g.evaluate(0.1).unwrap(), 503.0);
    }

    #[test]
    fn leaf_cost_clamps_at_zero() {
        let leaf = LeafCostForm::new(20.0, 4.0);
        assert_eq!(leaf.cost(0.5), 80.0);
        assert_eq!(leaf.cost(1.0), 0.0);
        assert_eq!(leaf.error(0.5), 10.0);
        let natural = LeafCostForm::new(1.0, 1.0).with_log_base(std::f64::consts::E);
        assert!((natural.cost(1e-3) - 1e3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn tolerance_vector_range() {
        assert!(ToleranceVector::new(vec![0.1, 0.5]).is_ok());
        assert!(matches!(
            ToleranceVector::new(vec![0.1, 0.0]),
            Err(ModelError::Domain { index: 1, .. })
        ));
        assert!(ToleranceVector::new(vec![1.0]).is_err());
        assert!(ToleranceVector::new(vec![1e-31]).is_err());
        assert!(ToleranceVector::new(vec![MAX_TOLERANCE]).is_ok());
        assert!(serde_json::from_str::<ToleranceVector>("[0.1, -2]").is_err());
    }

    #[test]
    fn binding_merge_keeps_first_position() {
        let b = ParameterBinding::singletons(&["a", "b", "c"]);
        let m = b.merged("b", "c").unwrap();
        assert_eq!(m.group_names().collect::<Vec<_>>(), ["a", "b"]);
        assert_eq!(m.groups["b"], ["b", "c"]);
        assert!(b.merged("a", "zz").is_err());
    }

    #[test]
    fn model_file_rejects_unknown_keys() {
        let text = r#"{"root": {"name": "g", "kind": "leaf", "self_error_group": "r",
            "leaf_cost": {"count": 1, "gates_per_unit_logeps": 4, "colour": 3}},
            "binding": {"groups": {"r": ["r"]}}}"#;
        let err = ModelFile::from_json(text).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        assert!(err.to_string().contains("line"), "{err}");
    }
}
