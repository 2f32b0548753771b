#![allow(dead_code)]

use errbudget::budget::{BudgetNode, ChildEdge, LeafCostForm, MultiplicityForm, Rounding};
use errbudget::{BudgetModel, ParameterBinding, ToleranceVector};
use rand::seq::SliceRandom;
use rand::Rng;

pub const SLOTS: [&str; 5] = ["a", "b", "c", "d", "e"];

fn node<R: Rng>(rng: &mut R, depth: usize, rounding: Rounding, name: &mut usize) -> BudgetNode {
    *name += 1;
    let id = format!("n{name}");
    let slot = SLOTS[rng.random_range(0..SLOTS.len())];
    if depth == 0 || rng.random_bool(0.3) {
        let count = rng.random_range(0..=20) as f64;
        let cost = LeafCostForm::new(count, rng.random_range(1.0..10.0)).with_offset(rng.random_range(0.0..5.0));
        return BudgetNode::leaf(id, slot, cost);
    }
    let own = rng.random_bool(0.7).then_some(slot);
    let children = (0..rng.random_range(1..=3))
        .map(|_| {
            let exponent = if own.is_some() { [0.0, 0.5, 1.0][rng.random_range(0..3)] } else { 0.0 };
            let form = MultiplicityForm::new(rng.random_range(1.0..5.0), exponent, rounding);
            ChildEdge::new(form, node(rng, depth - 1, rounding, name))
        })
        .collect();
    BudgetNode::composite(id, own, children)
}

/// Random well-formed tree of depth at most `depth` with a random binding of
/// its slots into groups.
pub fn random_model<R: Rng>(rng: &mut R, depth: usize, rounding: Rounding) -> BudgetModel {
    let tree = node(rng, depth, rounding, &mut 0);
    let mut slots = tree.slots();
    slots.shuffle(rng);
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for slot in slots {
        if groups.is_empty() || rng.random_bool(0.5) {
            groups.push((format!("g{}", groups.len()), vec![slot]));
        } else {
            let g = rng.random_range(0..groups.len());
            groups[g].1.push(slot);
        }
    }
    BudgetModel::new(tree, ParameterBinding::new(groups)).expect("generated model is valid")
}

pub fn random_theta<R: Rng>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> ToleranceVector {
    let (a, b) = (lo.ln(), hi.ln());
    ToleranceVector::new((0..dim).map(|_| rng.random_range(a..b).exp()).collect()).unwrap()
}

pub fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
