use serde::Serialize;

use crate::budget::{BudgetModel, ToleranceVector};

use super::AnnealError;

pub const MAX_GRID_DIMENSION: usize = 4;
pub const MAX_GRID_POINTS: u64 = 10_000_000;

/// `n` log-spaced values from `lo` (inclusive) towards `hi` (exclusive).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridOptimum {
    pub theta: ToleranceVector,
    pub cost: f64,
    pub error: f64,
    pub evaluated: u64,
}

/// Exhaustive search for the cheapest feasible point on a tensor grid.
/// Ties keep the first point in lexicographic order of grid indices.
pub fn grid_search_reference(
    model: &BudgetModel,
    target: f64,
    grid: &[Vec<f64>],
) -> Result<GridOptimum, AnnealError> {
    if grid.len() != model.dimension() {
        return Err(AnnealError::Grid(format!(
            "{} axes for a {}-parameter model",
            grid.len(),
            model.dimension()
        )));
    }
    if grid.len() > MAX_GRID_DIMENSION {
        return Err(AnnealError::Grid(format!("at most {MAX_GRID_DIMENSION} dimensions")));
    }
    let total = grid.iter().map(|axis| axis.len() as u64).product::<u64>();
    if total > MAX_GRID_POINTS {
        return Err(AnnealError::Grid(format!("{total} points exceed {MAX_GRID_POINTS}")));
    }
    if total == 0 {
        return Err(AnnealError::Exhausted {
            best_error: f64::INFINITY,
            steps: 0,
        });
    }

    let mut index = vec![0usize; grid.len()];
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut lowest_error = f64::INFINITY;
    for _ in 0..total {
        let point: Vec<f64> = index.iter().zip(grid).map(|(&i, axis)| axis[i]).collect();
        let theta = ToleranceVector::new(point)?;
        let e = model.evaluate(&theta)?;
        lowest_error = lowest_error.min(e.error);
        if e.error <= target && best.as_ref().is_none_or(|b| e.cost < b.1) {
            best = Some((theta.into_inner(), e.cost, e.error));
        }
        for (d, axis) in grid.iter().enumerate().rev() {
            index[d] += 1;
            if index[d] < axis.len() {
                break;
            }
            index[d] = 0;
        }
    }
    let (theta, cost, error) = best.ok_or(AnnealError::Exhausted {
        best_error: lowest_error,
        steps: total as usize,
    })?;
    Ok(GridOptimum {
        theta: ToleranceVector::new(theta)?,
        cost,
        error,
        evaluated: total,
    })
}
