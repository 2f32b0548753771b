use crate::budget::{BudgetModel, ToleranceVector};

use super::{chain_rng, AnnealConfig, AnnealError, Chain};

/// Steps per pilot chain.
pub const PILOT_STEPS: usize = 1000;

/// Search interval for the proposal width.
pub const DELTA_RANGE: (f64, f64) = (1e-3, 4.0);

/// Acceptance band the tuner aims for.
pub const TARGET_ACCEPTANCE: (f64, f64) = (0.4, 0.6);

const MAX_ROUNDS: usize = 20;

/// Acceptance rate of a pilot chain run at the fixed inverse temperature
/// `config.beta_max` with proposal width `delta`, seeded from `config.seed`.
pub fn measure_acceptance(
    model: &BudgetModel,
    target: f64,
    config: &AnnealConfig,
    delta: f64,
    steps: usize,
) -> Result<f64, AnnealError> {
    let pilot = AnnealConfig {
        delta,
        ..config.clone()
    };
    let init = ToleranceVector::uniform(model.dimension(), config.epsilon_init)?;
    let mut chain = Chain::new(model, target, &pilot, init, chain_rng(config.seed))?.with_fixed_beta(config.beta_max);
    let accepted = (0..steps).filter(|_| chain.step().accepted).count();
    Ok(accepted as f64 / steps.max(1) as f64)
}

/// Bisect the proposal width (geometrically) over [`DELTA_RANGE`] until the
/// pilot acceptance rate falls inside [`TARGET_ACCEPTANCE`], for at most 20
/// rounds. If no width in the range can lower the acceptance rate enough and
/// the rate does not respond to the width, the smallest probe is returned.
pub fn tune_delta(model: &BudgetModel, target: f64, config: &AnnealConfig) -> Result<f64, AnnealError> {
    config.validate()?;
    let (lo_band, hi_band) = TARGET_ACCEPTANCE;
    let steps = PILOT_STEPS.min(config.num_steps.max(100));
    let rate = |delta: f64| measure_acceptance(model, target, config, delta, steps);
    let in_band = |a: f64| (lo_band..=hi_band).contains(&a);

    let (mut lo, mut hi) = DELTA_RANGE;
    let acc_lo = rate(lo)?;
    if in_band(acc_lo) {
        return Ok(lo);
    }
    let acc_hi = rate(hi)?;
    if in_band(acc_hi) {
        return Ok(hi);
    }
    if acc_hi > hi_band {
        return Ok(if acc_hi >= acc_lo { lo } else { hi });
    }
    if acc_lo < lo_band {
        return Ok(lo);
    }

    let mut mid = (lo * hi).sqrt();
    for _ in 0..MAX_ROUNDS {
        mid = (lo * hi).sqrt();
        let acc = rate(mid)?;
        if in_band(acc) {
            break;
        }
        if acc > hi_band {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::{BudgetNode, LeafCostForm, ParameterBinding};

    #[test]
    fn zero_beta_accepts_everything() {
        let model = crate::tfim::tfim_model(&Default::default(), crate::tfim::Preset::ThreeParam).unwrap();
        let config = AnnealConfig {
            beta_max: 0.0,
            ..AnnealConfig::default()
        };
        assert_eq!(measure_acceptance(&model, 0.1, &config, 2.0, 200).unwrap(), 1.0);
        assert_eq!(tune_delta(&model, 0.1, &config).unwrap(), DELTA_RANGE.0);
    }

    #[test]
    fn flat_objective_returns_smallest_probe() {
        let model = BudgetModel::new(
            BudgetNode::leaf("idle", "r", LeafCostForm::new(0.0, 4.0)),
            ParameterBinding::singletons(&["r"]),
        )
        .unwrap();
        assert_eq!(tune_delta(&model, 0.1, &AnnealConfig::default()).unwrap(), DELTA_RANGE.0);
    }
}
