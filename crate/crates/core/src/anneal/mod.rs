//! Two-mode annealing over tolerance vectors.
//!
//! While the composed error exceeds the target the chain anneals on the error
//! (mode 1); once feasible it anneals on the cost (mode 2), dropping back to
//! mode 1 whenever a step makes it infeasible again. Proposals pick one entry
//! uniformly and multiply or divide it by a factor in `(1, 1 + δ]`. Energy
//! differences are relative changes of the active objective, scaled per mode.
//! The inverse temperature rises linearly from 0 to `beta_max` over
//! `num_steps` steps.

mod grid;
mod tune;
mod warm;

pub use grid::{grid_search_reference, log_grid, GridOptimum, MAX_GRID_DIMENSION, MAX_GRID_POINTS};
pub use tune::{measure_acceptance, tune_delta, DELTA_RANGE, PILOT_STEPS, TARGET_ACCEPTANCE};
pub use warm::warm_start;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{BudgetModel, Evaluation, ModelError, ToleranceVector};

/// Lower bound on `|old|` in the relative energy difference.
pub const RELATIVE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnealError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid annealing configuration: {0}")]
    Config(String),
    #[error("no feasible point within {steps} steps (lowest error reached {best_error:e})")]
    Exhausted { best_error: f64, steps: usize },
    #[error("bindings do not refine: {0}")]
    Structure(String),
    #[error("invalid grid: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    pub num_steps: usize,
    pub beta_max: f64,
    /// Proposal width: factors are drawn from `(1, 1 + delta]`.
    pub delta: f64,
    pub mode_scale_error: f64,
    pub mode_scale_cost: f64,
    pub epsilon_init: f64,
    pub seed: u64,
    /// Independent chains with seeds `seed, seed + 1, …`.
    pub restarts: usize,
    /// Keep the per-step trace of the best run.
    pub trace: bool,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            num_steps: 5000,
            beta_max: 10.0,
            delta: 0.5,
            mode_scale_error: 1.0,
            mode_scale_cost: 1.0,
            epsilon_init: 0.1,
            seed: 0,
            restarts: 1,
            trace: false,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<(), AnnealError> {
        let bad = |msg: &str| Err(AnnealError::Config(msg.to_owned()));
        if self.num_steps == 0 {
            return bad("num_steps must be at least 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.beta_max >= 0.0 && self.beta_max.is_finite()) {
            return bad("beta_max must be finite and non-negative");
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta must be finite and non-negative");
        }
        if !(self.mode_scale_error > 0.0 && self.mode_scale_cost > 0.0) {
            return bad("mode scales must be positive");
        }
        if !(self.epsilon_init > 0.0 && self.epsilon_init < 1.0) {
            return bad("epsilon_init must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn delta_beta(&self) -> f64 {
        self.beta_max / self.num_steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    ReduceError,
    ReduceCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    /// Mode chosen from the state before the step.
    pub mode: Mode,
    pub index: usize,
    pub delta_e: f64,
    pub accepted: bool,
    /// State after the step.
    pub cost: f64,
    pub error: f64,
}

/// Outcome of one chain, kept for every restart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub feasible: bool,
    pub best_cost: f64,
    pub best_error: f64,
    pub first_feasible_cost: Option<f64>,
    pub steps_to_feasible: Option<usize>,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealResult {
    /// Whether any visited point met the target.
    pub feasible: bool,
    /// Cheapest feasible point, or the lowest-error point if none was feasible.
    pub best_theta: ToleranceVector,
    pub best_cost: f64,
    pub best_error: f64,
    pub first_feasible_theta: Option<ToleranceVector>,
    pub first_feasible_cost: Option<f64>,
    pub first_feasible_error: Option<f64>,
    pub steps_to_feasible: Option<usize>,
    pub initial_cost: f64,
    pub initial_error: f64,
    pub acceptance_rate: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRecord>,
    pub runs: Vec<RunSummary>,
}

impl AnnealResult {
    fn summary(&self) -> RunSummary {
        RunSummary {
            seed: self.seed,
            feasible: self.feasible,
            best_cost: self.best_cost,
            best_error: self.best_error,
            first_feasible_cost: self.first_feasible_cost,
            steps_to_feasible: self.steps_to_feasible,
            acceptance_rate: self.acceptance_rate,
        }
    }

    /// True if `self` should be preferred over `other`.
    fn beats(&self, other: &AnnealResult) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.best_cost < other.best_cost,
            (false, false) => self.best_error < other.best_error,
        }
    }
}

/// `min(1, exp(-β·ΔE))`, exactly 1 for `ΔE <= 0`.
pub fn acceptance_probability(delta_e: f64, beta: f64) -> f64 {
    if delta_e <= 0.0 {
        return 1.0;
    }
    (-beta * delta_e).exp().min(1.0)
}

/// Scale entry `index` up (`multiply`) or down by `1 + (1 - u)·δ`, with
/// `u ∈ [0, 1)`. The result is clamped into the valid tolerance range.
pub fn apply_move(theta: &ToleranceVector, index: usize, multiply: bool, u: f64, delta: f64) -> ToleranceVector {
    let factor = 1.0 + (1.0 - u) * delta;
    let old = theta.get(index);
    let mut out = theta.clone();
    out.set_clamped(index, if multiply { old * factor } else { old / factor });
    out
}

/// Draw a single-entry proposal. Consumes three uniforms: index, direction,
/// factor.
pub fn propose<R: Rng + ?Sized>(theta: &ToleranceVector, delta: f64, rng: &mut R) -> (ToleranceVector, usize) {
    let len = theta.len();
    let index = ((rng.random::<f64>() * len as f64) as usize).min(len - 1);
    let multiply = rng.random::<f64>() < 0.5;
    let u = rng.random::<f64>();
    (apply_move(theta, index, multiply, u, delta), index)
}

fn relative_change(new: f64, old: f64) -> f64 {
    (new - old) / old.abs().max(RELATIVE_FLOOR)
}

/// A single annealing chain. Exposed so callers can drive steps manually.
pub struct Chain<'a, R> {
    model: &'a BudgetModel,
    target: f64,
    config: &'a AnnealConfig,
    theta: ToleranceVector,
    current: Evaluation,
    beta: f64,
    /// When set, β stays at this value instead of following the schedule.
    fixed_beta: Option<f64>,
    step: usize,
    rng: R,
}

impl<'a, R: Rng> Chain<'a, R> {
    pub fn new(
        model: &'a BudgetModel,
        target: f64,
        config: &'a AnnealConfig,
        init: ToleranceVector,
        rng: R,
    ) -> Result<Self, AnnealError> {
        let current = model.evaluate(&init)?;
        Ok(Self {
            model,
            target,
            config,
            theta: init,
            current,
            beta: 0.0,
            fixed_beta: None,
            step: 0,
            rng,
        })
    }

    pub(crate) fn with_fixed_beta(mut self, beta: f64) -> Self {
        self.fixed_beta = Some(beta);
        self.beta = beta;
        self
    }

    pub fn theta(&self) -> &ToleranceVector {
        &self.theta
    }

    pub fn current(&self) -> Evaluation {
        self.current
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_feasible(&self) -> bool {
        self.current.error <= self.target
    }

    pub fn step(&mut self) -> TraceRecord {
        let mode = if self.is_feasible() {
            Mode::ReduceCost
        } else {
            Mode::ReduceError
        };
        let (candidate, index) = propose(&self.theta, self.config.delta, &mut self.rng);
        let next = self
            .model
            .evaluate(&candidate)
            .expect("proposals stay in the tolerance domain");
        let delta_e = match mode {
            Mode::ReduceCost => self.config.mode_scale_cost * relative_change(next.cost, self.current.cost),
            Mode::ReduceError => self.config.mode_scale_error * relative_change(next.error, self.current.error),
        };
        let p = acceptance_probability(delta_e, self.beta);
        let accepted = self.rng.random::<f64>() <= p;
        if accepted {
            self.theta = candidate;
            self.current = next;
        }
        self.step += 1;
        self.beta = match self.fixed_beta {
            Some(beta) => beta,
            None => (self.beta + self.config.delta_beta()).min(self.config.beta_max),
        };
        TraceRecord {
            step: self.step - 1,
            mode,
            index,
            delta_e,
            accepted,
            cost: self.current.cost,
            error: self.current.error,
        }
    }
}

fn check_target(target: f64) -> Result<(), AnnealError> {
    if target.is_nan() || target < 0.0 {
        return Err(AnnealError::Config(format!("target error {target} must be non-negative")));
    }
    Ok(())
}

fn initial_theta(model: &BudgetModel, config: &AnnealConfig) -> Result<ToleranceVector, AnnealError> {
    Ok(ToleranceVector::uniform(model.dimension(), config.epsilon_init)?)
}

/// Run one full chain of `config.num_steps` steps.
pub fn run_chain<R: Rng>(
    model: &BudgetModel,
    target: f64,
    config: &AnnealConfig,
    init: ToleranceVector,
    seed: u64,
    rng: R,
) -> Result<AnnealResult, AnnealError> {
    drive(model, target, config, init, seed, rng, None)
}

/// Run a chain until it first turns feasible (at most `search_budget` steps),
/// then `config.num_steps` further steps. β follows the usual schedule and
/// stays at `beta_max` once reached.
pub fn run_chain_past_feasible<R: Rng>(
    model: &BudgetModel,
    target: f64,
    config: &AnnealConfig,
    init: ToleranceVector,
    seed: u64,
    rng: R,
    search_budget: usize,
) -> Result<AnnealResult, AnnealError> {
    drive(model, target, config, init, seed, rng, Some(search_budget))
}

fn drive<R: Rng>(
    model: &BudgetModel,
    target: f64,
    config: &AnnealConfig,
    init: ToleranceVector,
    seed: u64,
    rng: R,
    search_budget: Option<usize>,
) -> Result<AnnealResult, AnnealError> {
    let mut chain = Chain::new(model, target, config, init.clone(), rng)?;
    let initial = chain.current();

    let mut best_feasible: Option<(ToleranceVector, Evaluation)> = None;
    let mut lowest_error = (init.clone(), initial);
    let mut first: Option<(ToleranceVector, Evaluation, usize)> = None;
    if chain.is_feasible() {
        best_feasible = Some((init.clone(), initial));
        first = Some((init, initial, 0));
    }

    let horizon = |first: &Option<(ToleranceVector, Evaluation, usize)>| match (search_budget, first) {
        (None, _) => config.num_steps,
        (Some(budget), None) => budget,
        (Some(_), Some(f)) => f.2 + config.num_steps,
    };
    let mut trace = Vec::with_capacity(if config.trace { config.num_steps } else { 0 });
    let mut accepted = 0usize;
    let mut steps = 0usize;
    while steps < horizon(&first) {
        let record = chain.step();
        steps += 1;
        accepted += usize::from(record.accepted);
        if config.trace {
            trace.push(record);
        }
        if !record.accepted {
            continue;
        }
        let now = chain.current();
        if now.error < lowest_error.1.error {
            lowest_error = (chain.theta().clone(), now);
        }
        if chain.is_feasible() {
            if first.is_none() {
                first = Some((chain.theta().clone(), now, record.step + 1));
            }
            if best_feasible.as_ref().is_none_or(|(_, b)| now.cost < b.cost) {
                best_feasible = Some((chain.theta().clone(), now));
            }
        }
    }

    let feasible = best_feasible.is_some();
    let (best_theta, best) = best_feasible.unwrap_or(lowest_error);
    let result = AnnealResult {
        feasible,
        best_theta,
        best_cost: best.cost,
        best_error: best.error,
        first_feasible_cost: first.as_ref().map(|f| f.1.cost),
        first_feasible_error: first.as_ref().map(|f| f.1.error),
        steps_to_feasible: first.as_ref().map(|f| f.2),
        first_feasible_theta: first.map(|f| f.0),
        initial_cost: initial.cost,
        initial_error: initial.error,
        acceptance_rate: accepted as f64 / steps.max(1) as f64,
        seed,
        trace,
        runs: Vec::new(),
    };
    Ok(result)
}

pub fn chain_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Anneal from the uniform start `(epsilon_init, …)`.
pub fn anneal(model: &BudgetModel, target: f64, config: &AnnealConfig) -> Result<AnnealResult, AnnealError> {
    config.validate()?;
    let init = initial_theta(model, config)?;
    anneal_from(model, target, config, &init)
}

/// Anneal from a given start, e.g. one produced by [`warm_start`]. With
/// `restarts > 1` the best run is returned and every run is summarized.
pub fn anneal_from(
    model: &BudgetModel,
    target: f64,
    config: &AnnealConfig,
    init: &ToleranceVector,
) -> Result<AnnealResult, AnnealError> {
    config.validate()?;
    check_target(target)?;
    model.check_dimension(init)?;
    let mut best: Option<AnnealResult> = None;
    let mut runs = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let seed = config.seed.wrapping_add(r as u64);
        let result = run_chain(model, target, config, init.clone(), seed, chain_rng(seed))?;
        runs.push(result.summary());
        if best.as_ref().is_none_or(|b| result.beats(b)) {
            best = Some(result);
        }
    }
    let mut best = best.expect("at least one restart");
    best.runs = runs;
    Ok(best)
}

/// First feasible point of a mode-1 chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasiblePoint {
    pub theta: ToleranceVector,
    pub cost: f64,
    pub error: f64,
    pub steps: usize,
}

/// Run only the error-reduction mode until the target is met, using
/// `config.seed`. The trajectory coincides with [`anneal`]'s up to that point.
pub fn find_feasible(model: &BudgetModel, target: f64, config: &AnnealConfig) -> Result<FeasiblePoint, AnnealError> {
    find_feasible_within(model, target, config, config.num_steps)
}

/// [`find_feasible`] with a step budget decoupled from the schedule length.
/// Past `config.num_steps` the chain keeps running at `beta_max`.
pub fn find_feasible_within(
    model: &BudgetModel,
    target: f64,
    config: &AnnealConfig,
    max_steps: usize,
) -> Result<FeasiblePoint, AnnealError> {
    config.validate()?;
    check_target(target)?;
    let init = initial_theta(model, config)?;
    let mut chain = Chain::new(model, target, config, init, chain_rng(config.seed))?;
    let mut best_error = chain.current().error;
    let mut steps = 0;
    while !chain.is_feasible() {
        if steps == max_steps {
            return Err(AnnealError::Exhausted { best_error, steps });
        }
        chain.step();
        steps += 1;
        best_error = best_error.min(chain.current().error);
    }
    let now = chain.current();
    Ok(FeasiblePoint {
        theta: chain.theta().clone(),
        cost: now.cost,
        error: now.error,
        steps,
    })
}
