//! Benchmark studies on the TFIM model, rendered as CSV.
//!
//! Every kind produces typed rows in spec order. The CSV body is a pure
//! function of the spec; wall-clock measurements go to [`ExperimentOutput::metadata`].

use std::fmt;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::anneal::{
    anneal, anneal_from, chain_rng, find_feasible_within, run_chain_past_feasible, tune_delta, warm_start,
    AnnealConfig, AnnealError,
};
use crate::budget::{BudgetModel, ToleranceVector};
use crate::stats::median;
use crate::tfim::{tfim_model, Preset, TfimConfig, TfimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// First-feasible versus optimized cost over a target sweep.
    CostVsEps,
    /// Two-parameter versus warm-started three-parameter optimum.
    Granularity,
    /// Optimized cost with `k` redundant rotation tolerances.
    Redundancy,
    /// Steps to the first feasible point against the parameter count.
    Runtime,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [Self::CostVsEps, Self::Granularity, Self::Redundancy, Self::Runtime];

    pub fn name(&self) -> &'static str {
        match self {
            Self::CostVsEps => "cost_vs_eps",
            Self::Granularity => "granularity",
            Self::Redundancy => "redundancy",
            Self::Runtime => "runtime",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.replace('-', "_"))
            .ok_or_else(|| ExperimentError::Spec(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error(transparent)]
    Model(#[from] TfimError),
    #[error(transparent)]
    Anneal(#[from] AnnealError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Strictly decreasing error targets.
    pub targets: Vec<f64>,
    #[serde(default)]
    pub tfim: TfimConfig,
    #[serde(default)]
    pub anneal: AnnealConfig,
    /// Redundant rotation-group counts (redundancy and runtime only).
    #[serde(default)]
    pub redundancy: Vec<usize>,
    /// Step budget for reaching the first feasible point from a cold start
    /// (redundancy and runtime only). Past `anneal.num_steps` the chain runs
    /// at `beta_max`.
    #[serde(default = "default_feasible_budget")]
    pub feasible_budget: usize,
    /// Replace `anneal.delta` by the tuned width for every model and target.
    #[serde(default = "default_tune_delta")]
    pub tune_delta: bool,
}

fn default_feasible_budget() -> usize {
    10_000_000
}

fn default_tune_delta() -> bool {
    true
}

impl ExperimentSpec {
    /// The declared defaults of each study.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let anneal = AnnealConfig {
            restarts: 20,
            ..AnnealConfig::default()
        };
        let (targets, n, redundancy) = match kind {
            ExperimentKind::CostVsEps | ExperimentKind::Granularity => (vec![1e-1, 1e-2, 1e-3, 1e-4], 10, vec![]),
            ExperimentKind::Redundancy => (vec![1e-1], 26, (0..=100).step_by(10).collect()),
            ExperimentKind::Runtime => (vec![1e-1], 26, vec![10, 20, 40, 80]),
        };
        Self {
            kind,
            targets,
            tfim: TfimConfig::with_n(n),
            anneal,
            redundancy,
            feasible_budget: default_feasible_budget(),
            tune_delta: default_tune_delta(),
        }
    }

    /// Annealing configuration for one model and target.
    fn config_for(&self, model: &BudgetModel, target: f64, deltas: &mut Vec<f64>) -> Result<AnnealConfig, ExperimentError> {
        let mut config = self.anneal.clone();
        if self.tune_delta {
            config.delta = tune_delta(model, target, &self.anneal)?;
        }
        deltas.push(config.delta);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Spec(msg));
        if self.targets.is_empty() {
            return bad("target sweep is empty".into());
        }
        if let Some(t) = self.targets.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return bad(format!("target {t} is not positive"));
        }
        if self.targets.windows(2).any(|w| w[1] >= w[0]) {
            return bad("targets must be strictly decreasing".into());
        }
        self.anneal.validate()?;
        if matches!(self.kind, ExperimentKind::Redundancy | ExperimentKind::Runtime) {
            if self.redundancy.is_empty() {
                return bad(format!("{} needs at least one redundancy count", self.kind));
            }
            if self.feasible_budget == 0 {
                return bad("feasible_budget must be at least 1".into());
            }
            let units = 4 * self.tfim.n;
            if let Some(k) = self.redundancy.iter().find(|k| **k + 1 > units) {
                return Err(TfimError::TooManyGroups { groups: k + 1, units }.into());
            }
        }
        Ok(())
    }

    /// Chain seeds used for every target and model.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.anneal.restarts as u64)
            .map(|r| self.anneal.seed.wrapping_add(r))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostVsEpsRow {
    pub epsilon_target: f64,
    pub feasible: bool,
    /// First feasible point of the winning chain.
    pub feasible_only_cost: f64,
    pub feasible_only_error: f64,
    pub feasible_only_theta: Vec<f64>,
    pub optimized_cost: f64,
    pub optimized_error: f64,
    pub optimized_theta: Vec<f64>,
    /// Cheapest first-feasible point over all chains.
    pub min_feasible_only_cost: f64,
    pub steps_to_feasible: Option<usize>,
}

impl CostVsEpsRow {
    pub fn ratio(&self) -> f64 {
        self.feasible_only_cost / self.optimized_cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GranularityRow {
    pub epsilon_target: f64,
    pub feasible_2param: bool,
    pub feasible_3param: bool,
    pub cost_2param: f64,
    pub error_2param: f64,
    pub theta_2param: Vec<f64>,
    pub cost_3param: f64,
    pub error_3param: f64,
    pub theta_3param: Vec<f64>,
}

impl GranularityRow {
    pub fn ratio(&self) -> f64 {
        self.cost_3param / self.cost_2param
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RedundancyRow {
    pub epsilon_target: f64,
    pub k_redundant: usize,
    pub feasible: bool,
    pub best_cost: f64,
    /// `best_cost` over the first row of the same target.
    pub best_cost_over_k0_ratio: f64,
    /// Search steps to the first feasible point of the winning seed.
    pub steps_to_feasible: Option<usize>,
    pub first_feasible_cost: f64,
    pub best_error: f64,
    pub theta: Vec<f64>,
    pub feasible_runs: usize,
    /// Median over seeds of first-feasible cost over best cost.
    pub median_improvement: f64,
}

impl RedundancyRow {
    /// First-feasible cost over best cost of the winning seed.
    pub fn improvement(&self) -> f64 {
        self.first_feasible_cost / self.best_cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeRow {
    pub epsilon_target: f64,
    pub k_redundant: usize,
    pub num_params: usize,
    /// Exhausted searches count as `feasible_budget + 1`.
    pub median_steps_to_feasible: f64,
    pub feasible_runs: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "rows", rename_all = "snake_case")]
pub enum ExperimentRows {
    CostVsEps(Vec<CostVsEpsRow>),
    Granularity(Vec<GranularityRow>),
    Redundancy(Vec<RedundancyRow>),
    Runtime(Vec<RuntimeRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub rows: ExperimentRows,
    /// Seconds spent on each row, in row order.
    pub row_wall_times: Vec<f64>,
    /// Median seconds per search, runtime rows only.
    pub median_wall_times: Vec<f64>,
    pub metadata: serde_json::Value,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, ExperimentError> {
    spec.validate()?;
    let started = Instant::now();
    let mut row_wall_times = Vec::new();
    let mut median_wall_times = Vec::new();
    let mut deltas = Vec::new();
    let mut timed = |f: &mut dyn FnMut() -> Result<(), ExperimentError>| -> Result<(), ExperimentError> {
        let t = Instant::now();
        f()?;
        row_wall_times.push(t.elapsed().as_secs_f64());
        Ok(())
    };

    let rows = match spec.kind {
        ExperimentKind::CostVsEps => {
            let model = tfim_model(&spec.tfim, Preset::ThreeParam)?;
            let mut rows = Vec::new();
            for &target in &spec.targets {
                timed(&mut || {
                    let config = spec.config_for(&model, target, &mut deltas)?;
                    rows.push(cost_vs_eps_row(&model, target, &config)?);
                    Ok(())
                })?;
            }
            ExperimentRows::CostVsEps(rows)
        }
        ExperimentKind::Granularity => {
            let two = tfim_model(&spec.tfim, Preset::TwoParam)?;
            let three = tfim_model(&spec.tfim, Preset::ThreeParam)?;
            let mut rows = Vec::new();
            for &target in &spec.targets {
                timed(&mut || {
                    let coarse = spec.config_for(&two, target, &mut deltas)?;
                    let fine = spec.config_for(&three, target, &mut deltas)?;
                    rows.push(granularity_row(&two, &three, target, &coarse, &fine)?);
                    Ok(())
                })?;
            }
            ExperimentRows::Granularity(rows)
        }
        ExperimentKind::Redundancy => {
            let mut rows: Vec<RedundancyRow> = Vec::new();
            for &target in &spec.targets {
                let first = rows.len();
                for &k in &spec.redundancy {
                    let model = tfim_model(&spec.tfim, Preset::Redundancy(k))?;
                    timed(&mut || {
                        let config = spec.config_for(&model, target, &mut deltas)?;
                        let mut row = redundancy_row(&model, k, target, &config, spec)?;
                        let base = rows.get(first).map_or(row.best_cost, |r| r.best_cost);
                        row.best_cost_over_k0_ratio = row.best_cost / base;
                        rows.push(row);
                        Ok(())
                    })?;
                }
            }
            ExperimentRows::Redundancy(rows)
        }
        ExperimentKind::Runtime => {
            let mut rows = Vec::new();
            for &target in &spec.targets {
                for &k in &spec.redundancy {
                    let model = tfim_model(&spec.tfim, Preset::Redundancy(k))?;
                    timed(&mut || {
                        let config = spec.config_for(&model, target, &mut deltas)?;
                        let (row, wall) = runtime_row(&model, k, target, &config, spec)?;
                        rows.push(row);
                        median_wall_times.push(wall);
                        Ok(())
                    })?;
                }
            }
            ExperimentRows::Runtime(rows)
        }
    };

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let metadata = json!({
        "kind": spec.kind,
        "n": spec.tfim.n,
        "targets": spec.targets,
        "tfim": spec.tfim,
        "anneal": spec.anneal,
        "redundancy": spec.redundancy,
        "feasible_budget": spec.feasible_budget,
        "tune_delta": spec.tune_delta,
        "deltas": deltas,
        "seeds": spec.seeds(),
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": timestamp,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "row_wall_times_seconds": row_wall_times,
        "median_wall_times_seconds": median_wall_times,
    });
    Ok(ExperimentOutput {
        rows,
        row_wall_times,
        median_wall_times,
        metadata,
    })
}

fn cost_vs_eps_row(model: &BudgetModel, target: f64, config: &AnnealConfig) -> Result<CostVsEpsRow, ExperimentError> {
    let result = anneal(model, target, config)?;
    let min_first = result
        .runs
        .iter()
        .filter_map(|r| r.first_feasible_cost)
        .fold(f64::INFINITY, f64::min);
    let (ff_theta, ff_cost, ff_error) = match &result.first_feasible_theta {
        Some(theta) => (
            theta.values().to_vec(),
            result.first_feasible_cost.unwrap_or(f64::NAN),
            result.first_feasible_error.unwrap_or(f64::NAN),
        ),
        None => (Vec::new(), f64::NAN, f64::NAN),
    };
    Ok(CostVsEpsRow {
        epsilon_target: target,
        feasible: result.feasible,
        feasible_only_cost: ff_cost,
        feasible_only_error: ff_error,
        feasible_only_theta: ff_theta,
        optimized_cost: result.best_cost,
        optimized_error: result.best_error,
        optimized_theta: result.best_theta.values().to_vec(),
        min_feasible_only_cost: min_first,
        steps_to_feasible: result.steps_to_feasible,
    })
}

fn granularity_row(
    two: &BudgetModel,
    three: &BudgetModel,
    target: f64,
    coarse_config: &AnnealConfig,
    fine_config: &AnnealConfig,
) -> Result<GranularityRow, ExperimentError> {
    let coarse = anneal(two, target, coarse_config)?;
    let init = warm_start(two.binding(), &coarse.best_theta, three.binding())?;
    let fine = anneal_from(three, target, fine_config, &init)?;
    Ok(GranularityRow {
        epsilon_target: target,
        feasible_2param: coarse.feasible,
        feasible_3param: fine.feasible,
        cost_2param: coarse.best_cost,
        error_2param: coarse.best_error,
        theta_2param: coarse.best_theta.values().to_vec(),
        cost_3param: fine.best_cost,
        error_3param: fine.best_error,
        theta_3param: fine.best_theta.values().to_vec(),
    })
}

/// One chain per seed from `epsilon_init`: it runs until feasible and then
/// `num_steps` more steps. The row keeps the cheapest point over all seeds.
fn redundancy_row(
    model: &BudgetModel,
    k: usize,
    target: f64,
    config: &AnnealConfig,
    spec: &ExperimentSpec,
) -> Result<RedundancyRow, ExperimentError> {
    let mut row = RedundancyRow {
        epsilon_target: target,
        k_redundant: k,
        feasible: false,
        best_cost: f64::NAN,
        best_cost_over_k0_ratio: f64::NAN,
        steps_to_feasible: None,
        first_feasible_cost: f64::NAN,
        best_error: f64::NAN,
        theta: Vec::new(),
        feasible_runs: 0,
        median_improvement: f64::NAN,
    };
    let init = ToleranceVector::uniform(model.dimension(), config.epsilon_init).map_err(AnnealError::from)?;
    let mut improvements = Vec::new();
    for seed in spec.seeds() {
        let result = run_chain_past_feasible(model, target, config, init.clone(), seed, chain_rng(seed), spec.feasible_budget)?;
        let Some(first_cost) = result.first_feasible_cost else {
            continue;
        };
        row.feasible_runs += 1;
        improvements.push(first_cost / result.best_cost);
        if !row.feasible || result.best_cost < row.best_cost {
            row.feasible = true;
            row.best_cost = result.best_cost;
            row.best_error = result.best_error;
            row.theta = result.best_theta.values().to_vec();
            row.first_feasible_cost = first_cost;
            row.steps_to_feasible = result.steps_to_feasible;
        }
    }
    if !improvements.is_empty() {
        row.median_improvement = median(&improvements);
    }
    Ok(row)
}

fn runtime_row(
    model: &BudgetModel,
    k: usize,
    target: f64,
    config: &AnnealConfig,
    spec: &ExperimentSpec,
) -> Result<(RuntimeRow, f64), ExperimentError> {
    let mut steps = Vec::new();
    let mut walls = Vec::new();
    let mut feasible_runs = 0;
    for seed in spec.seeds() {
        let config = AnnealConfig {
            seed,
            ..config.clone()
        };
        let t = Instant::now();
        match find_feasible_within(model, target, &config, spec.feasible_budget) {
            Ok(p) => {
                feasible_runs += 1;
                steps.push(p.steps as f64);
            }
            Err(AnnealError::Exhausted { .. }) => steps.push((spec.feasible_budget + 1) as f64),
            Err(e) => return Err(e.into()),
        }
        walls.push(t.elapsed().as_secs_f64());
    }
    let row = RuntimeRow {
        epsilon_target: target,
        k_redundant: k,
        num_params: model.dimension(),
        median_steps_to_feasible: median(&steps),
        feasible_runs,
        runs: steps.len(),
    };
    Ok((row, median(&walls)))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn theta(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

fn status(feasible: bool) -> &'static str {
    if feasible {
        "ok"
    } else {
        "infeasible"
    }
}

fn opt(v: Option<usize>) -> String {
    v.map(|s| s.to_string()).unwrap_or_default()
}

impl ExperimentRows {
    pub fn header(&self) -> &'static str {
        match self {
            Self::CostVsEps(_) => "epsilon_target,feasible_only_cost,optimized_cost,ratio,feasible_only_error,optimized_error,min_feasible_only_cost,steps_to_feasible,feasible_only_theta,optimized_theta,status",
            Self::Granularity(_) => "epsilon_target,cost_2param,cost_3param,ratio,error_2param,error_3param,theta_2param,theta_3param,status",
            Self::Redundancy(_) => "epsilon_target,k_redundant,best_cost,best_cost_over_k0_ratio,steps_to_feasible,first_feasible_cost,improvement,median_improvement,best_error,feasible_runs,theta,status",
            Self::Runtime(_) => "epsilon_target,k_redundant,num_params,median_steps_to_feasible,feasible_runs,runs,status",
        }
    }

    /// Header plus one LF-terminated line per row.
    pub fn to_csv(&self) -> String {
        let mut lines = vec![self.header().to_owned()];
        match self {
            Self::CostVsEps(rows) => lines.extend(rows.iter().map(|r| {
                [
                    num(r.epsilon_target),
                    num(r.feasible_only_cost),
                    num(r.optimized_cost),
                    num(r.ratio()),
                    num(r.feasible_only_error),
                    num(r.optimized_error),
                    num(r.min_feasible_only_cost),
                    opt(r.steps_to_feasible),
                    theta(&r.feasible_only_theta),
                    theta(&r.optimized_theta),
                    status(r.feasible).into(),
                ]
                .join(",")
            })),
            Self::Granularity(rows) => lines.extend(rows.iter().map(|r| {
                let st = match (r.feasible_2param, r.feasible_3param) {
                    (true, true) => "ok",
                    (false, true) => "infeasible_2param",
                    (true, false) => "infeasible_3param",
                    (false, false) => "infeasible",
                };
                [
                    num(r.epsilon_target),
                    num(r.cost_2param),
                    num(r.cost_3param),
                    num(r.ratio()),
                    num(r.error_2param),
                    num(r.error_3param),
                    theta(&r.theta_2param),
                    theta(&r.theta_3param),
                    st.into(),
                ]
                .join(",")
            })),
            Self::Redundancy(rows) => lines.extend(rows.iter().map(|r| {
                [
                    num(r.epsilon_target),
                    r.k_redundant.to_string(),
                    num(r.best_cost),
                    num(r.best_cost_over_k0_ratio),
                    opt(r.steps_to_feasible),
                    num(r.first_feasible_cost),
                    num(r.improvement()),
                    num(r.median_improvement),
                    num(r.best_error),
                    r.feasible_runs.to_string(),
                    theta(&r.theta),
                    status(r.feasible).into(),
                ]
                .join(",")
            })),
            Self::Runtime(rows) => lines.extend(rows.iter().map(|r| {
                [
                    num(r.epsilon_target),
                    r.k_redundant.to_string(),
                    r.num_params.to_string(),
                    num(r.median_steps_to_feasible),
                    r.feasible_runs.to_string(),
                    r.runs.to_string(),
                    status(r.feasible_runs == r.runs).into(),
                ]
                .join(",")
            })),
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

/// Parse a `;`-joined tolerance list as written in the CSV.
pub fn parse_theta(field: &str) -> Result<ToleranceVector, ExperimentError> {
    let values = field
        .split(';')
        .map(|v| v.parse::<f64>().map_err(|e| ExperimentError::Spec(format!("bad tolerance `{v}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    ToleranceVector::new(values).map_err(|e| ExperimentError::Spec(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for kind in ExperimentKind::ALL {
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
        assert_eq!("cost-vs-eps".parse::<ExperimentKind>().unwrap(), ExperimentKind::CostVsEps);
        assert!("fig9".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = ExperimentSpec::defaults(ExperimentKind::CostVsEps);
        assert!(spec.validate().is_ok());
        spec.targets = vec![1e-2, 1e-1];
        assert!(spec.validate().is_err());
        spec.targets = vec![];
        assert!(spec.validate().is_err());
        spec.targets = vec![1e-1, 1e-1];
        assert!(spec.validate().is_err());

        let mut spec = ExperimentSpec::defaults(ExperimentKind::Redundancy);
        assert!(spec.validate().is_ok());
        spec.tfim.n = 10;
        assert!(matches!(spec.validate(), Err(ExperimentError::Model(TfimError::TooManyGroups { .. }))));
        spec.redundancy.clear();
        assert!(spec.validate().is_err());
    }

    #[test]
    fn small_cost_vs_eps_csv() {
        let spec = ExperimentSpec {
            targets: vec![1e-1, 1e-2],
            anneal: AnnealConfig {
                restarts: 2,
                ..AnnealConfig::default()
            },
            ..ExperimentSpec::defaults(ExperimentKind::CostVsEps)
        };
        let out = run_experiment(&spec).unwrap();
        let csv = out.rows.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], out.rows.header());
        assert!(!csv.contains('\r'));
        let model = tfim_model(&spec.tfim, Preset::ThreeParam).unwrap();
        let ExperimentRows::CostVsEps(rows) = &out.rows else {
            panic!("wrong kind")
        };
        for (line, row) in lines[1..].iter().zip(rows) {
            assert!(row.optimized_cost <= row.feasible_only_cost);
            let fields: Vec<&str> = line.split(',').collect();
            let theta = parse_theta(fields[9]).unwrap();
            assert_eq!(model.total_cost(&theta).unwrap(), fields[2].parse::<f64>().unwrap());
            assert_eq!(model.total_error(&theta).unwrap(), fields[5].parse::<f64>().unwrap());
        }
        assert_eq!(out.metadata["seeds"], json!([0, 1]));
    }
}
