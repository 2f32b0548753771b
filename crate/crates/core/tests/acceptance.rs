//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{random_model, random_theta, relative};
use errbudget::anneal::{grid_search_reference, log_grid};
use errbudget::budget::{ModelError, Rounding};
use errbudget::experiment::{run_experiment, ExperimentKind, ExperimentRows, ExperimentSpec};
use errbudget::norm::{trotter_sweep, verify_composition_bound, SplitOrder, TfimHamiltonianSpec};
use errbudget::stats::{geometric_mean, loglog_slope};
use errbudget::{anneal, tfim_model, AnnealConfig, Preset, TfimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Reruns = Vec<(ExperimentSpec, String)>;
type Check = Box<dyn FnOnce(&mut Reruns) -> Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn flat_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    let mut failures = 0;
    while checked < 200 {
        let model = random_model(&mut rng, 3, Rounding::Ceil);
        let theta = random_theta(&mut rng, model.dimension(), 1e-2, 0.9);
        let flat = match model.expand_flat(&theta, 1_000_000) {
            Ok(flat) => flat,
            Err(ModelError::TooLarge { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("expansion failed: {e}"),
        };
        let e = model.evaluate(&theta).unwrap();
        let err = relative(flat.total_cost(), e.cost).max(relative(flat.total_error(), e.error));
        worst = worst.max(err);
        failures += usize::from(err >= 1e-12);
        checked += 1;
    }
    outcome(
        failures == 0,
        format!("{checked} trees ({skipped} oversized resampled), max relative deviation {worst:e}"),
    )
}

fn composition_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut trials, mut violations, mut max_ratio) = (0, 0, 0.0f64);
    for (i, dim) in [2, 4, 8].into_iter().enumerate() {
        for (j, factors) in [2, 5, 10].into_iter().enumerate() {
            let n = if (i, j) == (2, 2) { 1112 } else { 1111 };
            for t in 0..n {
                let eps: Vec<f64> = (0..factors).map(|_| 10f64.powf(rng.random_range(-4.0..-1.0))).collect();
                let seed = ((i * 3 + j) as u64) << 32 | t as u64;
                let report = verify_composition_bound(dim, &eps, 1, seed).unwrap();
                trials += 1;
                violations += report.violations;
                max_ratio = max_ratio.max(report.max_ratio);
            }
        }
    }
    outcome(
        violations == 0 && trials == 10_000,
        format!("{trials} trials, {violations} violations, max observed/bound {max_ratio:.4}"),
    )
}

fn trotter_scaling() -> Outcome {
    let steps = [8, 16, 32, 64, 128];
    let xs: Vec<f64> = steps.iter().map(|m| *m as f64).collect();
    let slope = |order| {
        let spec = TfimHamiltonianSpec::uniform(3, 1.0, 1.0, 1.0, 1, order);
        loglog_slope(&xs, &trotter_sweep(&spec, &steps).unwrap())
    };
    let (s1, s2) = (slope(SplitOrder::First), slope(SplitOrder::Second));
    outcome(
        (-1.2..=-0.8).contains(&s1) && (-2.2..=-1.8).contains(&s2),
        format!("first-order slope {s1:.4}, second-order slope {s2:.4}"),
    )
}

fn optimization_gain(csv: &mut Reruns) -> Outcome {
    let mut spec = ExperimentSpec::defaults(ExperimentKind::CostVsEps);
    spec.targets = vec![1e-1, 1e-2, 1e-3];
    let out = run_experiment(&spec).unwrap();
    let ExperimentRows::CostVsEps(rows) = &out.rows else { unreachable!() };
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio()).collect();
    let all_feasible = rows.iter().all(|r| r.feasible);
    let gm = geometric_mean(&ratios);
    csv.push((spec, out.rows.to_csv()));
    outcome(
        all_feasible && gm >= 1.3,
        format!("first-feasible/optimized per target {ratios:.3?}, geometric mean {gm:.3}"),
    )
}

fn granularity_gain(csv: &mut Reruns) -> Outcome {
    let mut spec = ExperimentSpec::defaults(ExperimentKind::Granularity);
    spec.targets = vec![1e-3];
    let out = run_experiment(&spec).unwrap();
    let ExperimentRows::Granularity(rows) = &out.rows else { unreachable!() };
    let row = &rows[0];
    let ratio = row.ratio();
    csv.push((spec, out.rows.to_csv()));
    outcome(
        row.feasible_2param && row.feasible_3param && ratio <= 0.1,
        format!(
            "3-param {:.4e} / 2-param {:.4e} = {ratio:.3e}",
            row.cost_3param, row.cost_2param
        ),
    )
}

fn annealer_vs_grid() -> Outcome {
    let model = tfim_model(&TfimConfig::default(), Preset::ThreeParam).unwrap();
    let axis = log_grid(1e-12, 1.0, 50);
    let grid = [axis.clone(), axis.clone(), axis];
    let config = AnnealConfig {
        restarts: 20,
        ..AnnealConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for target in [1e-1, 1e-2] {
        let reference = grid_search_reference(&model, target, &grid).unwrap();
        let result = anneal(&model, target, &config).unwrap();
        let ratio = result.best_cost / reference.cost;
        pass &= result.feasible && ratio <= 2.0;
        parts.push(format!("ε={target}: {:.4e} vs grid {:.4e} ({ratio:.3}x)", result.best_cost, reference.cost));
    }
    outcome(pass, parts.join("; "))
}

fn redundancy_trend(csv: &mut Reruns) -> Outcome {
    let spec = ExperimentSpec::defaults(ExperimentKind::Redundancy);
    let out = run_experiment(&spec).unwrap();
    let ExperimentRows::Redundancy(rows) = &out.rows else { unreachable!() };
    let costs: Vec<f64> = rows.iter().map(|r| r.best_cost).collect();
    let drops: Vec<f64> = costs
        .windows(2)
        .filter(|w| w[1] < w[0])
        .map(|w| (w[0] - w[1]) / w[0])
        .collect();
    let monotone = drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.05);
    let (first, last) = (&rows[0], rows.last().unwrap());
    let degrades = last.improvement() < first.improvement();
    let all_feasible = rows.iter().all(|r| r.feasible);
    let detail = format!(
        "k={:?}, cost/k0 {:.3?}, inversions {:.2?}%, improvement k={} {:.3} (median {:.3}) vs k={} {:.3} (median {:.3})",
        rows.iter().map(|r| r.k_redundant).collect::<Vec<_>>(),
        rows.iter().map(|r| r.best_cost_over_k0_ratio).collect::<Vec<_>>(),
        drops.iter().map(|d| d * 100.0).collect::<Vec<_>>(),
        last.k_redundant,
        last.improvement(),
        last.median_improvement,
        first.k_redundant,
        first.improvement(),
        first.median_improvement,
    );
    csv.push((spec, out.rows.to_csv()));
    outcome(all_feasible && monotone && degrades, detail)
}

fn runtime_scaling(csv: &mut Reruns) -> Outcome {
    let spec = ExperimentSpec::defaults(ExperimentKind::Runtime);
    let out = run_experiment(&spec).unwrap();
    let ExperimentRows::Runtime(rows) = &out.rows else { unreachable!() };
    let xs: Vec<f64> = rows.iter().map(|r| r.num_params as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_steps_to_feasible).collect();
    let slope = loglog_slope(&xs, &ys);
    let complete = rows.iter().all(|r| r.feasible_runs == r.runs);
    csv.push((spec, out.rows.to_csv()));
    outcome(
        complete && (1.5..=2.5).contains(&slope),
        format!("params {xs:?}, median steps {ys:?}, slope {slope:.3}"),
    )
}

fn determinism(csv: &Reruns) -> Outcome {
    let mut same = 0;
    let mut differing = Vec::new();
    for (spec, body) in csv {
        let again = run_experiment(spec).unwrap().rows.to_csv();
        if &again == body {
            same += 1;
        } else {
            differing.push(spec.kind.name());
        }
    }
    let mut detail = format!("{same}/{} experiment CSV bodies byte-identical on rerun", csv.len());
    if !differing.is_empty() {
        detail += &format!(", differing: {}", differing.join(", "));
    }
    outcome(differing.is_empty() && same == 4, detail)
}

fn main() -> ExitCode {
    let mut csv = Vec::new();
    let criteria: Vec<(&str, Check)> = vec![
        ("flat expansion equals recursive evaluation", Box::new(|_| flat_equivalence())),
        ("composition bound holds", Box::new(|_| composition_bound())),
        ("Trotter error scaling", Box::new(|_| trotter_scaling())),
        ("optimization gain over first feasible point", Box::new(optimization_gain)),
        ("three-parameter gain over two-parameter", Box::new(granularity_gain)),
        ("annealer within 2x of grid optimum", Box::new(|_| annealer_vs_grid())),
        ("redundancy raises cost and lowers gain", Box::new(redundancy_trend)),
        ("steps to feasibility grow quadratically", Box::new(runtime_scaling)),
        ("experiments are deterministic", Box::new(|csv| determinism(csv))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let Outcome { pass, detail } = check(&mut csv);
        failed += usize::from(!pass);
        println!(
            "{} criterion {}: {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
