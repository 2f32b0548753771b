use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use errbudget::anneal::{tune_delta, AnnealConfig, AnnealError};
use errbudget::budget::{ModelError, ModelFile, Rounding};
use errbudget::experiment::{run_experiment, ExperimentError, ExperimentKind, ExperimentSpec};
use errbudget::norm::{trotter_sweep, verify_composition_bound, NormError, SplitOrder, TfimHamiltonianSpec};
use errbudget::stats::loglog_slope;
use errbudget::tfim::{build_tfim_model, Preset, TfimConfig, TfimError};
use errbudget::{anneal, BudgetModel};

#[derive(Parser)]
#[command(name = "errbudget", version, about = "Distribute an approximation-error budget over a program tree")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a model file.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Anneal the tolerances of a model file for a target error.
    Optimize(OptimizeArgs),
    /// Run one of the benchmark studies and write CSV plus metadata.
    Experiment(ExperimentArgs),
    /// Numerical checks of the error-composition rules.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Phase estimation of a Trotterized transverse-field Ising chain.
    Tfim(TfimArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    ThreeParam,
    TwoParam,
    Redundancy,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    Continuous,
    Ceil,
}

#[derive(Args)]
struct TfimArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, value_enum, default_value = "three-param")]
    preset: PresetArg,
    /// Redundant rotation groups for `--preset redundancy`.
    #[arg(long, default_value_t = 0)]
    redundant: usize,
    #[arg(long, value_enum, default_value = "continuous")]
    rounding: RoundingArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnnealArgs {
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Annealing configuration as JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trace: bool,
}

impl AnnealArgs {
    fn resolve(&self, base: AnnealConfig) -> Result<AnnealConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => serde_json::from_str(&read(path)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
            None => base,
        };
        if let Some(v) = self.steps {
            config.num_steps = v;
        }
        if let Some(v) = self.beta_max {
            config.beta_max = v;
        }
        if let Some(v) = self.delta {
            config.delta = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.restarts {
            config.restarts = v;
        }
        config.trace |= self.trace;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct OptimizeArgs {
    model: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// Pick the proposal width from pilot chains before annealing.
    #[arg(long)]
    tune_delta: bool,
    #[command(flatten)]
    anneal: AnnealArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// cost_vs_eps, granularity, redundancy or runtime.
    kind: String,
    /// Target sweep; repeat the flag for several targets.
    #[arg(long = "epsilon")]
    epsilon: Vec<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated redundancy counts.
    #[arg(long, value_delimiter = ',')]
    redundant: Vec<usize>,
    #[arg(long)]
    feasible_budget: Option<usize>,
    /// Keep the configured proposal width instead of tuning it per model.
    #[arg(long)]
    fixed_delta: bool,
    /// CSV path; metadata goes next to it with extension `.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    anneal: AnnealArgs,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Distance of composed perturbed unitaries against the sum of tolerances.
    #[command(name = "lemma1")]
    Composition(CompositionArgs),
    /// Trotter error of the Ising propagator against the step count.
    Trotter(TrotterArgs),
}

#[derive(Args)]
struct CompositionArgs {
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    factors: usize,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    First,
    Second,
}

#[derive(Args)]
struct TrotterArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    #[arg(long, default_value_t = 1.0)]
    field: f64,
    #[arg(long, default_value_t = 1.0)]
    time: f64,
    #[arg(long, value_enum, default_value = "second")]
    order: OrderArg,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
    steps: Vec<usize>,
}

enum Failure {
    Usage(String),
    Validation(String),
    Exhausted(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Exhausted(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Exhausted(m) => m,
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<AnnealError> for Failure {
    fn from(e: AnnealError) -> Self {
        match e {
            AnnealError::Model(m) => m.into(),
            AnnealError::Exhausted { .. } => Failure::Exhausted(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<TfimError> for Failure {
    fn from(e: TfimError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Anneal(a) => a.into(),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<NormError> for Failure {
    fn from(e: NormError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Print to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes")
}

fn model_tfim(args: &TfimArgs) -> Result<(), Failure> {
    let preset = match args.preset {
        PresetArg::ThreeParam => Preset::ThreeParam,
        PresetArg::TwoParam => Preset::TwoParam,
        PresetArg::Redundancy => Preset::Redundancy(args.redundant),
    };
    let config = TfimConfig {
        rounding: match args.rounding {
            RoundingArg::Continuous => Rounding::Continuous,
            RoundingArg::Ceil => Rounding::Ceil,
        },
        ..TfimConfig::with_n(args.n)
    };
    let (root, binding) = build_tfim_model(&config, preset)?;
    let mut text = ModelFile { root, binding }.to_json();
    text.push('\n');
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            emit(&text);
            Ok(())
        }
    }
}

fn optimize(args: &OptimizeArgs) -> Result<(), Failure> {
    let file = ModelFile::from_json(&read(&args.model)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.model.display())))?;
    let model = BudgetModel::new(file.root, file.binding)?;
    let mut config = args.anneal.resolve(AnnealConfig::default())?;
    if args.tune_delta {
        config.delta = tune_delta(&model, args.epsilon, &config)?;
    }
    let result = anneal(&model, args.epsilon, &config)?;

    let ceil = model.with_rounding(Rounding::Ceil).evaluate(&result.best_theta)?;
    let theta: Map<String, Value> = model
        .binding()
        .group_names()
        .zip(result.best_theta.values())
        .map(|(name, v)| (name.to_owned(), json!(v)))
        .collect();
    let mut out = json!({
        "feasible": result.feasible,
        "epsilon_target": args.epsilon,
        "best_theta": theta,
        "best_cost": result.best_cost,
        "best_error": result.best_error,
        "best_cost_ceil": ceil.cost,
        "best_error_ceil": ceil.error,
        "first_feasible_cost": result.first_feasible_cost,
        "steps_to_feasible": result.steps_to_feasible,
        "acceptance_rate": result.acceptance_rate,
        "seed": result.seed,
        "config": config,
        "runs": result.runs,
    });
    if config.trace {
        out["trace"] = json!(result.trace);
    }
    emit(&(pretty(&out) + "\n"));
    if result.feasible {
        Ok(())
    } else {
        Err(Failure::Exhausted(format!(
            "no feasible point for target {} (lowest error {:e})",
            args.epsilon, result.best_error
        )))
    }
}

fn experiment(args: &ExperimentArgs) -> Result<(), Failure> {
    let kind: ExperimentKind = args.kind.parse().map_err(|e: ExperimentError| Failure::Usage(e.to_string()))?;
    let mut spec = ExperimentSpec::defaults(kind);
    if !args.epsilon.is_empty() {
        spec.targets = args.epsilon.clone();
    }
    if let Some(n) = args.n {
        spec.tfim.n = n;
    }
    if !args.redundant.is_empty() {
        spec.redundancy = args.redundant.clone();
    }
    if let Some(b) = args.feasible_budget {
        spec.feasible_budget = b;
    }
    spec.anneal = args.anneal.resolve(spec.anneal)?;
    // An explicit width wins over tuning.
    if args.anneal.delta.is_some() || args.fixed_delta {
        spec.tune_delta = false;
    }

    spec.validate()?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{kind}.csv")));
    // Fail before a long run, not after it.
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !dir.is_dir() {
        return Err(Failure::Usage(format!("{}: output directory does not exist", dir.display())));
    }

    let output = run_experiment(&spec)?;
    write(&out, &output.rows.to_csv())?;
    let meta = out.with_extension("meta.json");
    write(&meta, &(pretty(&output.metadata) + "\n"))?;
    eprintln!("wrote {} and {}", out.display(), meta.display());
    Ok(())
}

fn verify_composition(args: &CompositionArgs) -> Result<(), Failure> {
    let eps = vec![args.epsilon; args.factors];
    let report = verify_composition_bound(args.dim, &eps, args.trials, args.seed)?;
    emit(&(pretty(&json!({
            "dim": report.dim,
            "factors": report.factors,
            "trials": report.trials,
            "bound": report.bound,
            "violations": report.violations,
            "max_ratio": report.max_ratio,
            "mean_ratio": report.mean_ratio,
            "ratios": report.ratios,
        })) + "\n"));
    if report.violations == 0 {
        Ok(())
    } else {
        Err(Failure::Validation(format!("{} trials exceeded the bound", report.violations)))
    }
}

fn verify_trotter(args: &TrotterArgs) -> Result<(), Failure> {
    let order = match args.order {
        OrderArg::First => SplitOrder::First,
        OrderArg::Second => SplitOrder::Second,
    };
    let spec = TfimHamiltonianSpec::uniform(args.n, args.coupling, args.field, args.time, 1, order);
    let errors = trotter_sweep(&spec, &args.steps)?;
    let slope = if args.steps.len() >= 2 && errors.iter().all(|e| *e > 0.0) {
        let xs: Vec<f64> = args.steps.iter().map(|m| *m as f64).collect();
        json!(loglog_slope(&xs, &errors))
    } else {
        Value::Null
    };
    emit(&(pretty(&json!({
            "n": args.n,
            "order": order,
            "time": args.time,
            "steps": args.steps,
            "errors": errors,
            "loglog_slope": slope,
        })) + "\n"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Model(ModelCommand::Tfim(args)) => model_tfim(args),
        Command::Optimize(args) => optimize(args),
        Command::Experiment(args) => experiment(args),
        Command::Verify(VerifyCommand::Composition(args)) => verify_composition(args),
        Command::Verify(VerifyCommand::Trotter(args)) => verify_trotter(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
