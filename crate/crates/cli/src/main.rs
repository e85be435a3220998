//! `clamp`: simulate, generate, fit, ingest and report on surrogate
//! performance models.
//!
//! Exit codes: 0 success, 1 threshold failure, 2 input error, 3 numerical
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clamp::estimator::{
    fit_per_algorithm, fit_with_callback, fit_with_restarts, parameter_errors,
    recovery_experiment, FitConfig, FitResult, InitScheme, ParameterErrors, RecoveryConfig,
    RecoverySummary, RecoveryThresholds,
};
use clamp::exec::with_jobs;
use clamp::io::{self, Dataset};
use clamp::model::simulate_all;
use clamp::report::{self, Property};
use clamp::scenario::{generate, ScenarioSpec};
use clamp::{Error, Execution, ScenarioParams, TaskSet};

#[derive(Debug, Parser)]
#[command(name = "clamp", version, about = "Surrogate performance model for lifelong learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write predicted curves for a parameter set and curriculum.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        curriculum: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a synthetic scenario and write params, curriculum and curves.
    Generate {
        #[arg(long, default_value_t = 5)]
        tasks: usize,
        #[arg(long, default_value_t = 3)]
        algos: usize,
        #[arg(long, default_value_t = 9)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate parameters from observed curves.
    Fit(FitArgs),
    /// Downsample a dense raw log to phase boundaries.
    Ingest {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        boundaries: PathBuf,
        #[arg(long, value_enum, default_value_t = Normalize::None)]
        normalize: Normalize,
        /// Normalise over the whole matrix instead of per task.
        #[arg(long)]
        global: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write the curriculum implied by the boundaries.
        #[arg(long)]
        curriculum_out: Option<PathBuf>,
    },
    /// Synthetic recovery experiment with pass/fail thresholds.
    RecoverCheck(RecoverArgs),
    /// Compare one property across several estimate files.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        estimates: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        labels: Vec<String>,
        #[arg(long, value_enum, default_value_t = ParamArg::Gamma)]
        param: ParamArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Normalize {
    Minmax,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParamArg {
    Gamma,
    H,
    Lambda,
}

impl From<ParamArg> for Property {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Gamma => Property::Gamma,
            ParamArg::H => Property::H,
            ParamArg::Lambda => Property::Lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitArg {
    Uniform,
    IdentityBiased,
}

impl From<InitArg> for InitScheme {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Uniform => InitScheme::UniformRandom,
            InitArg::IdentityBiased => InitScheme::IdentityBiased,
        }
    }
}

#[derive(Debug, Args)]
struct OptimArgs {
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::Uniform)]
    init: InitArg,
}

impl OptimArgs {
    fn config(&self) -> FitConfig {
        FitConfig {
            steps: self.steps,
            learning_rate: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.eps,
            seed: self.seed,
            init_scheme: self.init.into(),
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    curriculum: PathBuf,
    #[command(flatten)]
    optim: OptimArgs,
    /// Independent restarts (seeds seed..seed+R); the lowest final loss wins.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Start from this params file instead of a random draw.
    #[arg(long)]
    init_params: Option<PathBuf>,
    /// Ground-truth params; reports per-group recovery MSE.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Fit each algorithm separately with its own task properties.
    #[arg(long)]
    per_algorithm: bool,
    /// Stream `step,loss` lines to stderr.
    #[arg(long)]
    progress: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RecoverArgs {
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    tasks: usize,
    #[arg(long, default_value_t = 3)]
    algos: usize,
    #[arg(long, default_value_t = 9)]
    length: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[command(flatten)]
    optim: OptimArgs,
    /// Restarts per trial (seeds seed+t, seed+t+1, ...); the lowest loss wins.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Initialise every fit at the ground truth.
    #[arg(long)]
    init_at_truth: bool,
    /// Worker threads for trials.
    #[arg(long)]
    jobs: Option<usize>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { 2 } else { 3 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            params,
            curriculum,
            out,
        } => cmd_simulate(&params, &curriculum, &out),
        Command::Generate {
            tasks,
            algos,
            length,
            seed,
            noise,
            out,
        } => cmd_generate(
            ScenarioSpec {
                n_tasks: tasks,
                n_algos: algos,
                curriculum_len: length,
                seed,
                noise_std: noise,
            },
            &out,
        ),
        Command::Fit(args) => cmd_fit(&args),
        Command::Ingest {
            raw,
            boundaries,
            normalize,
            global,
            out,
            curriculum_out,
        } => cmd_ingest(&raw, &boundaries, normalize, global, &out, curriculum_out.as_deref()),
        Command::RecoverCheck(args) => cmd_recover(&args),
        Command::Report {
            estimates,
            labels,
            param,
            out,
        } => cmd_report(&estimates, &labels, param.into(), &out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn check_same_tasks(a: &TaskSet, b: &TaskSet, what: &str) -> Result<(), Failure> {
    if a == b {
        Ok(())
    } else {
        Err(input_error(format!(
            "{what} task list {:?} does not match curriculum task list {:?}",
            a.names(),
            b.names()
        )))
    }
}

fn cmd_simulate(params: &Path, curriculum: &Path, out: &Path) -> CliResult {
    let (ptasks, params) = io::parse_params(params)?;
    let (tasks, curriculum) = io::read_curriculum(curriculum)?;
    check_same_tasks(&ptasks, &tasks, "params")?;
    let curves = simulate_all(&params, &curriculum)?;
    io::write_curves(out, &tasks, &curves)?;
    Ok(0)
}

fn cmd_generate(spec: ScenarioSpec, out: &Path) -> CliResult {
    let scenario = generate(&spec)?;
    ensure_dir(out)?;
    let tasks = TaskSet::numbered(spec.n_tasks)?;
    io::write_params(out.join("params.json"), &tasks, &scenario.params)?;
    io::write_curriculum(out.join("curriculum.json"), &tasks, &scenario.curriculum)?;
    io::write_curves(out.join("curves.csv"), &tasks, &scenario.data)?;
    println!(
        "wrote {} tasks, {} algorithms, curriculum length {} to {}",
        spec.n_tasks,
        spec.n_algos,
        spec.curriculum_len,
        out.display()
    );
    Ok(0)
}

fn write_fit_outputs(dir: &Path, data: &Dataset, result: &FitResult) -> Result<(), Failure> {
    ensure_dir(dir)?;
    io::write_params(dir.join("estimates.json"), &data.tasks, &result.params)?;
    io::write_curves(dir.join("predicted.csv"), &data.tasks, &result.predicted)?;
    write_text(&dir.join("report.md"), &report::full_report(&data.tasks, &result.params)?)?;
    io::write_json(
        dir.join("metrics.json"),
        &io::metrics_json(&result.loss_per_algorithm, result.mse_total),
    )?;
    write_text(
        &dir.join("curves.svg"),
        &report::plot_curves(&data.tasks, &data.curriculum, &data.observed, &result.predicted),
    )?;
    Ok(())
}

fn recovery_markdown(errors: &ParameterErrors, thresholds: Option<&RecoveryThresholds>) -> String {
    let rows = [
        ("Transfer Matrix", "A", "[-1, 1]"),
        ("Difficulty", "d", "[0, inf)"),
        ("Transfer Efficiency", "γ", "[0, inf)"),
        ("Experience Retention", "h", "[0, 1]"),
        ("Expertise Translation", "λ", "[0, inf)"),
    ];
    let got = errors.as_array();
    let reference = RecoveryThresholds::REFERENCE.as_array();
    let mut out = String::from("| Parameter | Symbol | Range | MSE | Reference | Threshold | Status |\n");
    out.push_str("|---|---|---|---:|---:|---:|---|\n");
    for (k, (name, sym, range)) in rows.iter().enumerate() {
        let (limit, status) = match thresholds {
            Some(t) => {
                let lim = t.0.as_array()[k];
                (format!("{lim:.2}"), if got[k] <= lim { "pass" } else { "FAIL" })
            }
            None => (String::new(), ""),
        };
        out.push_str(&format!(
            "| {name} | {sym} | {range} | {:.4} | {:.2} | {limit} | {status} |\n",
            got[k], reference[k]
        ));
    }
    out
}

fn cmd_fit(args: &FitArgs) -> CliResult {
    let data = io::load_dataset(&args.data, &args.curriculum)?;
    let config = args.optim.config();
    let truth = args
        .truth
        .as_ref()
        .map(|p| -> Result<ScenarioParams, Failure> {
            let (t, p) = io::parse_params(p)?;
            check_same_tasks(&t, &data.tasks, "truth")?;
            Ok(p)
        })
        .transpose()?;

    if args.per_algorithm {
        let results = with_jobs(args.jobs, || {
            fit_per_algorithm(&data.curriculum, &data.observed, &config, Execution::Parallel)
        })?;
        for (obs, result) in data.observed.iter().zip(&results) {
            let sub = Dataset {
                observed: vec![obs.clone()],
                ..data.clone()
            };
            write_fit_outputs(&args.out.join(&obs.algorithm), &sub, result)?;
            println!("{}: MSE {:.6}", obs.algorithm, result.mse_total);
        }
        return Ok(0);
    }

    let init = args
        .init_params
        .as_ref()
        .map(|p| -> Result<ScenarioParams, Failure> {
            let (t, p) = io::parse_params(p)?;
            check_same_tasks(&t, &data.tasks, "init params")?;
            Ok(p)
        })
        .transpose()?;

    let progress = |s: &clamp::estimator::StepInfo| {
        if args.progress {
            eprintln!("{},{}", s.step, io::format_float(s.loss));
        }
    };
    let result = if init.is_some() || args.restarts <= 1 {
        fit_with_callback(&data.curriculum, &data.observed, &config, init.as_ref(), progress)?
    } else {
        with_jobs(args.jobs, || {
            fit_with_restarts(
                &data.curriculum,
                &data.observed,
                &config,
                args.restarts,
                Execution::Parallel,
            )
        })?
    };
    write_fit_outputs(&args.out, &data, &result)?;
    for (name, mse) in &result.loss_per_algorithm {
        println!("{name}: MSE {mse:.6}");
    }
    println!("total MSE: {}", io::format_float(result.mse_total));
    if let Some(truth) = truth {
        let errors = parameter_errors(&truth, &result.params)?;
        println!();
        print!("{}", recovery_markdown(&errors, None));
        io::write_json(
            args.out.join("recovery.json"),
            &serde_json::json!({
                "transfer_matrix": errors.transfer,
                "difficulty": errors.difficulty,
                "gamma": errors.gamma,
                "h": errors.h,
                "lambda": errors.lambda,
            }),
        )?;
    }
    Ok(0)
}

fn cmd_ingest(
    raw: &Path,
    boundaries: &Path,
    normalize: Normalize,
    global: bool,
    out: &Path,
    curriculum_out: Option<&Path>,
) -> CliResult {
    let bounds = io::read_boundaries(boundaries)?;
    let logs = io::read_raw(raw, &bounds)?;
    let mut extra: Vec<&str> = Vec::new();
    for log in &logs {
        for r in &log.records {
            if !extra.contains(&r.task.as_str()) {
                extra.push(&r.task);
            }
        }
    }
    let (tasks, curriculum) = io::curriculum_from_boundaries(&bounds, extra)?;
    let mut matrices = Vec::with_capacity(logs.len());
    for log in &logs {
        let m = io::downsample_to_boundaries(log, &tasks, &curriculum)?;
        let m = match normalize {
            Normalize::Minmax => io::normalize_minmax(&m, &tasks, !global)?,
            Normalize::None => m,
        };
        matrices.push(m);
    }
    io::write_curves(out, &tasks, &matrices)?;
    if let Some(path) = curriculum_out {
        io::write_curriculum(path, &tasks, &curriculum)?;
    }
    Ok(0)
}

fn summary_markdown(summary: &RecoverySummary, thresholds: &RecoveryThresholds) -> String {
    let mut out = recovery_markdown(&summary.mean, Some(thresholds));
    out.push_str(&format!(
        "\ntrials: {} ok, {} failed; mean fit MSE {:.6}; worst per-algorithm fit MSE {:.6}\n",
        summary.trials.len(),
        summary.failed.len(),
        summary.mean_fit_mse(),
        summary.worst_algorithm_mse()
    ));
    for (t, msg) in &summary.failed {
        out.push_str(&format!("- trial {t} failed: {msg}\n"));
    }
    out
}

fn cmd_recover(args: &RecoverArgs) -> CliResult {
    let spec = ScenarioSpec {
        n_tasks: args.tasks,
        n_algos: args.algos,
        curriculum_len: args.length,
        seed: 0,
        noise_std: args.noise,
    };
    let config = RecoveryConfig {
        spec,
        trials: args.trials,
        seed: args.optim.seed,
        fit: args.optim.config(),
        init_at_truth: args.init_at_truth,
        restarts: args.restarts,
        execution: Execution::Parallel,
    };
    let summary = with_jobs(args.jobs, || recovery_experiment(&config))?;
    let thresholds = RecoveryThresholds::default();
    print!("{}", summary_markdown(&summary, &thresholds));
    if summary.trials.is_empty() {
        return Err(Failure {
            code: 3,
            message: "every trial failed".into(),
        });
    }
    Ok(if thresholds.all_pass(&summary.mean) { 0 } else { 1 })
}

fn cmd_report(estimates: &[PathBuf], labels: &[String], property: Property, out: &Path) -> CliResult {
    if estimates.len() != labels.len() {
        return Err(input_error(format!(
            "{} estimate files but {} labels",
            estimates.len(),
            labels.len()
        )));
    }
    let datasets = estimates
        .iter()
        .zip(labels)
        .map(|(path, label)| Ok((label.clone(), io::parse_params(path)?.1)))
        .collect::<Result<Vec<_>, Error>>()?;
    let table = report::comparison_table(&datasets, property);
    let md = table.to_markdown();
    write_text(out, &md)?;
    write_text(&out.with_extension("json"), &table.to_json())?;
    print!("{md}");
    Ok(0)
}
