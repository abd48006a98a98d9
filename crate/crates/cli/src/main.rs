use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use infocascade::baseline::baseline_curve;
use infocascade::experiments::{
    format_runs_csv, render_baseline_plot, render_cumulative_plot, run_sweep, write_baseline_csv,
    write_runs_csv, write_summary_csv, SweepConfig,
};
use infocascade::validate::{run_validation, ValidationOptions};
use infocascade::{
    detect_cascade, run_once, CascadeError, ChoiceMode, ModelParams, ObserverModel, TrueValue,
    DEFAULT_WINDOW,
};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Simulate information cascades among Bayesian agents.
#[derive(Debug, Parser)]
#[command(name = "infocascade", version)]
struct Cli {
    /// Worker threads; never changes the output bytes.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one chain and write its trajectory as CSV.
    Run(RunArgs),
    /// Run a parameter grid from a JSON config.
    Sweep(SweepArgs),
    /// Cascade probabilities of the counting model as a function of p.
    Baseline(BaselineArgs),
    /// Check the belief core against the independent oracles.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Det,
    Rand,
}

impl From<ModeArg> for ChoiceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Det => ChoiceMode::Deterministic,
            ModeArg::Rand => ChoiceMode::WeightedRandom,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObserverArg {
    /// Observers replay the actor's rule given each candidate signal.
    Conditioned,
    /// Observers threshold the unconditioned count marginal.
    Marginal,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    v: u8,
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    seed: u64,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "conditioned")]
    observer: ObserverArg,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    p_list: Vec<f64>,
    #[arg(long)]
    runs: usize,
    #[arg(long)]
    agents: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 3)]
    max_k: usize,
    #[arg(long, default_value_t = 8)]
    max_j: usize,
    #[arg(long, default_value = "validation_report.txt")]
    report: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Checks,
    Other(String),
}

impl From<CascadeError> for Failure {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::Io { .. } | CascadeError::Parse { .. } => Failure::Io(e.to_string()),
            CascadeError::InvalidParams(_)
            | CascadeError::InvalidConfig(_)
            | CascadeError::BudgetExceeded { .. }
            | CascadeError::SizeLimit(_) => Failure::Usage(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let observer = match a.observer {
        ObserverArg::Conditioned => ObserverModel::SignalConditioned,
        ObserverArg::Marginal => ObserverModel::Marginal,
    };
    let params = ModelParams::new(a.p, a.k, a.mode.into())?.with_observer(observer);
    let v = TrueValue::try_from(a.v).map_err(Failure::Usage)?;
    let record = run_once(&params, v, a.agents, a.seed)?;
    let window = DEFAULT_WINDOW.min(a.agents);
    let stats = detect_cascade(&record, window)?;
    log::info!(
        "cascade {} (window onset {:?}, predicate onset {:?})",
        stats.kind.name(),
        stats.onset_window,
        stats.onset_predicate
    );
    match &a.out {
        Some(path) => write_runs_csv(&[record], path)?,
        None => std::io::stdout()
            .write_all(format_runs_csv(&[record]).as_bytes())
            .map_err(|e| Failure::Io(format!("stdout: {e}")))?,
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, workers: usize) -> Result<(), Failure> {
    let config = SweepConfig::load(&a.config)?;
    let result = run_sweep(&config, workers)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| io_failure(&a.out_dir, e))?;
    for cell in &result.cells {
        let stem = cell.key.stem();
        write_runs_csv(&cell.records, &a.out_dir.join(format!("runs_{stem}.csv")))?;
        render_cumulative_plot(cell, &a.out_dir.join(format!("plot_{stem}.svg")))?;
    }
    write_summary_csv(&result, &a.out_dir.join("summary.csv"))?;
    log::info!(
        "{} cells written to {}",
        result.cells.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn cmd_baseline(a: &BaselineArgs, workers: usize) -> Result<(), Failure> {
    if a.runs == 0 {
        return Err(Failure::Usage("--runs must be positive".into()));
    }
    let rows = baseline_curve(&a.p_list, a.agents, a.runs, a.seed, workers)?;
    write_baseline_csv(&rows, &a.out)?;
    if let Some(svg) = &a.svg {
        render_baseline_plot(&rows, svg)?;
    }
    Ok(())
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), Failure> {
    let opts = ValidationOptions {
        max_k: a.max_k,
        max_j: a.max_j,
        ..Default::default()
    };
    let report = run_validation(&opts)?;
    let text = report.render();
    std::fs::write(&a.report, &text).map_err(|e| io_failure(&a.report, e))?;
    print!("{text}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a, workers),
        Command::Baseline(a) => cmd_baseline(a, workers),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("error: validation checks failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
