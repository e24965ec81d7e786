//! `lptx`: run the estimate experiments and the reference solver from the
//! command line.
//!
//! Exit status: 0 when every verdict passes, 2 when a verdict fails, 1 on
//! input errors.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use lptx_core::coeff::{self, CoefficientDecomposition, GKind};
use lptx_core::solver;
use lptx_core::verify::{self, EstimateReport, Experiment};
use lptx_core::{Grid, Multiplier, TimeGrid};

use config::{Common, ExperimentArgs, InputError, Resolved};

#[derive(Parser)]
#[command(name = "lptx", version, about = "Littlewood-Paley transport toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve d_t u - a M u = g and write the final slice plus a JSON sidecar.
    Solve(SolveArgs),
    /// Run one experiment and write CSV rows plus a JSON summary.
    Verify {
        /// Experiment id (see `lptx list`); may come from the config file.
        experiment: Option<String>,
        #[command(flatten)]
        args: ExperimentArgs,
    },
    /// Shorthand for `verify log-loss`.
    ProbeLogLoss {
        #[command(flatten)]
        args: ExperimentArgs,
    },
    /// Shorthand for `verify delta0-sweep`.
    SweepDelta0 {
        #[command(flatten)]
        args: ExperimentArgs,
    },
    /// List experiment ids with the statement each one measures.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum ForcingKind {
    SpikeSweep,
    BandLimited,
    Constant,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "rk4")]
    method: MethodArg,
    /// Forcing family.
    #[arg(long, value_enum, default_value = "spike-sweep")]
    forcing: ForcingKind,
    /// Spike height or band radius of the forcing.
    #[arg(long, default_value_t = 16.0)]
    lambda: f64,
    /// RK4 substeps per time step.
    #[arg(long, default_value_t = 1)]
    substeps: usize,
    /// Number of Picard iterates.
    #[arg(long, default_value_t = 8)]
    iterates: usize,
    /// File stem for the outputs.
    #[arg(long, default_value = "solution")]
    name: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rk4,
    Picard,
}

enum Failure {
    Input(InputError),
    Verdict,
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<lptx_core::Error> for Failure {
    fn from(e: lptx_core::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(InputError(format!("{}: {e}", path.display())))
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_report(report: &EstimateReport, out: &Path) -> Result<(PathBuf, PathBuf), Failure> {
    std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let csv = out.join(format!("{}.csv", report.experiment));
    let json = out.join(format!("{}.json", report.experiment));
    std::fs::write(&csv, report.to_csv()).map_err(|e| io_error(&csv, e))?;
    let mut summary = report.summary_json();
    summary["generated_unix"] = serde_json::json!(timestamp());
    let text = serde_json::to_string_pretty(&summary).expect("json value");
    std::fs::write(&json, text).map_err(|e| io_error(&json, e))?;
    Ok((csv, json))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        Some(0) => Err(Failure::Input(InputError("--threads must be positive".into()))),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Failure::Input(InputError(e.to_string())))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn run_experiment(experiment: Experiment, resolved: &Resolved) -> Result<(), Failure> {
    let report = with_threads(resolved.threads, || verify::run(experiment, &resolved.settings))??;
    let (csv, json) = write_report(&report, &resolved.out)?;
    print!("{}", report.describe());
    println!("wrote {} and {}", csv.display(), json.display());
    if report.verdict() {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn solve(common: &Common, args: &SolveArgs) -> Result<(), Failure> {
    let resolved = config::resolve(common, &ExperimentArgs::default())?;
    let s = &resolved.settings;
    let grid = Grid::torus(s.grid.unwrap_or(128))?;
    let time = TimeGrid::new(s.nt)?;
    let m = Multiplier::parse(&grid, &s.operator)?;
    let cd = if s.delta0 == 0.0 {
        CoefficientDecomposition::zero(&grid, time)
    } else {
        let spec = s
            .coefficients
            .clone()
            .unwrap_or_else(|| verify::default_coefficients(grid.k_max()));
        coeff::synthesize(&grid, time, &spec, s.delta0, s.seed)?
    };
    let kind = match args.forcing {
        ForcingKind::SpikeSweep => GKind::SpikeSweep,
        ForcingKind::BandLimited => GKind::BandLimited,
        ForcingKind::Constant => GKind::Constant,
    };
    let g = coeff::g_family(&grid, time, kind, args.lambda, s.seed)?;
    let result = with_threads(resolved.threads, || match args.method {
        MethodArg::Rk4 => solver::reference_solve(&cd, &m, &g, args.substeps),
        MethodArg::Picard => solver::picard_iterates(&cd, &m, &g, args.iterates)
            .map(|mut its| its.pop().expect("at least one iterate")),
    })??;
    let (field, sidecar) = result.save(&resolved.out, &args.name)?;
    println!(
        "{}: sup_t ||u||_1 = {:.6e}, N(g) = {:.6e}",
        result.method,
        result.sup_l1,
        lptx_core::norms::n_of_g(&g)
    );
    println!("wrote {} and {}", field.display(), sidecar.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    match &cli.command {
        Command::List => {
            for e in Experiment::ALL {
                let entry = format!("{} → {}", e.id(), e.anchor());
                println!("{entry:<52} {}", e.summary());
            }
            Ok(())
        }
        Command::Solve(args) => solve(common, args),
        Command::Verify { experiment, args } => {
            let resolved = config::resolve(common, args)?;
            let id = experiment
                .clone()
                .or_else(|| resolved.experiment.clone())
                .ok_or_else(|| InputError("no experiment given; see `lptx list`".into()))?;
            let e: Experiment = id.parse()?;
            run_experiment(e, &resolved)
        }
        Command::ProbeLogLoss { args } => run_experiment(Experiment::LogLoss, &config::resolve(common, args)?),
        Command::SweepDelta0 { args } => {
            run_experiment(Experiment::Delta0Sweep, &config::resolve(common, args)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(2),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
