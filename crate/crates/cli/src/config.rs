use std::path::{Path, PathBuf};

use clap::Args;
use lptx_core::coeff::CoefficientSpec;
use lptx_core::verify::Settings;
use serde::Deserialize;

/// Input problems; all map to exit status 1.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<lptx_core::Error> for InputError {
    fn from(e: lptx_core::Error) -> Self {
        InputError(e.to_string())
    }
}

/// Keys accepted in a `--config` TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Path to a coefficient spec, relative to the config file.
    pub coefficients: Option<PathBuf>,
    pub grid: Option<usize>,
    pub nt: Option<usize>,
    pub seed: Option<u64>,
    pub operator: Option<String>,
    pub bank_size: Option<usize>,
    pub mu: Option<f64>,
    pub n: Option<Vec<u32>>,
    pub k: Option<Vec<usize>>,
    pub triples: Option<Vec<[usize; 3]>>,
    pub multilinear_n: Option<Vec<usize>>,
    pub tuples: Option<usize>,
    pub f_bank: Option<usize>,
    pub simplex_n: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub nodes: Option<usize>,
    pub lambda: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub delta0: Option<f64>,
    pub substeps: Option<usize>,
    pub n_max: Option<usize>,
    pub g_lambda: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let mut config: FileConfig =
            toml::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        if let Some(spec) = &config.coefficients {
            if spec.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.coefficients = Some(base.join(spec));
            }
        }
        Ok(config)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML file with default values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $LPTX_OUT, else ./lptx-out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Points per axis.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Time steps on [0, 1].
    #[arg(long, global = true)]
    pub nt: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Multiplier, e.g. riesz(1,1), smoothed_riesz(1,2), identity.
    #[arg(long, global = true)]
    pub operator: Option<String>,
    /// Coefficient spec TOML.
    #[arg(long = "coefficients", global = true)]
    pub coefficients: Option<PathBuf>,
    /// Coefficient size; 0 runs the decoupled equation.
    #[arg(long, global = true)]
    pub delta0: Option<f64>,
}

/// Experiment parameters; lists are comma separated.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub bank_size: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Operator powers for the commutator sweep.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    /// Bands for the commutator sweep.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub multilinear_n: Option<Vec<usize>>,
    #[arg(long)]
    pub tuples: Option<usize>,
    #[arg(long)]
    pub f_bank: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub simplex_n: Option<Vec<usize>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Spike height of the forcing used by the delta0 sweep.
    #[arg(long)]
    pub g_lambda: Option<f64>,
}

/// Resolved run parameters after defaults, config file and flags.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub settings: Settings,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub experiment: Option<String>,
}

fn pick<T>(flag: Option<T>, file: Option<T>, target: &mut T) {
    if let Some(v) = flag.or(file) {
        *target = v;
    }
}

pub fn resolve(common: &Common, args: &ExperimentArgs) -> Result<Resolved, InputError> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let mut s = Settings::default();
    s.grid = common.grid.or(file.grid).or(s.grid);
    pick(common.nt, file.nt, &mut s.nt);
    pick(common.seed, file.seed, &mut s.seed);
    pick(common.operator.clone(), file.operator, &mut s.operator);
    pick(args.bank_size, file.bank_size, &mut s.bank_size);
    pick(args.mu, file.mu, &mut s.mu);
    pick(args.n.clone(), file.n, &mut s.n);
    pick(args.k.clone(), file.k, &mut s.k);
    pick(None, file.triples, &mut s.triples);
    pick(args.multilinear_n.clone(), file.multilinear_n, &mut s.multilinear_n);
    pick(args.tuples, file.tuples, &mut s.tuples);
    pick(args.f_bank, file.f_bank, &mut s.f_bank);
    pick(args.simplex_n.clone(), file.simplex_n, &mut s.simplex_n);
    pick(args.samples, file.samples, &mut s.samples);
    pick(args.nodes, file.nodes, &mut s.nodes);
    pick(args.lambda.clone(), file.lambda, &mut s.lambda);
    pick(args.delta.clone(), file.delta, &mut s.delta);
    pick(args.substeps, file.substeps, &mut s.substeps);
    pick(args.n_max, file.n_max, &mut s.n_max);
    pick(args.g_lambda, file.g_lambda, &mut s.g_lambda);

    let spec_path = common.coefficients.clone().or(file.coefficients);
    let spec = match &spec_path {
        Some(path) => Some(CoefficientSpec::load(path)?),
        None => None,
    };
    let delta0 = common
        .delta0
        .or(file.delta0)
        .or_else(|| spec.as_ref().and_then(|sp| sp.delta0));
    if let Some(d) = delta0 {
        s.delta0 = d;
    }
    s.coefficients = spec;

    let out = common
        .out
        .clone()
        .or(file.out)
        .or_else(|| std::env::var_os("LPTX_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("lptx-out"));
    Ok(Resolved {
        settings: s,
        out,
        threads: common.threads.or(file.threads),
        experiment: file.experiment,
    })
}
