use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rkrp_core::{CodeKind, PolynomialNodes};

use crate::config::{Experiment, ExperimentConfig};
use crate::demo::{run_demo, DemoArgs};
use crate::error::CliError;
use crate::experiments::{run_experiment, RowWriter};

#[derive(Debug, Parser)]
#[command(name = "rkrp", version, about = "Coded distributed matrix multiplication experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Average relative error versus N = ceil(K/(1-alpha)) at fixed alpha.
    SweepN(SweepArgs),
    /// Average relative error versus straggler fraction alpha at fixed K.
    SweepAlpha(SweepArgs),
    /// Average relative error versus straggler count S, N = K + S.
    SweepS(SweepArgs),
    /// Mean log condition number of the inverted matrix versus alpha.
    Cond(SweepArgs),
    /// Multiply two matrix files through a coded round with stragglers.
    Demo(DemoCli),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON file with experiment settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated code kinds.
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<CodeKind>>,
    /// K (comma-separated grid for sweep-n).
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Straggler fraction (comma-separated grid for sweep-alpha and cond).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alpha: Option<Vec<f64>>,
    #[arg(long)]
    pub s_max: Option<usize>,
    /// Trials (samples for cond) per grid point.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Score every entry of every block instead of the (1,1) entries.
    #[arg(long)]
    pub all_entries: bool,
    /// Evaluation points of the polynomial baseline.
    #[arg(long, value_parser = parse_nodes)]
    pub nodes: Option<PolynomialNodes>,
}

impl SweepArgs {
    fn overrides(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: None,
            kinds: self.kinds.clone(),
            k: self.k.clone(),
            alpha: self.alpha.clone(),
            s_max: self.s_max,
            num_trials: self.trials,
            base_seed: self.seed,
            out: self.out.clone(),
            all_entries: self.all_entries.then_some(true),
            polynomial_nodes: self.nodes,
        }
    }
}

#[derive(Debug, Args)]
pub struct DemoCli {
    /// Matrix A (N2 x N1); the product is A^T B.
    #[arg(long)]
    pub a: PathBuf,
    /// Matrix B (N2 x N3).
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "rkrp-systematic")]
    pub kind: CodeKind,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    /// Number of workers.
    #[arg(long = "workers", short = 'N')]
    pub big_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated 1-based straggling workers.
    #[arg(long, value_delimiter = ',', conflicts_with = "random_stragglers")]
    pub stragglers: Vec<usize>,
    /// Draw this many stragglers uniformly at random from the seed.
    #[arg(long)]
    pub random_stragglers: Option<usize>,
    /// Zero-pad A^T rows and B columns to multiples of m and n.
    #[arg(long)]
    pub pad: bool,
    #[arg(long, value_parser = parse_nodes, default_value = "equispaced")]
    pub nodes: PolynomialNodes,
    /// Where to write the product.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the JSON report; stdout if omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_nodes(s: &str) -> Result<PolynomialNodes, String> {
    match s {
        "equispaced" => Ok(PolynomialNodes::Equispaced),
        "integer" => Ok(PolynomialNodes::Integer),
        _ => Err(format!("unknown node set {s:?} (expected equispaced or integer)")),
    }
}

fn sweep(experiment: Experiment, args: &SweepArgs) -> Result<(), CliError> {
    let base = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.merged(args.overrides()).resolve(experiment)?;
    let out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = RowWriter::new(out, experiment)?;
    run_experiment(&cfg, &mut |row| writer.write(&row))
}

fn demo(args: &DemoCli) -> Result<(), CliError> {
    let demo_args = DemoArgs {
        a: args.a.clone(),
        b: args.b.clone(),
        kind: args.kind,
        m: args.m,
        n: args.n,
        big_n: args.big_n,
        seed: args.seed,
        stragglers: args.stragglers.clone(),
        random_stragglers: args.random_stragglers,
        pad: args.pad,
        polynomial_nodes: args.nodes,
        out: args.out.clone(),
    };
    let (_, summary) = run_demo(&demo_args)?;
    let json = serde_json::to_string_pretty(&summary)?;
    match &args.report {
        Some(path) => std::fs::write(path, json + "\n").map_err(|e| CliError::io(path, e)),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::SweepN(a) => sweep(Experiment::SweepN, a),
        Command::SweepAlpha(a) => sweep(Experiment::SweepAlpha, a),
        Command::SweepS(a) => sweep(Experiment::SweepS, a),
        Command::Cond(a) => sweep(Experiment::Cond, a),
        Command::Demo(a) => demo(a),
    }
}
