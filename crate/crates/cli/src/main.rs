use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use ssc_omp::Dataset;
use ssc_omp_cli::config::{Algorithm, ArrangementKind, ExperimentConfig, Mode, WORKERS_ENV};
use ssc_omp_cli::io::{read_labels, read_matrix, write_labels, MatrixFormat};
use ssc_omp_cli::run::{run_cluster, run_conditions, run_sweep, write_output};
use ssc_omp_cli::Result;

#[derive(Parser)]
#[command(name = "ssc-omp", version, about = "Subspace clustering by orthogonal matching pursuit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic density sweep; one CSV row per (rho, trial) plus means.
    Sweep(Common),
    /// Cluster the columns of a feature matrix.
    Cluster(ClusterArgs),
    /// Evaluate the sufficient conditions on synthetic instances.
    Conditions(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Concurrent workers (0 = all cores).
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Write NA instead of timings (byte-reproducible output).
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Ambient dimension.
    #[arg(long = "ambient")]
    ambient: Option<usize>,
    /// Comma-separated densities.
    #[arg(long, value_delimiter = ',')]
    densities: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    arrangement: Option<ArrangementArg>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    /// OMP iteration cap; 0 means N - 1.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Zero threshold for p% and e%.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Feature matrix, one point per column (.bin selects the binary format).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Number of clusters; defaults to the number of truth labels.
    #[arg(long)]
    clusters: Option<usize>,
    /// Where to write the estimated labels.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    SscOmp,
    Lsr,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrangementArg {
    Random,
    Independent,
    Identical,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

impl Common {
    fn resolve(&self, mode: Mode) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        c.mode = mode;
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(c.seed, self.seed);
        set!(c.trials, self.trials);
        set!(c.workers, self.workers);
        set!(c.synth.n, self.n);
        set!(c.synth.d, self.d);
        set!(c.synth.ambient, self.ambient);
        set!(c.synth.densities, self.densities);
        set!(c.algorithm.k_max, self.k_max);
        set!(c.algorithm.epsilon, self.epsilon);
        set!(c.algorithm.lambda, self.lambda);
        set!(c.metrics.threshold, self.threshold);
        if let Some(a) = self.algorithm {
            c.algorithm.kind = match a {
                AlgorithmArg::SscOmp => Algorithm::SscOmp,
                AlgorithmArg::Lsr => Algorithm::Lsr,
            };
        }
        if let Some(a) = self.arrangement {
            c.synth.arrangement = match a {
                ArrangementArg::Random => ArrangementKind::Random,
                ArrangementArg::Independent => ArrangementKind::Independent,
                ArrangementArg::Identical => ArrangementKind::Identical,
            };
        }
        if self.no_timing {
            c.timing = false;
        }
        if self.csv.is_some() {
            c.output.csv = self.csv.clone();
        }
        if self.json.is_some() {
            c.output.json = self.json.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit_csv(config: &ExperimentConfig, text: &str) -> Result<()> {
    match &config.output.csv {
        Some(p) => write_output(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(config: &ExperimentConfig, value: serde_json::Value) -> Result<()> {
    if let Some(p) = &config.output.json {
        let text = serde_json::to_string_pretty(&value).expect("serializable") + "\n";
        write_output(p, &text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep(args) => {
            let config = args.resolve(Mode::Sweep)?;
            let table = run_sweep(&config)?;
            emit_csv(&config, &table.to_csv(&config))?;
            emit_json(&config, json!({ "config": config, "rows": table.rows }))?;
            Ok(true)
        }
        Command::Conditions(args) => {
            let config = args.resolve(Mode::Conditions)?;
            let table = run_conditions(&config)?;
            emit_csv(&config, &table.to_csv(&config))?;
            emit_json(&config, json!({ "config": config, "table": table }))?;
            eprintln!("implication violations: {}", table.violations);
            Ok(table.violations == 0)
        }
        Command::Cluster(args) => {
            let config = args.common.resolve(Mode::Cluster)?;
            let format = match args.format {
                Some(FormatArg::Csv) => MatrixFormat::Csv,
                Some(FormatArg::Binary) => MatrixFormat::Binary,
                None => MatrixFormat::from_path(&args.input),
            };
            let points = read_matrix(&args.input, format)?;
            let truth = args.labels.as_deref().map(read_labels).transpose()?;
            let data = Dataset::normalized(points, truth)?;
            let (labels, report) = run_cluster(&data, args.clusters, &config)?;
            write_labels(&args.output, &labels)?;
            let value = json!({ "config": config, "result": report });
            println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
            emit_json(&config, value)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(7),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
