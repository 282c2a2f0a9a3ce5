use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drs_core::DrsError;

mod estimate;
mod simulate;

#[derive(Parser, Debug)]
#[command(name = "drs", version, about = "Population size estimation for two dependent record systems")]
struct Cli {
    /// Cap on worker threads used by bootstraps and studies.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate population sizes from a two-stratum data file.
    Estimate(EstimateArgs),
    /// Run a replication study on simulated data.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// CSV or JSON file with columns stratum,x11,x10,x01 (two rows).
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated methods: lp, mme1, mle1, mme2, mle2, nour, wolter1, wolter2.
    #[arg(long, value_delimiter = ',', default_value = "mme1")]
    pub method: Vec<String>,
    /// Known ratio N_A / N_B (required by the Wolter estimators).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Also impose the ratio on the likelihood fits.
    #[arg(long, requires = "ratio")]
    pub constrain_ratio: bool,
    /// Number of bootstrap resamples; 0 disables the bootstrap.
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, value_enum, default_value_t = Scheme::Parametric)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report as JSON or CSV, chosen by extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Name of the stratum that may carry dependence (default: first row).
    #[arg(long)]
    pub dependent: Option<String>,
    /// Echo the parsed tables as CSV and exit.
    #[arg(long)]
    pub dump: bool,
    #[arg(long, value_enum, default_value_t = LogFactorialArg::Exact)]
    pub log_factorial: LogFactorialArg,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// TOML file listing designs; replaces the design flags.
    #[arg(long, conflicts_with_all = ["preset", "model", "na", "nb", "alpha"])]
    pub config: Option<PathBuf>,
    /// Capture-probability preset, P1 to P6.
    #[arg(long, required_unless_present = "config")]
    pub preset: Option<String>,
    #[arg(long, value_enum, required_unless_present = "config")]
    pub model: Option<ModelArg>,
    #[arg(long, required_unless_present = "config")]
    pub na: Option<u64>,
    #[arg(long, required_unless_present = "config")]
    pub nb: Option<u64>,
    #[arg(long, required_unless_present = "config")]
    pub alpha: Option<f64>,
    /// Overrides the replicate count of every design.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    pub seed: Option<u64>,
    /// Comma-separated estimators; defaults depend on the model.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// How preset probability pairs are read.
    #[arg(long, value_enum, default_value_t = ReadingArg::Direct)]
    pub reading: ReadingArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Multinomial)]
    pub mode: ModeArg,
    /// Write results as JSON or CSV, chosen by extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Parametric,
    Nonparametric,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArg {
    #[value(name = "I", alias = "i", alias = "1")]
    I,
    #[value(name = "II", alias = "ii", alias = "2")]
    II,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReadingArg {
    Direct,
    Marginal,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Multinomial,
    Individual,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFactorialArg {
    Exact,
    Stirling,
    Stirling1,
}

/// Exit status 2: an estimator does not apply to the data.
#[derive(Debug)]
pub struct Infeasible(pub String);

impl std::fmt::Display for Infeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Infeasible {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Infeasible>().is_some() {
        return 2;
    }
    match err.downcast_ref::<DrsError>() {
        Some(e) if e.is_infeasibility() => 2,
        _ => 1,
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
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Estimate(args) => estimate::run(args),
        Command::Simulate(args) => simulate::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
