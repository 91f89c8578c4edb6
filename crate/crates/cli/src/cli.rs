use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "recmax", version, about = "Records, champions and D-norm estimators for multivariate extremes")]
pub struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, env = "RECMAX_WORKERS")]
    pub workers: Option<usize>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// D-norm of a vector.
    Norm(PointArgs),
    /// Dual D-norm function of a vector.
    Dual(PointArgs),
    /// Extremal concurrence probability by one or all routes.
    Concurrence(ConcurrenceArgs),
    /// Scan a data file or simulate record streams.
    #[command(subcommand)]
    Records(RecordsCommand),
    /// First record time N(2): integral and direct routes, tail and divergence flag.
    RecordTimes(RecordTimesArgs),
    /// Limiting champion survival on a grid of points x <= 0.
    ChampionDist(DistArgs),
    /// Limiting simple-record df on a grid of points x <= 0.
    SimpleDist(DistArgs),
    /// Tail comparison measure chi-bar(u) on a grid of levels.
    ChiBar(ChiBarArgs),
    /// Draw samples from a copula or a standard max-stable model.
    Sample(SampleArgs),
}

#[derive(Args, Debug)]
pub struct PointArgs {
    /// Model descriptor, e.g. logistic:2:d=3, mo:0.5, comonotone.
    #[arg(long)]
    pub model: String,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Generator,
    Eta,
    Empirical,
    All,
}

#[derive(Args, Debug)]
pub struct ConcurrenceArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum, default_value_t = Method::All)]
    pub method: Method,
    /// Copula for the empirical route; defaults to the max-stable copula of the model.
    #[arg(long)]
    pub copula: Option<String>,
    /// Batch size of the empirical route.
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    /// Replications of the empirical route.
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Subcommand, Debug)]
pub enum RecordsCommand {
    /// Scan a CSV (header x1,...,xd) or NDJSON file.
    Scan(ScanArgs),
    /// Simulate one stream, or average counts over many with --reps.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the record times as CSV (k,time,complete).
    #[arg(long)]
    pub times_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub copula: String,
    /// Stream length.
    #[arg(long)]
    pub n: u64,
    /// Number of streams; more than one switches to the growth table.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Growth-table checkpoints; defaults to powers of ten up to n.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct RecordTimesArgs {
    #[arg(long)]
    pub copula: String,
    /// Longest search for the second record in the direct route.
    #[arg(long, default_value_t = 10_000)]
    pub cap: u64,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Args, Debug)]
pub struct DistArgs {
    #[arg(long)]
    pub model: String,
    /// Grid points separated by ';', coordinates by ','.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Also run the empirical conditional route with this batch size.
    #[arg(long)]
    pub empirical_n: Option<u64>,
    /// Replications of the empirical route.
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Args, Debug)]
pub struct ChiBarArgs {
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub copula: Option<String>,
    /// Data file (CSV or NDJSON) instead of a copula.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// 1-based coordinate pair of the data file.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2])]
    pub pair: Vec<usize>,
    /// Comma-separated levels in (0, 1).
    #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.99, 0.999])]
    pub u: Vec<f64>,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub copula: Option<String>,
    /// Draw eta from a standard max-stable model instead.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
