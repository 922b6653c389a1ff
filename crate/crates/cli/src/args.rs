use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "strata", version, about = "Cluster, embed and validate survey-style tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic survey data with planted clusters.
    Generate(GenerateArgs),
    /// Chi-square test of independence.
    Chi2(Chi2Args),
    /// Pooled two-proportion z-test.
    Twoprop(TwopropArgs),
    /// K-Modes or K-Prototypes clustering, or an elbow sweep.
    Cluster(ClusterArgs),
    /// Exact t-SNE embedding with a cluster-coloured scatter plot.
    Embed(EmbedArgs),
    /// Check that cluster labels are predictable with boosted trees.
    Validate(ValidateArgs),
    /// Run every stage and bundle the artifacts with a manifest.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = "STRATA_OUT_DIR", default_value = "strata_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Delimited data file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON schema describing every column.
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator spec (JSON); the bundled demo spec when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Schema for --spec; the demo schema when omitted.
    #[arg(long, requires = "spec")]
    pub schema: Option<PathBuf>,
    /// Rows for the demo spec.
    #[arg(long, default_value_t = 2000, conflicts_with = "spec")]
    pub rows: usize,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["counts", "data"])))]
pub struct Chi2Args {
    /// Observed counts, rows separated by `;`, e.g. "1217,164;109,10".
    #[arg(long)]
    pub counts: Option<String>,
    #[arg(long, requires_all = ["schema", "rows_var", "cols_var"])]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Row variable of the cross-tabulation.
    #[arg(long, requires = "data")]
    pub rows_var: Option<String>,
    /// Column variable of the cross-tabulation.
    #[arg(long, requires = "data")]
    pub cols_var: Option<String>,
    #[command(flatten)]
    pub test: TestArgs,
}

#[derive(Debug, Args)]
pub struct TwopropArgs {
    #[arg(long)]
    pub x1: u64,
    #[arg(long)]
    pub n1: u64,
    #[arg(long)]
    pub x2: u64,
    #[arg(long)]
    pub n2: u64,
    #[arg(long, value_enum, default_value_t = AlternativeArg::TwoSided)]
    pub alternative: AlternativeArg,
    #[command(flatten)]
    pub test: TestArgs,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Population size, for the 10% independence condition.
    #[arg(long)]
    pub population_n: Option<u64>,
    /// Exit with status 2 when a condition check fails.
    #[arg(long)]
    pub strict: bool,
    /// Recorded in the manifest; the tests themselves are not random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the result and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlternativeArg {
    Greater,
    Less,
    TwoSided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Random,
    Huang,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Kmodes,
    Kproto,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("size").required(true).args(["k", "k_range"])))]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated columns to cluster.
    #[arg(long, value_delimiter = ',', required = true)]
    pub columns: Vec<String>,
    #[arg(long, value_enum, default_value_t = Algo::Kproto)]
    pub algo: Algo,
    #[arg(long, conflicts_with = "k_range")]
    pub k: Option<usize>,
    /// Elbow sweep, e.g. 1..8 (inclusive).
    #[arg(long, value_parser = parse_k_range)]
    pub k_range: Option<RangeInclusive<usize>>,
    /// Categorical weight for K-Prototypes.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// K-Modes initialisation.
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    pub init: InitArg,
    /// Skip standardizing numeric columns.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub columns: Vec<String>,
    /// `row,cluster` file written by `cluster`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    /// Step size; lower it (10 to 50) for a few dozen points.
    #[arg(long, default_value_t = 200.0)]
    pub learning_rate: f64,
    /// Larger inputs are subsampled to this many rows.
    #[arg(long, default_value_t = 1000)]
    pub max_points: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub features: Vec<String>,
    /// `row,cluster` file written by `cluster`.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutDir,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["all", "data"])))]
pub struct ReportArgs {
    /// Run the whole pipeline on generated demo data.
    #[arg(long)]
    pub all: bool,
    #[arg(long, requires_all = ["schema", "columns", "features"])]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, value_delimiter = ',', requires = "data")]
    pub columns: Vec<String>,
    #[arg(long, value_delimiter = ',', requires = "data")]
    pub features: Vec<String>,
    /// Demo rows.
    #[arg(long, default_value_t = 2000, conflicts_with = "data")]
    pub rows: usize,
    /// Seed of the demo data.
    #[arg(long, default_value_t = 7, conflicts_with = "data")]
    pub data_seed: u64,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value = "1..8", value_parser = parse_k_range)]
    pub k_range: RangeInclusive<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 800)]
    pub tsne_points: usize,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub tsne_iterations: usize,
    #[arg(long, default_value_t = 200)]
    pub rounds: usize,
    #[command(flatten)]
    pub out: OutDir,
}

pub fn parse_k_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .or_else(|| s.split_once('-'))
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: usize = a.trim().parse().map_err(|_| format!("bad lower bound `{a}`"))?;
    let hi: usize = b.trim().parse().map_err(|_| format!("bad upper bound `{b}`"))?;
    if lo == 0 || hi < lo {
        return Err(format!("need 1 <= LO <= HI, got {lo}..{hi}"));
    }
    Ok(lo..=hi)
}
