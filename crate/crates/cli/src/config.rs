//! Command-line flags and the TOML run file. Every flag can also be set in
//! the file: common keys at the top level, per-command keys in a table
//! named after the command, radius-schedule keys in a `schedule` sub-table
//! (`[estimate.schedule]`). Flags win over file values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Parser, Debug)]
#[command(
    name = "mfdim",
    version,
    about = "Multifractal dimensions of measures and their projections"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output format (default: csv, or table for verify).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: stdout).
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Append to the output file instead of replacing it.
    #[arg(long, global = true)]
    pub append: bool,
    /// TOML run file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    /// Human-readable table (verify and report only).
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a measure and write it to a file.
    Generate(GenerateArgs),
    /// Estimate the four dimensions of a measure at each q.
    Estimate(EstimateArgs),
    /// Compare dimensions before and after projection onto random subspaces.
    Project(ProjectArgs),
    /// Run a named experiment and report a verdict.
    Verify(VerifyArgs),
    /// Pretty-print result files written by the other commands.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Estimate(_) => "estimate",
            Command::Project(_) => "project",
            Command::Verify(_) => "verify",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateArgs {
    /// Bernoulli probabilities, e.g. 0.3,0.7 (symbolic tree).
    #[arg(long, value_delimiter = ',', group = "kind")]
    pub bernoulli: Option<Vec<f64>>,
    /// Binary deranged Cantor measure on [0, 1] (embedded tree).
    #[arg(long, group = "kind")]
    pub cantor: bool,
    /// Block-oscillating binary measure (symbolic tree).
    #[arg(long, group = "kind")]
    pub oscillating: bool,
    /// Built-in point cloud: cantor5sq, segment or square.
    #[arg(long, group = "kind")]
    pub cloud: Option<String>,
    /// Tree depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Contraction ratio of both Cantor children.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Left and right Cantor ratios; overrides --ratio.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Left and right Cantor masses (default 0.5,0.5).
    #[arg(long, value_delimiter = ',')]
    pub masses: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleArgs {
    /// Radii are base^-k for k in [k-min, k-max].
    #[arg(long)]
    pub base: Option<f64>,
    /// Coarsest scale index.
    #[arg(long)]
    pub k_min: Option<i32>,
    /// Finest scale index.
    #[arg(long)]
    pub k_max: Option<i32>,
    /// Number of finest radii over which liminf/limsup are taken.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateArgs {
    /// Measure file, or a built-in cloud name.
    #[arg(long)]
    pub measure: Option<String>,
    /// Reference measure μ (default: the measure itself).
    #[arg(long)]
    pub reference: Option<String>,
    /// Build a Bernoulli measure in place of --measure.
    #[arg(long, value_delimiter = ',')]
    pub bernoulli: Option<Vec<f64>>,
    /// Depth of the --bernoulli tree, or of a built-in tree.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Exponents q, e.g. -1,0,2 (default 0,1,2).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Sample size N.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Low and high percentile, e.g. 0.01,0.99.
    #[arg(long, value_delimiter = ',')]
    pub percentiles: Option<Vec<f64>>,
    /// Pointwise exponent rule (default anchored-chord).
    #[arg(long, value_enum)]
    pub rule: Option<Rule>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Write (log r, log ν(B), log μ(B)) per sampled point to this CSV.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Ratio,
    AnchoredChord,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectArgs {
    /// Point-cloud file, embedded tree file, or built-in cloud name.
    #[arg(long)]
    pub measure: Option<String>,
    /// Subspace dimension m.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of random subspaces (default 50).
    #[arg(long)]
    pub subspaces: Option<usize>,
    /// Exponents q (default 0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Sample size N per subspace.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest allowed change of any dimension (default 0.1).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Points drawn when the input is a tree (default 100000).
    #[arg(long)]
    pub cloud_size: Option<usize>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Write the projection onto the first sampled subspace to this CSV.
    #[arg(long)]
    pub projected_out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QuasiBernoulli,
    Unidimensionality,
    Ergodic,
    Projection,
    KernelLemmas,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    /// Experiment to run.
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    /// Bernoulli probabilities.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Tree depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Depths for the ergodic experiment, increasing.
    #[arg(long, value_delimiter = ',')]
    pub depths: Option<Vec<usize>>,
    /// Exponents q.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Sample size N.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Measure file or built-in name (cloud names, block-oscillating,
    /// two-regime).
    #[arg(long)]
    pub measure: Option<String>,
    /// Subspace dimension m, or the kernel exponent.
    #[arg(long)]
    pub m: Option<u32>,
    /// Number of random subspaces.
    #[arg(long)]
    pub subspaces: Option<usize>,
    /// Tolerance of each check.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Fraction of subspaces that must pass.
    #[arg(long)]
    pub pass_fraction: Option<f64>,
    /// The cloud lives on an Ahlfors-regular set of dimension at most m.
    #[arg(long)]
    pub ahlfors: bool,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// Files written by estimate, project or verify.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunFile {
    seed: Option<u64>,
    threads: Option<usize>,
    format: Option<Format>,
    out: Option<PathBuf>,
    append: bool,
    generate: GenerateArgs,
    estimate: EstimateArgs,
    project: ProjectArgs,
    verify: VerifyArgs,
    report: ReportArgs,
}

/// Fills every unset field of `$flags` from `$file`.
macro_rules! fill {
    ($flags:expr, $file:expr; $($field:ident),* $(,)?) => {
        $( if $flags.$field.is_none() { $flags.$field = $file.$field; } )*
    };
}

fn fill_schedule(flags: &mut ScheduleArgs, file: ScheduleArgs) {
    fill!(flags, file; base, k_min, k_max, window);
}

/// Merges the run file named by `--config`, if any, under the flags.
pub fn apply_run_file(cli: &mut Cli) -> Result<(), UsageError> {
    let Some(path) = cli.common.config.clone() else {
        return Ok(());
    };
    let file = read_run_file(&path)?;
    fill!(cli.common, file; seed, threads, format, out);
    cli.common.append |= file.append;
    match &mut cli.command {
        Command::Generate(a) => {
            let f = file.generate;
            a.cantor |= f.cantor;
            a.oscillating |= f.oscillating;
            fill!(a, f; bernoulli, cloud, depth, ratio, ratios, masses);
        }
        Command::Estimate(a) => {
            let f = file.estimate;
            fill_schedule(&mut a.schedule, f.schedule);
            fill!(a, f; measure, reference, bernoulli, depth, q, samples, percentiles, rule, plot_data);
        }
        Command::Project(a) => {
            let f = file.project;
            fill_schedule(&mut a.schedule, f.schedule);
            fill!(a, f; measure, m, subspaces, q, samples, tolerance, cloud_size, projected_out);
        }
        Command::Verify(a) => {
            let f = file.verify;
            fill_schedule(&mut a.schedule, f.schedule);
            a.ahlfors |= f.ahlfors;
            fill!(a, f; experiment, p, depth, depths, q, samples, measure, m, subspaces, tolerance, pass_fraction);
        }
        Command::Report(a) => {
            if a.files.is_empty() {
                a.files = file.report.files;
            }
        }
    }
    Ok(())
}

fn read_run_file(path: &Path) -> Result<RunFile, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
}
