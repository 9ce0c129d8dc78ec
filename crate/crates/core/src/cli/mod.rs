//! The `fusionwalk` command-line front end.
//!
//! Every subcommand writes a single JSON document (or a CSV table with
//! `--format csv`) that embeds the fully resolved configuration and the seed,
//! so identical invocations produce byte-identical output.
//!
//! Exit codes: `0` success (including undecided or non-convergent verdicts,
//! which are reported as values), `2` input errors, `3` numerical failures.

mod commands;
mod parse;
mod selftest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::fusion::FusionError;
use crate::moneq::MoneqError;
use crate::potential::PotentialError;
use crate::walk::WalkError;

pub use parse::{parse_label, parse_label_list, parse_measure, parse_ring};

const CSV_HELP: &str = "\
CSV columns (--format csv), stable across versions:
  ring      label,dim
  walk      label,p
  green     x,y,value,tail,terms  [,window_value]  [,mc_mean,mc_std_err]
  martin    x,y,value             (paper, std)
            x,h                   (limit)
  boundary  function,n,oscillation
  moneq     field,value

Ring descriptors: su2:T, su2q:Q, so3:DELTA2, group:zN, group:s3, a JSON
descriptor such as {\"kind\":\"su2\",\"t\":2.5}, or @path to a JSON file.
Measures: \"1:0.5,2:0.5\", \"uniform\" (finite rings), JSON, or @path.
Label lists: \"0,1,5\", \"0..=10\", \"20..=80:10\" or a JSON array.

Environment: FUSIONWALK_THREADS caps the number of worker threads.";

#[derive(Debug, Parser, Serialize)]
#[command(name = "fusionwalk", version, about = "Central random walks on duals of compact quantum groups", after_help = CSV_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "snake_case")]
pub enum Command {
    /// Fusion table, quantum dimensions and axiom checks of a ring.
    Ring(RingArgs),
    /// Exact n-step law of the central walk.
    Walk(WalkArgs),
    /// Green kernel G(x,y), optionally against the linear-solve and
    /// Monte-Carlo oracles.
    Green(GreenArgs),
    /// Martin kernels and their limits along a ray.
    Martin(MartinArgs),
    /// Transience and Cesàro test for bounded central harmonic functions.
    Boundary(BoundaryArgs),
    /// Classification and normal forms of A_o(F) and A_aut(D, ω).
    Moneq(MoneqArgs),
    /// Cross-module invariant suite with a pass/fail table.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed for randomized oracles.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkSpec {
    /// Ring descriptor.
    #[arg(long)]
    pub ring: String,
    /// Step measure.
    #[arg(long)]
    pub mu: String,
    /// Run even if the measure is not (provably) generating.
    #[arg(long)]
    pub allow_non_generating: bool,
    /// Horizon of the generation check.
    #[arg(long, default_value_t = 64)]
    pub generation_horizon: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RingKind {
    Su2,
    So3,
    Group,
}

#[derive(Debug, Args, Serialize)]
pub struct RingArgs {
    /// Ring descriptor (alternative to --kind).
    #[arg(long, conflicts_with = "kind")]
    pub ring: Option<String>,
    #[arg(long, value_enum)]
    pub kind: Option<RingKind>,
    /// Fundamental quantum dimension for --kind su2.
    #[arg(long)]
    pub t: Option<f64>,
    /// δ² for --kind so3.
    #[arg(long)]
    pub delta2: Option<f64>,
    /// zN, s3 or a JSON multiplication table for --kind group.
    #[arg(long)]
    pub group: Option<String>,
    /// Largest label index in the table.
    #[arg(long, default_value_t = 5)]
    pub max: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkArgs {
    #[command(flatten)]
    pub walk: WalkSpec,
    #[arg(long, default_value = "0")]
    pub from: String,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GreenArgs {
    #[command(flatten)]
    pub walk: WalkSpec,
    #[arg(long, default_value = "0")]
    pub x: String,
    #[arg(long, default_value = "0")]
    pub y: String,
    /// Relative tail tolerance of the series.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = crate::potential::DEFAULT_MAX_TERMS)]
    pub max_terms: usize,
    /// Also solve (I − P)G = I on labels 0..=WINDOW (integer rings).
    #[arg(long)]
    pub window: Option<u32>,
    /// Also estimate G by this many Monte-Carlo paths (uses --seed).
    #[arg(long)]
    pub mc_paths: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub mc_max_steps: usize,
    /// Stop Monte-Carlo paths above this label height.
    #[arg(long)]
    pub mc_kill_height: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// G(x,y)/G(x,ε)
    Paper,
    /// G(x,y)/G(ε,y)
    Std,
    /// Limit of the classical kernel of the reversed walk along --ray.
    Limit,
}

#[derive(Debug, Args, Serialize)]
pub struct MartinArgs {
    #[command(flatten)]
    pub walk: WalkSpec,
    #[arg(long, value_enum, default_value_t = Kernel::Paper)]
    pub kernel: Kernel,
    /// Evaluation labels (the window of the limit for --kernel limit).
    #[arg(long, default_value = "0..=5")]
    pub x: String,
    /// Second argument of the kernel (paper, std).
    #[arg(long, default_value = "0")]
    pub y: String,
    /// Strictly increasing ray (limit).
    #[arg(long, default_value = "20..=80:10")]
    pub ray: String,
    /// Green series tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Convergence threshold of the sup-difference along the ray.
    #[arg(long, default_value_t = 1e-6)]
    pub limit_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundaryArgs {
    #[command(flatten)]
    pub walk: WalkSpec,
    /// Test functions are compared on labels of height ≤ WINDOW.
    #[arg(long, default_value_t = 20)]
    pub window: u32,
    /// Largest block length of the Cesàro averages.
    #[arg(long, default_value_t = 5000)]
    pub n_max: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MoneqArgs {
    #[command(subcommand)]
    pub family: MoneqFamily,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MoneqFamily {
    /// Universal orthogonal quantum groups A_o(F).
    Ao(AoArgs),
    /// Quantum automorphism groups A_aut(D, ω).
    Aut(AutArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AoArgs {
    /// JSON matrix {"re":[[…]],"im":[[…]]}.
    #[arg(long = "F")]
    pub f: PathBuf,
    /// Second matrix to compare against.
    #[arg(long = "G")]
    pub g: Option<PathBuf>,
    /// Compare transition matrices with the SU_q(2) partner.
    #[arg(long)]
    pub verify_walk: bool,
    #[arg(long, default_value = "1:1.0")]
    pub mu: String,
    /// Labels 0..=MAX_LABEL are compared by --verify-walk.
    #[arg(long, default_value_t = 40)]
    pub max_label: u32,
    /// Eigenvalue tolerance for the isomorphism test.
    #[arg(long, default_value_t = 1e-8)]
    pub eig_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AutArgs {
    /// JSON spec {"blocks":[{"n":2,"F":{…}}]}.
    #[arg(long)]
    pub spec: PathBuf,
    /// Second spec to compare against.
    #[arg(long)]
    pub spec2: Option<PathBuf>,
    /// Compare transition matrices with the M_2 normal form.
    #[arg(long)]
    pub verify_walk: bool,
    #[arg(long, default_value = "1:1.0")]
    pub mu: String,
    #[arg(long, default_value_t = 40)]
    pub max_label: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SelftestArgs {
    /// Print the table as JSON.
    #[arg(long)]
    pub json: bool,
}

/// Failure of a CLI run, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::Overflow(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::Fusion(f) => f.into(),
            WalkError::Resource(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::Walk(w) => w.into(),
            PotentialError::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<MoneqError> for CliError {
    fn from(e: MoneqError) -> Self {
        match e {
            MoneqError::Fusion(f) => f.into(),
            MoneqError::Walk(w) => w.into(),
            MoneqError::Invariant(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// A finished report: the JSON document and, where defined, its CSV table.
pub struct Report {
    pub json: serde_json::Value,
    pub csv: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
}

impl Report {
    fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json)
                    .map_err(|e| CliError::Numerical(e.to_string()))?;
                s.push('\n');
                Ok(s.into_bytes())
            }
            Format::Csv => {
                let (header, rows) = self
                    .csv
                    .as_ref()
                    .ok_or_else(|| CliError::Input("this report has no CSV form".into()))?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header)?;
                for r in rows {
                    w.write_record(r)?;
                }
                w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))
            }
        }
    }
}

fn emit(report: &Report, output: &OutputArgs) -> Result<(), CliError> {
    let bytes = report.render(output.format)?;
    match &output.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FUSIONWALK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("FUSIONWALK_THREADS must be a positive integer, got {v:?}")))?;
    // a pool that is already built (repeated runs in one process) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one parsed invocation.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let config = serde_json::to_value(cli).map_err(|e| CliError::Numerical(e.to_string()))?;
    let (report, output) = match &cli.command {
        Command::Ring(a) => (commands::ring(a, config)?, &a.output),
        Command::Walk(a) => (commands::walk(a, config)?, &a.output),
        Command::Green(a) => (commands::green(a, config)?, &a.output),
        Command::Martin(a) => (commands::martin(a, config)?, &a.output),
        Command::Boundary(a) => (commands::boundary(a, config)?, &a.output),
        Command::Moneq(m) => match &m.family {
            MoneqFamily::Ao(a) => (commands::moneq_ao(a, config)?, &a.output),
            MoneqFamily::Aut(a) => (commands::moneq_aut(a, config)?, &a.output),
        },
        Command::Selftest(a) => return selftest::run(a),
    };
    emit(&report, output)
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
