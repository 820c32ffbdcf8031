//! `qrflab` command-line front end.
//!
//! JSON results go to standard output (or `--output`), progress and
//! summaries to standard error. Exit codes: 0 success, 1 a check or table
//! mismatch, 2 usage or malformed input, 3 domain error.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrflab::paradox::TraceMethod;
use qrflab::verify::{SuiteSelector, DEFAULT_DIM_CAP};
use qrflab::{GroupSpec, DEFAULT_EPS};

#[derive(Debug, Parser)]
#[command(name = "qrflab", version, about = "Quantum reference frames on finite Abelian groups")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Base numerical tolerance.
    #[arg(long, global = true, env = "QRFLAB_EPS", default_value_t = DEFAULT_EPS)]
    eps: f64,

    /// Refuse spaces whose dimension |G|^N exceeds this.
    #[arg(long, global = true, default_value_t = DEFAULT_DIM_CAP)]
    dim_cap: usize,

    /// Run every kernel on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the property verification suites on one space.
    Verify(VerifyArgs),
    /// Run the three-particle phase paradox.
    Paradox(ParadoxArgs),
    /// Change the reference particle of an alignable state.
    Transform(TransformArgs),
    /// Print the aligned form of an alignable state.
    Align(AlignArgs),
    /// Find the finest invariant algebra containing an operator.
    Classify(InputArgs),
    /// Reduce a state or operator with one of the traces.
    Trace(TraceArgs),
    /// List the sector basis, or express an operator in it.
    SectorBasis(SectorBasisArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Group as a product of cyclic factors, e.g. `Z8` or `Z2xZ3`.
    #[arg(long)]
    group: GroupSpec,
    #[arg(long)]
    particles: usize,
    /// `all` or a comma-separated list of suite names.
    #[arg(long, default_value = "all")]
    suite: SuiteSelector,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suppress per-check progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct ParadoxArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    a: usize,
    #[arg(long, default_value_t = 2)]
    b: usize,
    #[arg(long, default_value_t = 5)]
    c: usize,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
    theta: f64,
    /// Mass of particle 1; defaults make `m1·a = m2·b` hold.
    #[arg(long, requires = "m2")]
    m1: Option<f64>,
    #[arg(long, requires = "m1")]
    m2: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    json: Option<std::path::PathBuf>,
    /// Methods to run (standard, trinv1, com, trel); all by default.
    #[arg(long, value_delimiter = ',')]
    trace: Vec<TraceMethod>,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// JSON file holding a state or operator; `-` reads standard input.
    #[arg(long, short)]
    input: String,
    /// Write the result here instead of standard output.
    #[arg(long, short)]
    output: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long)]
    from: usize,
    #[arg(long)]
    to: usize,
    /// The input is already the reduced state relative to `--from`.
    #[arg(long)]
    reduced: bool,
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long, default_value_t = 1)]
    particle: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TraceKind {
    /// Ordinary partial trace.
    Standard,
    /// Invariant trace, embedding relative to `--particle`.
    Particle,
    /// Invariant trace, center-of-mass embedding.
    Com,
    /// Relational trace.
    Relational,
    /// Relational trace divided by the relational weight.
    Conditional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Chart {
    Centered,
    Canonical,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    io: InputArgs,
    #[arg(long, value_enum)]
    kind: TraceKind,
    /// Number of trailing particles to trace out.
    #[arg(long, default_value_t = 1)]
    extra: usize,
    #[arg(long, default_value_t = 1)]
    particle: usize,
    /// One mass per remaining particle, comma-separated.
    #[arg(long, value_delimiter = ',')]
    masses: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Chart::Centered)]
    chart: Chart,
}

#[derive(Debug, Args)]
struct SectorBasisArgs {
    #[arg(long, required_unless_present = "input")]
    group: Option<GroupSpec>,
    #[arg(long, required_unless_present = "input")]
    particles: Option<usize>,
    /// Operator to rewrite in the sector basis.
    #[arg(long, short, conflicts_with_all = ["group", "particles"])]
    input: Option<String>,
    #[arg(long, short)]
    output: Option<std::path::PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
