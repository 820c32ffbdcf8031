use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use serde_json::Value;

use qrflab::alignment::align_to;
use qrflab::exec::Execution;
use qrflab::hilbert::partial_trace_last;
use qrflab::invariants::{classify, is_member, AlgebraTag};
use qrflab::paradox::{run_paradox_with, ParadoxConfig, TraceMethod};
use qrflab::sectors::{sector_basis_labels, to_sector_basis};
use qrflab::symmetry::{qrf_transform, ResidueChart};
use qrflab::traces::{conditional_state, relational_weight, trel, EmbeddingKind, EmbeddingSpec};
use qrflab::verify::{run_suite, CheckStatus, VerifyConfig};
use qrflab::{Error, Operator, SpaceLabel, StateVector};

use super::{
    AlignArgs, Chart, Cli, Command, Global, InputArgs, ParadoxArgs, SectorBasisArgs, TraceArgs, TraceKind,
    TransformArgs, VerifyArgs,
};

pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Domain(_)
            | Error::NotAlignable
            | Error::UndefinedConditional { .. }
            | Error::DimensionCap { .. }
            | Error::Unsupported(_),
        ) => 3,
        _ => 2,
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::Verify(args) => verify(g, args),
        Command::Paradox(args) => paradox(g, args),
        Command::Transform(args) => transform(g, args),
        Command::Align(args) => align(g, args),
        Command::Classify(args) => classify_cmd(g, args),
        Command::Trace(args) => trace(g, args),
        Command::SectorBasis(args) => sector_basis(g, args),
    }
}

impl Global {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn check_space(&self, space: &SpaceLabel) -> Result<()> {
        if space.dim() > self.dim_cap {
            return Err(Error::DimensionCap { dim: space.dim(), cap: self.dim_cap }.into());
        }
        Ok(())
    }
}

enum Loaded {
    State(StateVector),
    Operator(Operator),
}

impl Loaded {
    fn space(&self) -> &SpaceLabel {
        match self {
            Loaded::State(s) => s.space(),
            Loaded::Operator(o) => o.space(),
        }
    }

    fn into_operator(self) -> Operator {
        match self {
            Loaded::State(s) => s.projector(),
            Loaded::Operator(o) => o,
        }
    }
}

fn load(g: &Global, path: &str) -> Result<Loaded> {
    let text = if path == "-" {
        let mut buf = String::new();
        io::stdin().read_to_string(&mut buf).context("reading standard input")?;
        buf
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))?
    };
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
    // states and operators share the wire format; the data length decides
    let loaded = match serde_json::from_value::<Operator>(value.clone()) {
        Ok(op) => Loaded::Operator(op),
        Err(op_err) => match serde_json::from_value::<StateVector>(value) {
            Ok(psi) => Loaded::State(psi),
            Err(_) => {
                return Err(anyhow!(op_err)).with_context(|| format!("{path} is neither a state nor an operator"))
            }
        },
    };
    g.check_space(loaded.space())?;
    Ok(loaded)
}

fn load_state(g: &Global, path: &str) -> Result<StateVector> {
    match load(g, path)? {
        Loaded::State(s) => Ok(s),
        Loaded::Operator(_) => Err(anyhow!("{path} holds an operator, expected a state vector")),
    }
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match output {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => match writeln!(io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            other => Ok(other?),
        },
    }
}

fn verify(g: &Global, args: VerifyArgs) -> Result<ExitCode> {
    let space = SpaceLabel::new(args.group, args.particles)?;
    let mut cfg = VerifyConfig::new(space);
    cfg.suites = args.suite;
    cfg.seed = args.seed;
    cfg.dim_cap = g.dim_cap;
    cfg.eps = g.eps;
    cfg.exec = g.exec();
    let quiet = args.quiet;
    let result = run_suite(&cfg, |c| {
        if !quiet {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "skip",
            };
            let dev = c.max_deviation.map_or_else(|| "-".to_string(), |d| format!("{d:.2e}"));
            eprintln!("[{status}] {:<45} {dev:>9} {:>8.1} ms", c.name, c.runtime_ms);
        }
    })?;
    eprintln!(
        "{} passed, {} failed, {} skipped on {}^{}",
        result.count(CheckStatus::Pass),
        result.count(CheckStatus::Fail),
        result.count(CheckStatus::Skipped),
        result.group,
        result.particles
    );
    emit(&result, None)?;
    Ok(if result.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn paradox(g: &Global, args: ParadoxArgs) -> Result<ExitCode> {
    let cfg = match (args.m1, args.m2) {
        (Some(m1), Some(m2)) => ParadoxConfig::with_masses(args.n, args.a, args.b, args.c, args.theta, (m1, m2))?,
        _ => ParadoxConfig::new(args.n, args.a, args.b, args.c, args.theta)?,
    };
    let methods = if args.trace.is_empty() { TraceMethod::ALL.to_vec() } else { args.trace };
    let report = run_paradox_with(&cfg, &methods, g.exec())?;

    if !report.mass_condition_holds {
        eprintln!("warning: m1·a ≠ m2·b, the center-of-mass trace is not expected to keep θ");
    }
    if report.angelo.degenerate {
        eprintln!("warning: 2(a+b) ≡ 0 mod n, the two branches of T coincide");
    }
    for m in &report.methods {
        let verdict = if m.theta_visible { "visible" } else { "lost" };
        eprintln!("{:<9} θ {verdict:<8} deviation {:.3e}", m.method.to_string(), m.theta_deviation);
    }
    let matches = report.matches_expected_table();
    eprintln!("table {}", if matches { "matches" } else { "DOES NOT match" });

    emit(&report, args.json.as_deref())?;
    Ok(if matches { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn transform(g: &Global, args: TransformArgs) -> Result<ExitCode> {
    let input = load_state(g, &args.io.input)?;
    let (space, reduced) = if args.reduced {
        let red = input.space();
        (red.with_particles(red.particles() + 1)?, input)
    } else {
        let form = align_to(&input, args.from)?;
        (input.space().clone(), form.reduced_state)
    };
    let out = qrf_transform(&space, args.from, args.to)?.apply(&reduced)?;
    emit(&out, args.io.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn align(g: &Global, args: AlignArgs) -> Result<ExitCode> {
    let psi = load_state(g, &args.io.input)?;
    emit(&align_to(&psi, args.particle)?, args.io.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Classification {
    finest: Option<AlgebraTag>,
    members: Vec<(AlgebraTag, bool)>,
}

fn classify_cmd(g: &Global, args: InputArgs) -> Result<ExitCode> {
    let op = load(g, &args.input)?.into_operator();
    let members = AlgebraTag::ALL.into_iter().map(|t| (t, is_member(&op, t, g.eps))).collect();
    emit(&Classification { finest: classify(&op, g.eps), members }, args.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn trace(g: &Global, args: TraceArgs) -> Result<ExitCode> {
    let loaded = load(g, &args.io.input)?;
    let exec = g.exec();
    let large = loaded.space().clone();
    if args.extra == 0 || args.extra >= large.particles() {
        return Err(anyhow!("--extra must be between 1 and {}", large.particles().saturating_sub(1)));
    }
    let small = large.with_particles(large.particles() - args.extra)?;
    let invariant = |kind| -> Result<Operator> {
        let spec = EmbeddingSpec::new(kind, small.clone(), args.extra)?;
        Ok(match &loaded {
            Loaded::State(s) => spec.trace(s, exec)?,
            Loaded::Operator(o) => spec.trace(o, exec)?,
        })
    };
    let out = match args.kind {
        TraceKind::Standard => match &loaded {
            Loaded::State(s) => partial_trace_last(s, args.extra)?,
            Loaded::Operator(o) => o.partial_trace_last(args.extra)?,
        },
        TraceKind::Particle => invariant(EmbeddingKind::Particle(args.particle))?,
        TraceKind::Com => {
            let chart = match args.chart {
                Chart::Centered => ResidueChart::Centered,
                Chart::Canonical => ResidueChart::Canonical,
            };
            invariant(EmbeddingKind::CenterOfMass { masses: args.masses, chart })?
        }
        TraceKind::Relational => match &loaded {
            Loaded::State(s) => trel(s, args.extra, exec)?,
            Loaded::Operator(o) => trel(o, args.extra, exec)?,
        },
        TraceKind::Conditional => {
            let (out, w) = match &loaded {
                Loaded::State(s) => (conditional_state(s, args.extra, g.eps, exec)?, relational_weight(s)),
                Loaded::Operator(o) => (conditional_state(o, args.extra, g.eps, exec)?, relational_weight(o)),
            };
            eprintln!("relational weight {w:.6e}");
            out
        }
    };
    emit(&out, args.io.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn sector_basis(g: &Global, args: SectorBasisArgs) -> Result<ExitCode> {
    match args.input {
        Some(path) => {
            let op = load(g, &path)?.into_operator();
            emit(&to_sector_basis(&op, g.exec()), args.output.as_deref())?;
        }
        None => {
            let group = args.group.expect("clap enforces --group without --input");
            let particles = args.particles.expect("clap enforces --particles without --input");
            let space = SpaceLabel::new(group, particles)?;
            g.check_space(&space)?;
            emit(&sector_basis_labels(&space), args.output.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
