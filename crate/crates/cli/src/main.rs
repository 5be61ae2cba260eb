//! `rotant`: run experiment sweeps, convergence traces, and export
//! codebooks or topologies.
//!
//! Exit status is 0 on success, 2 for an invalid spec or arguments, and 1
//! for failures while running or writing results.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rotant_core::discrete::{fibonacci_codebook, uniform_grid_codebook};
use rotant_core::harness::{
    convergence_trace, emit, preset, run_experiment, write_summary_csv, write_trace_csv, ExperimentSpec, Format, Scheme,
    Sweep, SweepVar, PRESETS,
};
use rotant_core::scene::generate_topology;
use rotant_core::Error;

#[derive(Parser)]
#[command(name = "rotant", version, about = "Joint beamforming and antenna orientation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write one row per trial.
    Run(RunArgs),
    /// Write the per-iteration trace of a single wmmse_ra or disc_cem run.
    Trace(TraceArgs),
    /// Write a codebook as CSV (index, theta, phi, x, y, z).
    Codebook(CodebookArgs),
    /// Write the topology of one seeded scene as JSON.
    Topology(TopologyArgs),
}

#[derive(Args)]
struct SpecSource {
    /// Experiment spec (TOML). Defaults apply to anything it leaves out.
    spec: Option<PathBuf>,
    /// Start from a built-in grid instead of a file.
    #[arg(long, conflicts_with = "spec", value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
}

impl SpecSource {
    fn load(&self) -> Result<ExperimentSpec, Error> {
        let mut spec = match (&self.spec, &self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
                ExperimentSpec::from_toml(&text)?
            }
            (None, Some(name)) => preset(name)?,
            (None, None) => ExperimentSpec::default(),
        };
        if let Some(seed) = self.seed {
            spec.scene.seed = seed;
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SpecSource,
    /// Schemes to run (comma separated), replacing the spec's list.
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<String>,
    /// Sweep variable: p_max_dbm, My, p, theta_max or N_dir.
    #[arg(long, requires = "values")]
    sweep: Option<String>,
    /// Sweep values (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Vec<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also write per-cell mean and standard deviation as CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Record wall-clock seconds per trial (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    source: SpecSource,
    #[arg(long, default_value = "wmmse_ra")]
    scheme: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodebookKindArg {
    Fibonacci,
    Grid,
}

#[derive(Args)]
struct CodebookArgs {
    #[arg(long, value_enum, default_value_t = CodebookKindArg::Fibonacci)]
    kind: CodebookKindArg,
    /// Number of Fibonacci directions.
    #[arg(long, default_value_t = 25)]
    n_dir: usize,
    /// Zenith levels of the grid.
    #[arg(long, default_value_t = 5)]
    n_theta: usize,
    /// Azimuth levels of the grid.
    #[arg(long, default_value_t = 5)]
    n_phi: usize,
    /// Cap half-angle in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    theta_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TopologyArgs {
    #[command(flatten)]
    source: SpecSource,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Spec(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::InvalidConfig(_)
            | Error::InvalidSearch(_)
            | Error::AngleOutOfRange(_)
            | Error::ZfNeedsMoreElements { .. }
            | Error::SearchTooLarge(_) => Failure::Spec(e),
            other => Failure::Runtime(other),
        }
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::Runtime(e.into()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut out: Box<dyn Write>) -> Result<(), Failure> {
    out.flush().map_err(|e| Failure::Runtime(e.into()))
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut spec = args.source.load()?;
    if !args.scheme.is_empty() {
        spec.schemes = args.scheme.iter().map(|s| s.parse::<Scheme>()).collect::<Result<_, _>>()?;
    }
    if let Some(var) = &args.sweep {
        spec.sweep = Some(Sweep { variable: var.parse::<SweepVar>()?, values: args.values.clone() });
    } else if !args.values.is_empty() {
        let sweep = spec
            .sweep
            .as_mut()
            .ok_or_else(|| Error::InvalidSpec("--values given without a sweep variable".into()))?;
        sweep.values = args.values.clone();
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    spec.record_timing |= args.timing;
    spec.validate()?;
    let result = run_experiment(&spec)?;
    let mut out = open_output(args.out.as_deref())?;
    emit(&result.rows, args.format.into(), &mut out)?;
    finish(out)?;
    if let Some(path) = &args.summary {
        let mut out = open_output(Some(path))?;
        write_summary_csv(&result.summary, &mut out)?;
        finish(out)?;
    }
    Ok(())
}

fn trace(args: TraceArgs) -> Result<(), Failure> {
    let spec = args.source.load()?;
    let scheme: Scheme = args.scheme.parse()?;
    let rows = convergence_trace(&spec, scheme)?;
    let mut out = open_output(args.out.as_deref())?;
    write_trace_csv(&rows, &mut out)?;
    finish(out)
}

fn codebook(args: CodebookArgs) -> Result<(), Failure> {
    let cb = match args.kind {
        CodebookKindArg::Fibonacci => fibonacci_codebook(args.n_dir, args.theta_max)?,
        CodebookKindArg::Grid => uniform_grid_codebook(args.n_theta, args.n_phi, args.theta_max)?,
    };
    let mut out = open_output(args.out.as_deref())?;
    cb.write_csv(&mut out)?;
    finish(out)
}

fn topology(args: TopologyArgs) -> Result<(), Failure> {
    let spec = args.source.load()?;
    let scene = spec.scene.resolved()?;
    let json = generate_topology(&scene).to_json()?;
    let mut out = open_output(args.out.as_deref())?;
    writeln!(out, "{json}").map_err(|e| Failure::Runtime(e.into()))?;
    finish(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Trace(a) => trace(a),
        Command::Codebook(a) => codebook(a),
        Command::Topology(a) => topology(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Spec(e)) => {
            eprintln!("rotant: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("rotant: {e}");
            ExitCode::from(1)
        }
    }
}
