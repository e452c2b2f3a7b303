//! `raimi`: run Raimi certification experiments from config files.
//!
//! Exit status is 0 when the run certifies (or every check passes), 2 when
//! it completes without certifying (or a check fails), and 1 on any error.
//! `RAIMI_THREADS` caps the number of worker threads.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use raimi::experiment::{write_file, Experiment};
use raimi::geometry::{Omega, SurfaceSpec};
use raimi::harness::{Objective, Status};
use raimi::hypotheses::{check_hypotheses, HypothesisSettings};
use raimi::lang::SetExpr;
use raimi::measures::{init_workers, Execution, Surface};
use raimi::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "raimi",
    version,
    about = "Certify Raimi-type unavoidability for covers of surfaces with a circle action"
)]
struct Cli {
    /// Run every estimator on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and certify the configured cover.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Write the JSON report here instead of the configured path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check equivariance, invertibility, base uniformity and the product
    /// disintegration on one surface.
    CheckHypotheses(HypothesisArgs),
    /// Class masses of the configured partition, and their presence at every
    /// dyadic scale.
    PartitionStats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        depth: u32,
        #[arg(long, default_value_t = 10_000)]
        samples_per_interval: u64,
    },
    /// Dump the slice table of the configured cover as CSV.
    Slices {
        #[arg(long)]
        config: PathBuf,
        /// Output file; defaults to the configured path, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the reduced objective curves `J(m, θ₀)` as CSV.
    PlotData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct HypothesisArgs {
    /// Take the surface from this experiment config.
    #[arg(long, conflicts_with_all = ["surface", "k", "radius", "omega", "omega_box"])]
    config: Option<PathBuf>,
    /// sphere, power or cylinder.
    #[arg(long, required_unless_present = "config")]
    surface: Option<String>,
    #[arg(long, required_unless_present = "config")]
    n: Option<usize>,
    /// Exponent of a power surface.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Base domain of a cylinder, over R^{n-2}.
    #[arg(long)]
    omega: Option<String>,
    /// Bounding box of the cylinder base, one `LO,HI` per axis.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    omega_box: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 100_000)]
    disintegration_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    z: f64,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(lo)?, num(hi)?))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(v) = std::env::var("RAIMI_THREADS") {
        let n = match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                eprintln!("error: RAIMI_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(1);
            }
        };
        if let Err(e) = init_workers(n) {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(1);
        }
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match run(cli.command, exec) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Returns whether the run certified or passed.
fn run(command: Command, exec: Execution) -> Result<bool, Error> {
    match command {
        Command::Verify { config, report } => {
            let mut exp = load(&config)?;
            if report.is_some() {
                exp.config.output.report = report;
            }
            let outcome = exp.verify(exec)?;
            exp.write_outputs(&outcome, exec)?;
            let v = &outcome.report.verification;
            if exp.config.output.report.is_none() {
                print(outcome.report.to_json().as_bytes())?;
            }
            let status = match v.status {
                Status::Certified => "certified".to_string(),
                Status::NotCertified(reason) => format!("not certified ({reason:?})"),
            };
            eprintln!(
                "{status}: m = {}, theta0 = {:.6}, min intersection = {:.5}",
                v.chosen_m,
                v.chosen_theta0.turns(),
                v.intersections.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min)
            );
            Ok(v.certified)
        }
        Command::CheckHypotheses(args) => {
            let spec = match &args.config {
                Some(path) => ExperimentConfig::load(path)?.surface,
                None => surface_from_flags(&args)?,
            };
            let settings = HypothesisSettings {
                samples: args.samples,
                disintegration_samples: args.disintegration_samples,
                z: args.z,
                seed: args.seed,
                ..HypothesisSettings::default()
            };
            let report = check_hypotheses(&Surface::new(spec), &settings, exec)?;
            print_json(&report)?;
            Ok(report.passed)
        }
        Command::PartitionStats { config, depth, samples_per_interval } => {
            let stats = load(&config)?.partition_stats(depth, samples_per_interval, exec)?;
            print_json(&stats)?;
            Ok(true)
        }
        Command::Slices { config, out } => {
            let exp = load(&config)?;
            let cover = exp.validated_cover(exec)?.cover;
            let table = exp.slice_table(&cover, exec)?;
            emit(out.or(exp.config.output.slices.clone()), |w| table.write_csv(w))?;
            Ok(true)
        }
        Command::PlotData { config, out } => {
            let exp = load(&config)?;
            let cover = exp.validated_cover(exec)?.cover;
            let table = exp.slice_table(&cover, exec)?;
            let objective = Objective::new(&table, &exp.handle);
            emit(out.or(exp.config.output.objective.clone()), |w| objective.write_csv(w, exec))?;
            Ok(true)
        }
    }
}

fn load(path: &Path) -> Result<Experiment, Error> {
    Ok(Experiment::new(ExperimentConfig::load(path)?))
}

fn surface_from_flags(args: &HypothesisArgs) -> Result<SurfaceSpec, Error> {
    let kind = args.surface.as_deref().unwrap_or_default();
    let n = args.n.unwrap_or_default();
    let spec = match kind {
        "sphere" => SurfaceSpec::sphere(n)?,
        "power" => {
            let k = args.k.ok_or_else(|| invalid("--k is required for a power surface"))?;
            SurfaceSpec::power(n, k, args.radius)?
        }
        "cylinder" => {
            let d = n.checked_sub(2).filter(|&d| d >= 1).ok_or_else(|| invalid("cylinder needs --n >= 3"))?;
            let expr = match &args.omega {
                Some(text) => SetExpr::parse(text, d).map_err(|e| invalid(format!("--omega: {e}")))?,
                None => SetExpr::whole(d),
            };
            let bbox = if args.omega_box.is_empty() { vec![(0.0, 1.0); d] } else { args.omega_box.clone() };
            SurfaceSpec::cylinder(n, args.radius, Omega::new(expr, bbox)?)?
        }
        other => return Err(invalid(format!("unknown surface `{other}` (expected sphere, power or cylinder)"))),
    };
    Ok(spec)
}

fn invalid(message: impl Into<String>) -> Error {
    Error::Geometry(raimi::geometry::GeometryError::InvalidSurface(message.into()))
}

fn print(bytes: &[u8]) -> Result<(), Error> {
    to_stdout(|out| out.write_all(bytes))
}

/// Writes to stdout, treating a reader that hung up early as success.
fn to_stdout(fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    match fill(&mut out).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    print(s.as_bytes())
}

fn emit(path: Option<PathBuf>, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Error> {
    match path {
        Some(p) => write_file(&p, fill),
        None => to_stdout(fill),
    }
}
