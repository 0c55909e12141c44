use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ecs_bounds::bounds::{self, BoundReport, ZivZakaiConfig, ZIV_ZAKAI_LAMBDA};
use ecs_bounds::sweep::{self, Axis, CsvRecord};
use ecs_bounds::verify::{self, Suite, Tolerances};

/// Worker-thread count for sweeps and verification; defaults to all cores.
const THREADS_ENV: &str = "ECS_BOUNDS_THREADS";

#[derive(Parser)]
#[command(name = "ecs-bounds", version, about = "Precision bounds for multiparameter phase estimation with generalized ECS and NOON states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one bound and print it as JSON.
    Bounds(BoundsArgs),
    /// Classify (d, |α|) cells by whether b⋆ is normalizable.
    Region(RegionArgs),
    /// Bound curves against the photon number.
    Curves(CurvesArgs),
    /// Run the oracle-equivalence suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    EcsLinear,
    EcsNonlinear,
    EcsOptimal,
    NoonLinear,
    NoonNonlinear,
    IndependentEcs,
    IndependentNoon,
    ZzbEcs,
    ZzbNoon,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Number of phases.
    #[arg(long)]
    d: usize,
    /// Coherent amplitude |α|.
    #[arg(long)]
    alpha: Option<f64>,
    /// NOON photon number.
    #[arg(long = "N")]
    photons: Option<f64>,
    /// Generator order for ecs-optimal.
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Total photon number for the independent baselines.
    #[arg(long)]
    n_tot: Option<f64>,
    /// Ziv-Zakai constant.
    #[arg(long, default_value_t = ZIV_ZAKAI_LAMBDA)]
    lambda: f64,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    d_min: usize,
    #[arg(long, default_value_t = 100)]
    d_max: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha_min: f64,
    #[arg(long, default_value_t = 4.0)]
    alpha_max: f64,
    /// Samples along the |α| axis.
    #[arg(long, default_value_t = 400)]
    resolution: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CurvesArgs {
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    ntot_min: f64,
    #[arg(long, default_value_t = 100.0)]
    ntot_max: f64,
    #[arg(long, default_value_t = 9901)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance override, e.g. `--tol qfim=1e-6`. Repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE")]
    tol: Vec<String>,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn require(name: &str, v: Option<f64>) -> Result<f64> {
    v.with_context(|| format!("this family needs --{name}"))
}

fn amplitude_sq(alpha: Option<f64>) -> Result<f64> {
    let a = require("alpha", alpha)?;
    Ok(a * a)
}

fn evaluate(args: &BoundsArgs) -> Result<BoundReport> {
    let d = args.d;
    let zz = ZivZakaiConfig { lambda: args.lambda };
    let report = match args.family {
        Family::EcsLinear => bounds::qcrb_ecs_linear(d, amplitude_sq(args.alpha)?),
        Family::EcsNonlinear => bounds::qcrb_ecs_nonlinear(d, amplitude_sq(args.alpha)?),
        Family::EcsOptimal => bounds::minimize_bound_over_b(d, args.m, amplitude_sq(args.alpha)?),
        Family::NoonLinear => bounds::qcrb_noon_linear(d, require("N", args.photons)?),
        Family::NoonNonlinear => bounds::qcrb_noon_nonlinear(d, require("N", args.photons)?),
        Family::IndependentEcs => match (args.alpha, args.n_tot) {
            (Some(_), Some(_)) => bail!("give either --alpha or --n-tot, not both"),
            (Some(a), None) => bounds::qcrb_independent_ecs(d, a * a),
            (None, n) => bounds::independent_ecs_vs_ntot(d, require("n-tot", n)?),
        },
        Family::IndependentNoon => bounds::qcrb_independent_noon(d, require("n-tot", args.n_tot)?),
        Family::ZzbEcs => bounds::zzb_ecs_with(d, amplitude_sq(args.alpha)?, zz),
        Family::ZzbNoon => bounds::zzb_noon_with(d, require("N", args.photons)?, zz),
    };
    Ok(report?)
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: CsvRecord + serde::Serialize>(grid: &sweep::SweepGrid<T>, output: &Output) -> Result<()> {
    let mut w = open_output(&output.out)?;
    match output.format {
        Format::Csv => sweep::write_csv(&grid.cells, &mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, grid)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bounds(args) => {
            let report = evaluate(&args)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Region(args) => {
            let alpha = Axis::new("alpha", args.alpha_min, args.alpha_max, args.resolution)?;
            let grid = sweep::region_sweep(args.m, args.d_min, args.d_max, &alpha)?;
            emit(&grid, &args.output)?;
        }
        Command::Curves(args) => {
            let axis = Axis::new("n_tot", args.ntot_min, args.ntot_max, args.points)?;
            let grid = sweep::curves(args.d, &axis)?;
            emit(&grid, &args.output)?;
        }
        Command::Verify(args) => {
            let suite: Suite = args.suite.parse()?;
            let mut tol = Tolerances::default();
            for kv in &args.tol {
                let (k, v) = kv.split_once('=').with_context(|| format!("expected KEY=VALUE, got {kv:?}"))?;
                let v: f64 = v.parse().with_context(|| format!("bad tolerance value {v:?}"))?;
                tol.set(k, v)?;
            }
            let report = verify::run(suite, args.seed, &tol);
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
            if !report.all_passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("{THREADS_ENV} must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
