use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use fidelity_core::crosscheck::{oracle_report, Tolerances, DEFAULT_ENERGY_STEP};
use fidelity_core::eigen::SolverOptions;
use fidelity_core::fidelity::ExpansionOptions;
use fidelity_core::io::{read_csv, write_csv, RunManifest};
use fidelity_core::plot::{scaling_svg, sweep_svg};
use fidelity_core::scaling::{extrapolate, PeakRecord, ScalingResult, ScalingVariable, DEFAULT_PROMINENCE_FRACTION};
use fidelity_core::sweep::{peaks, sweep, LambdaGrid, Quantity, SweepMethod, SweepOptions};

const EXIT_USAGE: u8 = 1;
const EXIT_ORACLE: u8 = 2;

/// Ground-state fidelity analysis of the J1-J2 Heisenberg chain.
#[derive(Parser, Debug)]
#[command(name = "fidelity", version)]
struct Cli {
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true, env = "FIDELITY_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute energy, gap, F, chi2 and chi3 over a (L, lambda) grid.
    Sweep(SweepArgs),
    /// Locate the dominant peak of one column for every L.
    Peaks(PeaksArgs),
    /// Extrapolate peak positions in 1/L and 1/L^2.
    Scale(ScaleArgs),
    /// Compare all routes with the exact spectrum at small L.
    Oracle(OracleArgs),
    /// Render a sweep column or a scaling fit as SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    /// Comma-separated even chain lengths.
    #[arg(long, value_delimiter = ',', default_value = "14,16,18,20")]
    sites: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    lambda_min: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda_max: f64,
    #[arg(long, default_value_t = 0.005)]
    lambda_step: f64,
    /// Stencil step h.
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// stencil | derivative | both
    #[arg(long, default_value = "stencil")]
    method: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Eigensolver residual tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PeaksArgs {
    /// Sweep CSV.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "chi3_abs")]
    quantity: String,
    /// Minimum prominence as a fraction of each column's range.
    #[arg(long, default_value_t = DEFAULT_PROMINENCE_FRACTION)]
    prominence: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ScaleArgs {
    /// Peaks JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Designated primary fit: inv_L | inv_L2
    #[arg(long, default_value = "inv_L")]
    variable: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[arg(long, default_value_t = 8)]
    sites: usize,
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-3)]
    delta: f64,
    /// Step of the third energy difference.
    #[arg(long, default_value_t = DEFAULT_ENERGY_STEP)]
    energy_step: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5e-3)]
    tol_chi2: f64,
    #[arg(long, default_value_t = 1e-2)]
    tol_chi3: f64,
    #[arg(long, default_value_t = 5e-3)]
    tol_d3e: f64,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PlotArgs {
    /// Sweep CSV or scaling JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Column(s) to draw from a sweep CSV.
    #[arg(long, default_value = "chi3_abs")]
    quantity: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

/// Output of `scale`: both fits, one marked primary.
#[derive(Debug, Serialize, Deserialize)]
struct ScaleOutput {
    primary: ScalingVariable,
    fits: Vec<ScalingResult>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let workers = match cli.workers {
        Some(0) => bail!("--workers must be positive"),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .context("configuring worker pool")?;
    match cli.command {
        Command::Sweep(a) => cmd_sweep(&a, workers),
        Command::Peaks(a) => cmd_peaks(&a, workers),
        Command::Scale(a) => cmd_scale(&a, workers),
        Command::Oracle(a) => cmd_oracle(&a, workers),
        Command::Plot(a) => cmd_plot(&a, workers),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => create(p)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn finish_manifest(mut manifest: RunManifest, started: Instant, out: Option<&Path>) -> Result<()> {
    if let Some(out) = out {
        manifest.wall_seconds = started.elapsed().as_secs_f64();
        manifest.write(out)?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, workers: usize) -> Result<u8> {
    let started = Instant::now();
    let grid = LambdaGrid::new(a.lambda_min, a.lambda_max, a.lambda_step)?;
    let opts = SweepOptions {
        expansion: ExpansionOptions {
            step: a.delta,
            ..ExpansionOptions::default()
        },
        method: a.method.parse::<SweepMethod>()?,
        solver: SolverOptions {
            seed: a.seed,
            tolerance: a.tolerance,
            ..SolverOptions::default()
        },
    };
    fidelity_core::sweep::validate(&a.sites, &grid, &opts)?;
    let table = sweep(&a.sites, &grid, &opts)?;
    match &a.out {
        Some(p) => write_csv(&table.rows, create(p)?)?,
        None => write_csv(&table.rows, io::stdout().lock())?,
    }
    let mut manifest = RunManifest::new(
        "sweep",
        json!({
            "sites": a.sites,
            "grid": grid,
            "grid_points": grid.points().len(),
            "options": opts,
        }),
        workers,
    );
    manifest.points = table.timings;
    finish_manifest(manifest, started, a.out.as_deref())?;
    Ok(0)
}

fn cmd_peaks(a: &PeaksArgs, workers: usize) -> Result<u8> {
    let started = Instant::now();
    let quantity: Quantity = a.quantity.parse()?;
    if !(0.0..1.0).contains(&a.prominence) {
        bail!("--prominence must lie in [0, 1)");
    }
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let rows = read_csv(BufReader::new(file)).with_context(|| format!("reading {}", a.input.display()))?;
    let found = peaks(&rows, quantity, a.prominence)?;
    write_json(&found, a.out.as_deref())?;
    let manifest = RunManifest::new("peaks", serde_json::to_value(a)?, workers);
    finish_manifest(manifest, started, a.out.as_deref())?;
    Ok(0)
}

fn cmd_scale(a: &ScaleArgs, workers: usize) -> Result<u8> {
    let started = Instant::now();
    let primary: ScalingVariable = a.variable.parse()?;
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let records: Vec<PeakRecord> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    let mut fits = vec![extrapolate(&records, primary)?];
    for v in [ScalingVariable::InvL, ScalingVariable::InvL2] {
        if v != primary {
            fits.push(extrapolate(&records, v)?);
        }
    }
    write_json(&ScaleOutput { primary, fits }, a.out.as_deref())?;
    let mut manifest = RunManifest::new("scale", serde_json::to_value(a)?, workers);
    manifest.primary_scaling_variable = primary.to_string();
    finish_manifest(manifest, started, a.out.as_deref())?;
    Ok(0)
}

fn cmd_oracle(a: &OracleArgs, workers: usize) -> Result<u8> {
    let started = Instant::now();
    let expansion = ExpansionOptions {
        step: a.delta,
        ..ExpansionOptions::default()
    };
    let solver = SolverOptions {
        seed: a.seed,
        ..SolverOptions::default()
    };
    let tolerances = Tolerances {
        chi2: a.tol_chi2,
        chi3: a.tol_chi3,
        d3e: a.tol_d3e,
    };
    let report = oracle_report(a.sites, a.lambda, &expansion, a.energy_step, &solver, &tolerances)?;
    print!("{}", report.render());
    if let Some(out) = &a.out {
        write_json(&report, Some(out))?;
    }
    let manifest = RunManifest::new("oracle", serde_json::to_value(a)?, workers);
    finish_manifest(manifest, started, a.out.as_deref())?;
    Ok(if report.pass { 0 } else { EXIT_ORACLE })
}

fn cmd_plot(a: &PlotArgs, workers: usize) -> Result<u8> {
    let started = Instant::now();
    let is_json = a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let mut outputs = Vec::new();
    if is_json {
        let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
        let scale: ScaleOutput =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", a.input.display()))?;
        let fit = scale
            .fits
            .iter()
            .find(|f| f.variable == scale.primary)
            .context("scaling JSON has no primary fit")?;
        outputs.push((a.out.clone(), scaling_svg(fit)?));
    } else {
        let quantities = a
            .quantity
            .iter()
            .map(|q| q.parse::<Quantity>())
            .collect::<Result<Vec<_>, _>>()?;
        let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
        let rows = read_csv(BufReader::new(file)).with_context(|| format!("reading {}", a.input.display()))?;
        if rows.is_empty() {
            bail!("{} has no rows", a.input.display());
        }
        for q in &quantities {
            let path = if quantities.len() == 1 {
                a.out.clone()
            } else {
                let stem = a.out.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
                a.out.with_file_name(format!("{stem}_{q}.svg"))
            };
            outputs.push((path, sweep_svg(&rows, *q)?));
        }
    }
    for (path, svg) in &outputs {
        create(path)?.write_all(svg.as_bytes())?;
        let manifest = RunManifest::new("plot", serde_json::to_value(a)?, workers);
        finish_manifest(manifest, started, Some(path))?;
    }
    Ok(0)
}
