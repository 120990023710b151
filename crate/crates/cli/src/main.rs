//! `slitlab` — simulate a line-sensor diffraction record and evaluate how
//! much of the momentum distribution a finite slit lets through.
//!
//! Subcommands: `simulate` (write a SLITFRM frame file), `analyze` (frame
//! file → density.csv + pcurve.csv + report.json), `curve` (analytic P(ξ)
//! table), `report` (summarize report.json files).
//!
//! Exit codes: 0 success, 1 data/convergence error, 2 usage error.

mod config;
mod output;

use clap::{Parser, Subcommand};
use config::RunConfig;
use serde::Serialize;
use slitlab::analysis::{analyze, AnalysisOptions, ComparisonReport};
use slitlab::ccd::generate_frameset;
use slitlab::{io, Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "slitlab", version, about)]
struct Cli {
    /// Run configuration file (flat key = value; defaults to the bench
    /// apparatus values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output path (simulate, curve) or directory (analyze).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit machine-readable JSON on stdout where applicable.
    #[arg(long, global = true)]
    json: bool,

    /// Suppress the one-line progress summaries.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a frame file from the configured sensor and beam.
    Simulate,
    /// Evaluate a frame file: density.csv, pcurve.csv, report.json.
    Analyze {
        /// SLITFRM v1 frame file (binary or CSV, auto-detected).
        frame_file: PathBuf,
    },
    /// Tabulate the analytic capture probability P(ξ).
    Curve {
        /// Upper end of the ξ range.
        #[arg(long, default_value_t = 5.0)]
        xi_max: f64,
        /// Number of rows (including both endpoints).
        #[arg(long, default_value_t = 501)]
        samples: usize,
        /// Optional CSV table of (xi, bound) pairs to interpolate into a
        /// p_bound column.
        #[arg(long)]
        bound_table: Option<PathBuf>,
    },
    /// Summarize one or more report.json files.
    Report {
        /// Paths to report.json files produced by `analyze`.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Applies `SLITLAB_THREADS` to the worker pool; 0 or unset means automatic.
fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("SLITLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("SLITLAB_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate => cmd_simulate(cli),
        Command::Analyze { frame_file } => cmd_analyze(cli, frame_file),
        Command::Curve {
            xi_max,
            samples,
            bound_table,
        } => cmd_curve(cli, *xi_max, *samples, bound_table.as_deref()),
        Command::Report { reports } => cmd_report(cli, reports),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn cmd_simulate(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let (sensor, beam) = config.models()?;
    let set = generate_frameset(&sensor, &beam, config.frames, config.seed)?;
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("frames.slitfrm"));
    if out.extension().is_some_and(|e| e == "csv") {
        io::write_csv(&out, &set)?;
    } else {
        io::write_binary(&out, &set)?;
    }
    if !cli.quiet {
        let peak = set.raw().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "simulate: M={} N={} seed={} peak={peak} V -> {}",
            set.frame_count(),
            set.pixel_count(),
            set.seed(),
            out.display()
        );
    }
    Ok(())
}

fn cmd_analyze(cli: &Cli, frame_file: &Path) -> Result<()> {
    let config = load_config(cli)?;
    let frames = io::read_frames(frame_file)?;
    let options = AnalysisOptions {
        guard_pixels: config.guard_pixels,
        baseline_override: None,
    };
    let result = analyze(&frames, &options)?;

    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    output::write_density_csv(&out_dir.join("density.csv"), &result)?;
    output::write_pcurve_csv(&out_dir.join("pcurve.csv"), &result)?;
    output::write_report_json(&out_dir.join("report.json"), &result.report)?;

    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&result.report)
                .map_err(|e| Error::Data(format!("report serialization: {e}")))?
        );
    } else if !cli.quiet {
        println!(
            "analyze: forbidden_fraction={} (analytic {}), max_abs_deviation={}, \
             xi_coverage={} -> {}",
            result.report.empirical_forbidden_fraction,
            result.report.analytic_forbidden_fraction,
            result.report.max_abs_deviation,
            result.report.xi_coverage,
            out_dir.display()
        );
    }
    Ok(())
}

fn cmd_curve(cli: &Cli, xi_max: f64, samples: usize, bound_table: Option<&Path>) -> Result<()> {
    if !(xi_max.is_finite() && xi_max > 0.0) {
        return Err(Error::Domain(format!(
            "xi_max must be positive, got {xi_max}"
        )));
    }
    if samples < 2 {
        return Err(Error::Domain(format!(
            "samples must be at least 2, got {samples}"
        )));
    }
    let bound = bound_table.map(read_bound_table).transpose()?;
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("curve.csv"));
    output::write_curve_csv(&out, xi_max, samples, bound.as_deref())?;
    if !cli.quiet {
        println!(
            "curve: {samples} rows over xi in [0, {xi_max}] -> {}",
            out.display()
        );
    }
    Ok(())
}

/// Reads a two-column `xi,value` CSV; `#` lines are comments. Rows must be
/// sorted by xi.
fn read_bound_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut table = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Data(format!("bound table line {}: expected `xi,value`", idx + 1));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        let xi: f64 = a.trim().parse().map_err(|_| bad())?;
        let v: f64 = b.trim().parse().map_err(|_| bad())?;
        if table.last().is_some_and(|&(prev, _)| xi < prev) {
            return Err(Error::Data(format!(
                "bound table line {}: xi values must be sorted",
                idx + 1
            )));
        }
        table.push((xi, v));
    }
    if table.is_empty() {
        return Err(Error::Data("bound table has no rows".into()));
    }
    Ok(table)
}

#[derive(Serialize)]
struct LabeledReport {
    label: String,
    report: ComparisonReport,
}

fn cmd_report(cli: &Cli, paths: &[PathBuf]) -> Result<()> {
    let mut labeled = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(path)?;
        let report: ComparisonReport = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        labeled.push(LabeledReport {
            label: path.display().to_string(),
            report,
        });
    }

    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&labeled)
                .map_err(|e| Error::Data(format!("summary serialization: {e}")))?
        );
        return Ok(());
    }

    println!(
        "analytic_forbidden_fraction = {}",
        labeled[0].report.analytic_forbidden_fraction
    );
    for entry in &labeled {
        let r = &entry.report;
        println!("report: {}", entry.label);
        println!(
            "  empirical_forbidden_fraction = {} (sensitivity ±{})",
            r.empirical_forbidden_fraction, r.baseline_sensitivity
        );
        println!("  max_abs_deviation = {}", r.max_abs_deviation);
        println!("  mean_abs_deviation = {}", r.mean_abs_deviation);
        println!("  window_deficit = {}", r.window_deficit);
        println!("  xi_coverage = {}", r.xi_coverage);
        for band in &r.deviation_by_band {
            println!(
                "  band {}: max_abs={} mean_abs={} n={}",
                band.band, band.max_abs, band.mean_abs, band.count
            );
        }
    }
    Ok(())
}
