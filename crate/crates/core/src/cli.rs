//! The `ntqw` command line.
//!
//! ```text
//! ntqw evolve --config FILE [--jobs N] [--paper-scale] [--set KEY=VALUE]... [--out DIR]
//! ntqw sweep  --config FILE [--jobs N] [--paper-scale] [--set KEY=VALUE]... [--out DIR] [--resume]
//! ntqw fit    SERIES.csv [--column NAME] [--t-min T] [--t-max T]
//! ```
//!
//! Exit status is 0 on success, 2 for invalid arguments or configuration and
//! 1 for failures during a run.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::ExperimentFile;
use crate::disorder::{derive_seed, GENERATOR};
use crate::error::Error;
use crate::observables::{fit_power_law, long_time_average, ObservableSeries};
use crate::sweep::{run_cells, run_ensemble, CellLog, CellRecord, PhaseDiagram, RunConfig, SweepGrid};

/// Environment variable naming the parent of default output directories.
pub const OUTPUT_DIR_ENV: &str = "NTQW_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ntqw", version, about = "Nonlinear disordered discrete-time quantum walks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve one parameter point and write its time series.
    Evolve(RunArgs),
    /// Scan the (chi, theta0) grid and write the phase diagram.
    Sweep(SweepArgs),
    /// Fit a power law to one column of a series file.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment file (TOML), or a meta.json from a previous run.
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Use the [paper_scale] step count, ensemble size and grid.
    #[arg(long)]
    pub paper_scale: bool,
    /// Override a configuration key, e.g. `--set walk.chi=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Skip cells already recorded in the output directory's cells.log.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with a `t` column.
    pub series: PathBuf,
    #[arg(long, default_value = "r0_mean")]
    pub column: String,
    /// Start of the fit window (defaults to a tenth of the last time).
    #[arg(long)]
    pub t_min: Option<f64>,
    /// End of the fit window (defaults to the last time).
    #[arg(long)]
    pub t_max: Option<f64>,
}

/// A failed command, split by exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(Error),
    Runtime(Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(Failure::Usage)
}

fn runtime<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(Failure::Runtime)
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("ntqw: {}", f.error());
            f.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Evolve(args) => cmd_evolve(args).map(|_| ()),
        Command::Sweep(args) => cmd_sweep(args).map(|_| ()),
        Command::Fit(args) => {
            let fit = cmd_fit(args)?;
            println!("column = {}", args.column);
            println!("exponent = {}", fit.exponent);
            println!("intercept = {}", fit.intercept);
            println!("r_squared = {}", fit.r_squared);
            println!("window = [{}, {}]", fit.fit_window.0, fit.fit_window.1);
            println!("points = {}", fit.points);
            Ok(())
        }
    }
}

struct Prepared {
    file: ExperimentFile,
    out_dir: PathBuf,
    pool: rayon::ThreadPool,
    jobs: usize,
}

fn prepare(args: &RunArgs) -> CliResult<Prepared> {
    let file = usage(ExperimentFile::load(&args.config, &args.overrides))?;
    if args.jobs == Some(0) {
        return Err(Failure::Usage(Error::Config("--jobs must be >= 1".into())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Runtime(Error::Config(format!("cannot start worker pool: {e}"))))?;
    let out_dir = match (&args.out, &file.output.directory) {
        (Some(dir), _) | (None, Some(dir)) => dir.clone(),
        (None, None) => {
            let base = std::env::var_os(OUTPUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
            let stem = args.config.file_stem().map_or_else(|| "run".into(), |s| s.to_owned());
            base.join(stem)
        }
    };
    runtime(std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e)))?;
    Ok(Prepared {
        jobs: pool.current_num_threads(),
        file,
        out_dir,
        pool,
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    runtime(File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e)))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> CliResult<()> {
    runtime(w.flush().map_err(|e| Error::io(path, e)))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut w = create(path)?;
    runtime(serde_json::to_writer_pretty(&mut w, value).map_err(Error::from))?;
    runtime(writeln!(w).map_err(|e| Error::io(path, e)))?;
    finish(path, w)
}

/// Writes `t,r0_mean,pr_mean`, plus `r0_sNNN,pr_sNNN` per member when given.
pub fn write_series_csv(path: &Path, mean: &ObservableSeries, members: Option<&[ObservableSeries]>) -> crate::Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let members = members.unwrap_or(&[]);
    let mut header = vec!["t".to_string(), "r0_mean".into(), "pr_mean".into()];
    for k in 0..members.len() {
        header.push(format!("r0_s{k:03}"));
        header.push(format!("pr_s{k:03}"));
    }
    w.write_record(&header)?;
    for (row, &t) in mean.times.iter().enumerate() {
        let mut rec = vec![t.to_string(), mean.r0[row].to_string(), mean.pr[row].to_string()];
        for m in members {
            rec.push(m.r0[row].to_string());
            rec.push(m.pr[row].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `t,n_offset,probability`, offsets measured from the origin.
pub fn write_snapshots_csv(path: &Path, series: &ObservableSeries) -> crate::Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["t", "n_offset", "probability"])?;
    for snap in &series.snapshots {
        for (offset, p) in snap.offsets() {
            w.write_record(&[snap.t.to_string(), offset.to_string(), p.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub struct EvolveOutput {
    pub out_dir: PathBuf,
    pub run: RunConfig,
    pub r0_bar: f64,
    pub pr_bar: f64,
}

pub fn cmd_evolve(args: &RunArgs) -> CliResult<EvolveOutput> {
    let prep = prepare(args)?;
    let run = prep.file.run_config(args.paper_scale);
    usage(run.validate())?;
    let started = Instant::now();
    let ensemble = runtime(prep.pool.install(|| run_ensemble(&run)))?;
    let wall = started.elapsed().as_secs_f64();
    let (r0_bar, pr_bar) = runtime(long_time_average(&ensemble.mean, run.tail_fraction))?;

    let dir = &prep.out_dir;
    let members = prep.file.output.per_sample.then_some(ensemble.members.as_slice());
    runtime(write_series_csv(&dir.join("series.csv"), &ensemble.mean, members))?;
    runtime(write_snapshots_csv(&dir.join("snapshots.csv"), &ensemble.mean))?;
    let meta = json!({
        "command": "evolve",
        "version": env!("CARGO_PKG_VERSION"),
        "generator": GENERATOR,
        "paper_scale": args.paper_scale,
        "config": prep.file.resolved(args.paper_scale),
        "run": run,
        "samples": ensemble.samples,
        "long_time_average": { "r0_bar": r0_bar, "pr_bar": pr_bar },
        "jobs": prep.jobs,
        "wall_time_s": wall,
        "outputs": ["series.csv", "snapshots.csv"],
    });
    write_json(&dir.join("meta.json"), &meta)?;
    println!("wrote {}", dir.display());
    println!("r0_bar = {r0_bar}");
    println!("pr_bar = {pr_bar}");
    Ok(EvolveOutput {
        out_dir: prep.out_dir,
        run,
        r0_bar,
        pr_bar,
    })
}

fn sweep_key(template: &RunConfig, grid: &SweepGrid) -> String {
    json!({ "template": template, "grid": grid }).to_string()
}

/// Writes a matrix with a `chi` column followed by one column per `θ₀`.
pub fn write_matrix_csv(path: &Path, chi: &[f64], theta: &[f64], values: &[Vec<f64>]) -> crate::Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let header: Vec<String> = std::iter::once("chi".to_string())
        .chain(theta.iter().map(|t| t.to_string()))
        .collect();
    w.write_record(&header)?;
    for (c, row) in chi.iter().zip(values) {
        let rec: Vec<String> = std::iter::once(c.to_string())
            .chain(row.iter().map(|v| v.to_string()))
            .collect();
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one row per cell in row-major order, with the threshold masks.
pub fn write_cells_csv(path: &Path, records: &[CellRecord], diagram: &PhaseDiagram) -> crate::Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record([
        "chi_index",
        "theta_index",
        "chi",
        "theta0",
        "r0_bar",
        "pr_bar",
        "mask_r0",
        "mask_pr",
    ])?;
    for r in records {
        let (i, j) = (r.chi_index, r.theta_index);
        w.write_record(&[
            i.to_string(),
            j.to_string(),
            r.chi.to_string(),
            r.theta0.to_string(),
            r.r0_bar.to_string(),
            r.pr_bar.to_string(),
            u8::from(diagram.mask_r0[i][j]).to_string(),
            u8::from(diagram.mask_pr[i][j]).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub struct SweepOutput {
    pub out_dir: PathBuf,
    pub diagram: PhaseDiagram,
    pub resumed_cells: usize,
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<SweepOutput> {
    let prep = prepare(&args.run)?;
    let paper_scale = args.run.paper_scale;
    let template = prep.file.run_config(paper_scale);
    usage(template.validate())?;
    let grid = usage(prep.file.grid(paper_scale))?;
    let thresholds = prep.file.thresholds();
    let dir = &prep.out_dir;
    let log_path = dir.join("cells.log");
    let key = sweep_key(&template, &grid);
    let (log, completed) = if args.resume && log_path.exists() {
        usage(CellLog::resume(&log_path, &key))?
    } else {
        (runtime(CellLog::create(&log_path, &key))?, Vec::new())
    };
    let total = grid.cells().count();
    let done = Mutex::new((log, completed.len()));
    let started = Instant::now();
    let records = runtime(prep.pool.install(|| {
        run_cells(&grid, &template, &completed, |rec| {
            let mut guard = done.lock().expect("cell log lock poisoned");
            guard.0.append(rec)?;
            guard.1 += 1;
            eprintln!(
                "[{}/{total}] chi={} theta0={} r0_bar={} pr_bar={}",
                guard.1, rec.chi, rec.theta0, rec.r0_bar, rec.pr_bar
            );
            Ok(())
        })
    }))?;
    let wall = started.elapsed().as_secs_f64();
    let diagram = runtime(PhaseDiagram::assemble(&grid, &records, thresholds))?;

    runtime(write_cells_csv(&dir.join("cells.csv"), &records, &diagram))?;
    runtime(write_matrix_csv(&dir.join("diagram_r0.csv"), &grid.chi, &grid.theta, &diagram.r0_bar))?;
    runtime(write_matrix_csv(&dir.join("diagram_pr.csv"), &grid.chi, &grid.theta, &diagram.pr_bar))?;
    let cell_seeds: Vec<_> = grid
        .cells()
        .map(|(i, j)| json!([i, j, derive_seed(template.base_seed, &[i as u64, j as u64])]))
        .collect();
    let meta = json!({
        "command": "sweep",
        "version": env!("CARGO_PKG_VERSION"),
        "generator": GENERATOR,
        "paper_scale": paper_scale,
        "config": prep.file.resolved(paper_scale),
        "template": template,
        "grid": grid,
        "thresholds": thresholds,
        "cell_seeds": cell_seeds,
        "masked_cells": {
            "r0": diagram.cell_count(|i, j| diagram.mask_r0[i][j]),
            "pr": diagram.cell_count(|i, j| diagram.mask_pr[i][j]),
        },
        "resumed_cells": completed.len(),
        "jobs": prep.jobs,
        "wall_time_s": wall,
        "outputs": ["cells.log", "cells.csv", "diagram_r0.csv", "diagram_pr.csv"],
    });
    write_json(&dir.join("meta.json"), &meta)?;
    println!("wrote {}", dir.display());
    Ok(SweepOutput {
        out_dir: prep.out_dir,
        diagram,
        resumed_cells: completed.len(),
    })
}

/// Reads the `t` column and `column` from a CSV file.
pub fn read_column(path: &Path, column: &str) -> crate::Result<(Vec<f64>, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Config(format!(
                "{} has no column {name:?} (columns: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let (ti, vi) = (find("t")?, find(column)?);
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |idx: usize| -> crate::Result<f64> {
            rec[idx].trim().parse().map_err(|_| {
                Error::Config(format!("{}: row {}: cannot parse {:?}", path.display(), line + 2, &rec[idx]))
            })
        };
        times.push(parse(ti)?);
        values.push(parse(vi)?);
    }
    Ok((times, values))
}

pub fn cmd_fit(args: &FitArgs) -> CliResult<crate::observables::PowerLawFit> {
    let (times, values) = usage(read_column(&args.series, &args.column))?;
    let last = times.iter().copied().fold(f64::NAN, f64::max);
    let t_max = args.t_max.unwrap_or(last);
    let t_min = args.t_min.unwrap_or(t_max / 10.0);
    usage(fit_power_law(&times, &values, (t_min, t_max)))
}
