//! `varcomp bench` — wall-clock timing of full vs chunked estimation.
//!
//! Times three modes on the same file: the full-data estimator, the
//! chunk-averaged estimator on one worker, and the chunk-averaged
//! estimator on `--workers` workers. Every mode runs `--repeat` times
//! and the mean time is reported, together with how far the chunk
//! average drifted from the full fit. Timings are inherently
//! machine-dependent; nothing here is deterministic except the
//! estimates themselves.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use varcomp::{
    alchemy_crossed, alchemy_grouped, estimate_crossed, estimate_famsize, estimate_one_way_fr,
    estimate_with_regressors, make_chunks, make_stream_chunks, AlchemyResult, ChunkPlan,
    GroupedEstimator, SolverOptions,
};

use crate::csv_io::{read_grouped_csv, read_ratings_csv};
use crate::error::Result;
use crate::report::{num6, render_json, Table};
use crate::{check_positive, ModelArg, SchemaArgs};

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Model to fit
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Input CSV path
    #[arg(long)]
    pub input: PathBuf,
    /// Number of chunks for the chunked modes
    #[arg(long)]
    pub chunks: usize,
    /// Worker threads for the parallel mode
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Assign units to chunks by a seeded shuffle instead of contiguously
    #[arg(long)]
    pub shuffle_chunks: bool,
    /// Seed for --shuffle-chunks
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timed repetitions per mode (the mean is reported)
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,
    /// Convergence tolerance for the famsize solver
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Iteration cap for the famsize solver
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Emit the report as JSON
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

#[derive(Serialize)]
struct BenchReport {
    command: &'static str,
    model: String,
    input: String,
    chunks: usize,
    workers: usize,
    repeat: usize,
    n_units: usize,
    full_secs: f64,
    serial_secs: f64,
    parallel_secs: f64,
    /// Parallel wall time over serial wall time (lower is better).
    parallel_over_serial: f64,
    /// Largest absolute gap between the chunk average and the full fit.
    max_abs_gap: f64,
}

fn mean_secs(repeat: usize, mut body: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..repeat {
        body()?;
    }
    Ok(start.elapsed().as_secs_f64() / repeat as f64)
}

fn max_gap(theta_bar: &[f64], full: &[f64]) -> f64 {
    theta_bar
        .iter()
        .zip(full)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub fn run(args: &BenchArgs) -> Result<()> {
    check_positive("--chunks", args.chunks)?;
    check_positive("--workers", args.workers)?;
    check_positive("--repeat", args.repeat)?;

    let opts = SolverOptions {
        tol: args.tol,
        max_iter: args.max_iter,
    };

    let (n_units, full, full_secs, serial, serial_secs, parallel_secs): (
        usize,
        Vec<f64>,
        f64,
        AlchemyResult,
        f64,
        f64,
    );

    if args.model.is_grouped() {
        let sample = read_grouped_csv(&args.input, &args.schema.grouped_schema())?;
        n_units = sample.n_groups();
        let plan: ChunkPlan = if args.shuffle_chunks {
            ChunkPlan::shuffled(n_units, args.chunks, args.seed)?
        } else {
            make_chunks(&sample, args.chunks)?
        };
        let estimator = match args.model {
            ModelArg::OneWay => GroupedEstimator::OneWayRandomSizes,
            ModelArg::Famsize => GroupedEstimator::FamSize(opts),
            ModelArg::Regression => GroupedEstimator::Regression,
            ModelArg::Crossed => unreachable!(),
        };

        full = match args.model {
            ModelArg::OneWay => {
                let e = estimate_one_way_fr(&sample)?;
                vec![e.mu, e.sigma_a2, e.sigma_e2]
            }
            ModelArg::Famsize => {
                let e = estimate_famsize(&sample, &opts)?;
                vec![e.c1, e.c2, e.sigma_a2, e.sigma_e2]
            }
            ModelArg::Regression => {
                let e = estimate_with_regressors(&sample)?;
                let mut v = e.gamma.clone();
                v.push(e.sigma_a2);
                v.push(e.sigma_e2);
                v
            }
            ModelArg::Crossed => unreachable!(),
        };

        full_secs = mean_secs(args.repeat, || {
            match args.model {
                ModelArg::OneWay => drop(estimate_one_way_fr(&sample)?),
                ModelArg::Famsize => drop(estimate_famsize(&sample, &opts)?),
                ModelArg::Regression => drop(estimate_with_regressors(&sample)?),
                ModelArg::Crossed => unreachable!(),
            }
            Ok(())
        })?;
        serial = alchemy_grouped(&sample, &plan, &estimator, 1)?;
        serial_secs = mean_secs(args.repeat, || {
            Ok(alchemy_grouped(&sample, &plan, &estimator, 1).map(drop)?)
        })?;
        parallel_secs = mean_secs(args.repeat, || {
            Ok(alchemy_grouped(&sample, &plan, &estimator, args.workers).map(drop)?)
        })?;
    } else {
        let data = read_ratings_csv(&args.input, &args.schema.ratings_schema())?;
        n_units = data.n_entries();
        let plan = if args.shuffle_chunks {
            ChunkPlan::shuffled(n_units, args.chunks, args.seed)?
        } else {
            make_stream_chunks(&data, args.chunks)?
        };

        let e = estimate_crossed(&data)?;
        full = vec![e.mu, e.sigma_a2, e.sigma_b2, e.sigma_e2];
        full_secs = mean_secs(args.repeat, || Ok(estimate_crossed(&data).map(drop)?))?;
        serial = alchemy_crossed(&data, &plan, 1)?;
        serial_secs = mean_secs(args.repeat, || Ok(alchemy_crossed(&data, &plan, 1).map(drop)?))?;
        parallel_secs = mean_secs(args.repeat, || {
            Ok(alchemy_crossed(&data, &plan, args.workers).map(drop)?)
        })?;
    }

    let report = BenchReport {
        command: "bench",
        model: args.model.name().to_string(),
        input: args.input.display().to_string(),
        chunks: args.chunks,
        workers: args.workers,
        repeat: args.repeat,
        n_units,
        full_secs,
        serial_secs,
        parallel_secs,
        parallel_over_serial: parallel_secs / serial_secs,
        max_abs_gap: max_gap(&serial.theta_bar, &full),
    };

    if args.json {
        print!("{}", render_json(&report));
    } else {
        let mut t = Table::new();
        t.line(format!(
            "bench: {} on {} ({} units, g = {}, repeat = {})",
            report.model, report.input, report.n_units, report.chunks, report.repeat
        ));
        t.row("full fit", format!("{} s", num6(report.full_secs)));
        t.row("chunked, 1 worker", format!("{} s", num6(report.serial_secs)));
        t.row(
            format!("chunked, {} workers", report.workers),
            format!("{} s", num6(report.parallel_secs)),
        );
        t.row(
            "parallel / serial time",
            num6(report.parallel_over_serial),
        );
        t.row("max |chunk avg - full|", num6(report.max_abs_gap));
        print!("{}", t.finish());
    }
    Ok(())
}
