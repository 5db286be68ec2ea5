//! `varcomp estimate` — fit a model to a CSV dataset.
//!
//! Without `--chunks` the estimator runs on the full data. With
//! `--chunks G` the data is split into G chunks, each chunk is fitted
//! independently (optionally in parallel via `--workers`), and the
//! chunk average with empirical standard errors is reported. Output is
//! identical for any worker count.

use std::path::PathBuf;

use varcomp::{
    alchemy_crossed, alchemy_grouped, count_summary, estimate_crossed, estimate_famsize,
    estimate_one_way_fr, estimate_with_regressors, make_chunks, make_stream_chunks,
    overlap_distribution, row_cov_diagnostic, ChunkPlan, GroupedEstimator, GroupedSample,
    MomentOrder, OverlapOptions, SolverOptions, SparseRatings,
};

use crate::csv_io::{read_grouped_csv, read_ratings_csv};
use crate::error::{CliError, Result};
use crate::report::{
    render_json, DatasetSummary, EstimateReport, ModelEstimate, OverlapSection, RunConfig,
};
use crate::{check_positive, ModelArg, SchemaArgs};

#[derive(Debug, clap::Args)]
pub struct EstimateArgs {
    /// Model to fit
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Input CSV path
    #[arg(long)]
    pub input: PathBuf,
    /// Split the data into this many chunks and average per-chunk fits
    #[arg(long)]
    pub chunks: Option<usize>,
    /// Worker threads for chunked estimation (never changes the output)
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Assign units to chunks by a seeded shuffle instead of contiguously
    #[arg(long)]
    pub shuffle_chunks: bool,
    /// Seed for --shuffle-chunks and overlap-pair sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Convergence tolerance for the famsize solver
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Iteration cap for the famsize solver
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Crossed model: also report the row-overlap distribution and
    /// the model-vs-empirical row-sum covariance
    #[arg(long)]
    pub diagnose_overlap: bool,
    /// Row-pair budget for --diagnose-overlap (beyond it, pairs are sampled)
    #[arg(long, default_value_t = 100_000)]
    pub max_pairs: usize,
    /// Emit the report as JSON
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

fn build_config(args: &EstimateArgs) -> RunConfig {
    let grouped = args.model.is_grouped();
    let schema = &args.schema;
    RunConfig {
        input: args.input.display().to_string(),
        group_col: grouped.then(|| schema.group_col.clone()),
        value_col: Some(
            schema
                .value_col
                .clone()
                .unwrap_or_else(|| if grouped { "y".into() } else { "value".into() }),
        ),
        regressor_cols: if args.model == ModelArg::Regression {
            schema.regressor_cols.clone()
        } else {
            None
        },
        row_col: (!grouped).then(|| schema.row_col.clone()),
        col_col: (!grouped).then(|| schema.col_col.clone()),
        timestamp_col: if grouped {
            None
        } else {
            schema.timestamp_col.clone()
        },
        chunks: args.chunks,
        shuffle_chunks: args.chunks.is_some().then_some(args.shuffle_chunks),
        // The seed only matters when something actually draws from it.
        seed: (args.shuffle_chunks || args.diagnose_overlap).then_some(args.seed),
        tol: (args.model == ModelArg::Famsize).then_some(args.tol),
        max_iter: (args.model == ModelArg::Famsize).then_some(args.max_iter),
        max_pairs: args.diagnose_overlap.then_some(args.max_pairs),
    }
}

fn estimate_grouped(args: &EstimateArgs, report: &mut EstimateReport) -> Result<()> {
    let sample: GroupedSample = read_grouped_csv(&args.input, &args.schema.grouped_schema())?;
    report.dataset = DatasetSummary::Grouped {
        n_groups: sample.n_groups(),
        n_obs: sample.n_obs(),
        count_moments: count_summary(&sample, MomentOrder::Two)?,
    };

    let opts = SolverOptions {
        tol: args.tol,
        max_iter: args.max_iter,
    };
    if let Some(g) = args.chunks {
        let plan = if args.shuffle_chunks {
            ChunkPlan::shuffled(sample.n_groups(), g, args.seed)?
        } else {
            make_chunks(&sample, g)?
        };
        let estimator = match args.model {
            ModelArg::OneWay => GroupedEstimator::OneWayRandomSizes,
            ModelArg::Famsize => GroupedEstimator::FamSize(opts),
            ModelArg::Regression => GroupedEstimator::Regression,
            ModelArg::Crossed => unreachable!("crossed data is not grouped"),
        };
        report.alchemy = Some(alchemy_grouped(&sample, &plan, &estimator, args.workers)?);
    } else {
        report.estimate = Some(match args.model {
            ModelArg::OneWay => ModelEstimate::OneWay(estimate_one_way_fr(&sample)?),
            ModelArg::Famsize => ModelEstimate::FamSize(estimate_famsize(&sample, &opts)?),
            ModelArg::Regression => {
                ModelEstimate::Regression(estimate_with_regressors(&sample)?)
            }
            ModelArg::Crossed => unreachable!("crossed data is not grouped"),
        });
    }
    Ok(())
}

fn estimate_crossed_cmd(args: &EstimateArgs, report: &mut EstimateReport) -> Result<()> {
    let data: SparseRatings = read_ratings_csv(&args.input, &args.schema.ratings_schema())?;
    report.dataset = DatasetSummary::Crossed {
        n_rows: data.n_rows(),
        n_cols: data.n_cols(),
        n_entries: data.n_entries(),
    };

    if let Some(g) = args.chunks {
        let plan = if args.shuffle_chunks {
            ChunkPlan::shuffled(data.n_entries(), g, args.seed)?
        } else {
            make_stream_chunks(&data, g)?
        };
        report.alchemy = Some(alchemy_crossed(&data, &plan, args.workers)?);
    }
    if args.chunks.is_none() || args.diagnose_overlap {
        // The overlap diagnostic needs a full-data sigma_b2 even when
        // the headline numbers come from chunking.
        let est = estimate_crossed(&data)?;
        if args.diagnose_overlap {
            let overlap = overlap_distribution(
                &data,
                &OverlapOptions {
                    max_pairs: args.max_pairs,
                    seed: args.seed,
                },
            )?;
            let diagnostic = row_cov_diagnostic(&est, &overlap, &data);
            report.overlap = Some(OverlapSection {
                distribution: overlap,
                diagnostic,
            });
        }
        report.estimate = Some(ModelEstimate::Crossed(est));
    }
    Ok(())
}

pub fn run(args: &EstimateArgs) -> Result<()> {
    if args.diagnose_overlap && args.model != ModelArg::Crossed {
        return Err(CliError::Usage(
            "--diagnose-overlap only applies to --model crossed".into(),
        ));
    }
    if let Some(g) = args.chunks {
        check_positive("--chunks", g)?;
    }
    check_positive("--workers", args.workers)?;
    check_positive("--max-iter", args.max_iter)?;

    let mut report = EstimateReport {
        model: args.model.name().to_string(),
        config: build_config(args),
        dataset: DatasetSummary::Crossed {
            n_rows: 0,
            n_cols: 0,
            n_entries: 0,
        },
        estimate: None,
        alchemy: None,
        overlap: None,
    };

    if args.model.is_grouped() {
        estimate_grouped(args, &mut report)?;
    } else {
        estimate_crossed_cmd(args, &mut report)?;
    }

    if args.json {
        print!("{}", render_json(&report));
    } else {
        print!("{}", report.render_table());
    }
    Ok(())
}
