//! `varcomp compare` — random-sizes vs fixed-sizes one-way estimators.
//!
//! Fits both one-way estimators to the same grouped file and reports
//! them side by side with per-parameter absolute differences. With
//! constant group sizes the two coincide (to rounding); the gap widens
//! as the size distribution spreads out.

use std::path::PathBuf;

use varcomp::{count_summary, estimate_one_way_fixed, estimate_one_way_fr, MomentOrder};

use crate::csv_io::read_grouped_csv;
use crate::error::Result;
use crate::report::{render_json, CompareReport, DatasetSummary, RunConfig};
use crate::SchemaArgs;

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    /// Input CSV path (grouped long format)
    #[arg(long)]
    pub input: PathBuf,
    /// Emit the report as JSON
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub schema: SchemaArgs,
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let sample = read_grouped_csv(&args.input, &args.schema.grouped_schema())?;

    let random_sizes = estimate_one_way_fr(&sample)?;
    let fixed_sizes = estimate_one_way_fixed(&sample)?;
    let max_abs_diff = [
        (random_sizes.mu - fixed_sizes.mu).abs(),
        (random_sizes.sigma_a2 - fixed_sizes.sigma_a2).abs(),
        (random_sizes.sigma_e2 - fixed_sizes.sigma_e2).abs(),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);

    let report = CompareReport {
        model: "one-way (random sizes vs fixed sizes)".into(),
        config: RunConfig {
            group_col: Some(args.schema.group_col.clone()),
            value_col: Some(args.schema.value_col.clone().unwrap_or_else(|| "y".into())),
            ..RunConfig::bare(args.input.display().to_string())
        },
        dataset: DatasetSummary::Grouped {
            n_groups: sample.n_groups(),
            n_obs: sample.n_obs(),
            count_moments: count_summary(&sample, MomentOrder::Two)?,
        },
        random_sizes,
        fixed_sizes,
        max_abs_diff,
    };

    if args.json {
        print!("{}", render_json(&report));
    } else {
        print!("{}", report.render_table());
    }
    Ok(())
}
