//! `varcomp simulate` — write a synthetic dataset as CSV.
//!
//! Either pick a model (each has a documented default generating
//! process) or hand in a full spec as JSON via `--spec`. The JSON
//! printed by `--json` is itself a valid spec file.

use std::path::PathBuf;

use serde::Serialize;
use varcomp::{
    count_summary, CellMechanism, CountDist, CrossedSpec, EffectDist, FamsizeSpec, MomentOrder,
    OneWaySpec, RegressionSpec, RegressorDist, SimData, SimSpec,
};

use crate::csv_io::{write_grouped_csv, write_ratings_csv};
use crate::error::{CliError, Result};
use crate::report::{render_json, DatasetSummary, Table};
use crate::ModelArg;

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Model to simulate (uses that model's default parameters)
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// JSON spec file with the full generating process (alternative to --model)
    #[arg(long, conflicts_with = "model")]
    pub spec: Option<PathBuf>,
    /// Number of groups (grouped models) or grid rows (crossed)
    #[arg(long, default_value_t = 200)]
    pub r: usize,
    /// Grid columns for the crossed model [default: same as --r]
    #[arg(long)]
    pub cols: Option<usize>,
    /// Cell inclusion probability for the crossed model
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    /// Attach a shuffled arrival order to crossed data
    #[arg(long)]
    pub shuffle_arrivals: bool,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path
    #[arg(long)]
    pub out: PathBuf,
    /// Emit the run summary (including the spec) as JSON
    #[arg(long)]
    pub json: bool,
}

/// Default generating processes, one per model. Parameters are chosen
/// so a quick pipeline exercises realistic estimator behaviour.
fn default_spec(model: ModelArg, args: &SimulateArgs) -> SimSpec {
    let r = args.r;
    let seed = args.seed;
    match model {
        ModelArg::OneWay => SimSpec::OneWay(OneWaySpec {
            mu: 10.0,
            sigma_a2: 4.0,
            sigma_e2: 1.0,
            n_groups: r,
            count_dist: CountDist::ShiftedPoisson { lambda: 4.0 },
            alpha_dist: EffectDist::normal_with_variance(4.0),
            eps_dist: EffectDist::normal_with_variance(1.0),
            seed,
        }),
        ModelArg::Famsize => SimSpec::Famsize(FamsizeSpec {
            c1: 1.0,
            c2: -0.1,
            sigma_a2: 1.0,
            sigma_e2: 1.0,
            n_groups: r,
            count_dist: CountDist::ShiftedPoisson { lambda: 3.0 },
            alpha_dist: EffectDist::normal_with_variance(1.0),
            eps_dist: EffectDist::normal_with_variance(1.0),
            seed,
        }),
        ModelArg::Regression => SimSpec::Regression(RegressionSpec {
            gamma: vec![5.0, 1.5],
            x_dists: vec![
                RegressorDist::Constant { value: 1.0 },
                RegressorDist::Normal { mean: 0.0, sd: 1.0 },
            ],
            sigma_a2: 2.0,
            sigma_e2: 1.0,
            n_groups: r,
            count_dist: CountDist::ShiftedPoisson { lambda: 3.0 },
            alpha_dist: EffectDist::normal_with_variance(2.0),
            eps_dist: EffectDist::normal_with_variance(1.0),
            seed,
        }),
        ModelArg::Crossed => SimSpec::Crossed(CrossedSpec {
            mu: 3.0,
            sigma_a2: 1.0,
            sigma_b2: 0.5,
            sigma_e2: 1.0,
            n_rows: r,
            n_cols: args.cols.unwrap_or(r),
            density: args.density,
            mechanism: CellMechanism::Bernoulli,
            alpha_dist: EffectDist::normal_with_variance(1.0),
            beta_dist: EffectDist::normal_with_variance(0.5),
            eps_dist: EffectDist::normal_with_variance(1.0),
            shuffle_arrivals: args.shuffle_arrivals,
            resample_empty: true,
            mean_regressors: None,
            seed,
        }),
    }
}

#[derive(Serialize)]
struct SimulateReport {
    command: &'static str,
    out: String,
    dataset: DatasetSummary,
    spec: SimSpec,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let spec: SimSpec = match (&args.spec, args.model) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|source| CliError::Spec {
                path: path.clone(),
                source,
            })?
        }
        (None, Some(model)) => default_spec(model, args),
        (None, None) => {
            return Err(CliError::Usage(
                "simulate needs either --model or --spec".into(),
            ))
        }
    };

    spec.validate()?;
    let data = spec.generate()?;

    let dataset = match &data {
        SimData::Grouped(sample) => {
            write_grouped_csv(&args.out, sample)?;
            DatasetSummary::Grouped {
                n_groups: sample.n_groups(),
                n_obs: sample.n_obs(),
                count_moments: count_summary(sample, MomentOrder::Two)?,
            }
        }
        SimData::Ratings(ratings) => {
            write_ratings_csv(&args.out, ratings)?;
            DatasetSummary::Crossed {
                n_rows: ratings.n_rows(),
                n_cols: ratings.n_cols(),
                n_entries: ratings.n_entries(),
            }
        }
    };

    let report = SimulateReport {
        command: "simulate",
        out: args.out.display().to_string(),
        dataset,
        spec,
    };

    if args.json {
        print!("{}", render_json(&report));
    } else {
        let mut t = Table::new();
        let model_name = match &report.spec {
            SimSpec::OneWay(_) => "one-way",
            SimSpec::Famsize(_) => "famsize",
            SimSpec::Regression(_) => "regression",
            SimSpec::Crossed(_) => "crossed",
        };
        t.line(format!("model: {model_name}  seed: {}", report.spec.seed()));
        match &report.dataset {
            DatasetSummary::Grouped { n_groups, n_obs, .. } => {
                t.line(format!(
                    "wrote {n_obs} observations in {n_groups} groups to {}",
                    report.out
                ));
            }
            DatasetSummary::Crossed {
                n_rows,
                n_cols,
                n_entries,
            } => {
                t.line(format!(
                    "wrote {n_entries} ratings on a {n_rows} x {n_cols} grid to {}",
                    report.out
                ));
            }
        }
        print!("{}", t.finish());
    }
    Ok(())
}
