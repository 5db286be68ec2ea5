//! Sample moments.
//!
//! All estimators in this crate are driven by a small set of sample
//! moments: the variance of group sums, the pooled response variance, and
//! the moments of the group-size distribution. This module computes them
//! once, accurately, with explicit divisor conventions:
//!
//! * `var` is the unbiased sample variance (divisor `n - 1`);
//! * `central3` / `central4` are plain moment averages (divisor `n`).

use crate::data::GroupedSample;
use crate::error::{Error, Result};
use crate::sums::{pairwise_map_sum, pairwise_sum};
use serde::Serialize;

/// How many central moments [`summarize`] should compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    /// Mean and variance only.
    Two,
    /// Mean, variance, third and fourth central moments.
    Four,
}

/// Summary statistics of a batch of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSummary {
    /// Number of values summarised.
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance (divisor `n - 1`).
    pub var: f64,
    /// Third central moment (divisor `n`); present only at order four.
    pub central3: Option<f64>,
    /// Fourth central moment (divisor `n`); present only at order four.
    pub central4: Option<f64>,
}

/// Compute mean, variance and (optionally) higher central moments.
///
/// Uses a two-pass scheme with pairwise summation, so results stay
/// accurate on large inputs. Requires at least two values.
pub fn summarize(values: &[f64], order: MomentOrder) -> Result<MomentSummary> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "values",
            needed: 2,
            got: n,
        });
    }
    let nf = n as f64;
    let mean = pairwise_sum(values) / nf;
    let ss = pairwise_map_sum(values, &|x| (x - mean) * (x - mean));
    let var = ss / (nf - 1.0);
    let (central3, central4) = match order {
        MomentOrder::Two => (None, None),
        MomentOrder::Four => {
            let c3 = pairwise_map_sum(values, &|x| {
                let d = x - mean;
                d * d * d
            }) / nf;
            let c4 = pairwise_map_sum(values, &|x| {
                let d = x - mean;
                (d * d) * (d * d)
            }) / nf;
            (Some(c3), Some(c4))
        }
    };
    Ok(MomentSummary {
        n,
        mean,
        var,
        central3,
        central4,
    })
}

/// Per-group response sums, in group order.
pub fn group_sums(sample: &GroupedSample) -> Vec<f64> {
    sample
        .groups()
        .iter()
        .map(|g| pairwise_sum(g.responses()))
        .collect()
}

/// Mean of all responses pooled across groups.
///
/// Computed as the pairwise sum of the group sums divided by the total
/// observation count, so it is exactly consistent with [`group_sums`].
/// Returns NaN for an empty sample.
pub fn grand_mean(sample: &GroupedSample) -> f64 {
    let sums = group_sums(sample);
    pairwise_sum(&sums) / sample.n_obs() as f64
}

/// Unbiased sample variance of all responses pooled across groups
/// (centered at the grand mean, divisor `M - 1`). Requires at least two
/// observations in total.
pub fn pooled_variance(sample: &GroupedSample) -> Result<f64> {
    let m = sample.n_obs();
    if m < 2 {
        return Err(Error::InsufficientData {
            what: "observations",
            needed: 2,
            got: m,
        });
    }
    let mu = grand_mean(sample);
    let per_group: Vec<f64> = sample
        .groups()
        .iter()
        .map(|g| pairwise_map_sum(g.responses(), &|y| (y - mu) * (y - mu)))
        .collect();
    Ok(pairwise_sum(&per_group) / (m as f64 - 1.0))
}

/// Moment summary of the group sizes, treated as data.
pub fn count_summary(sample: &GroupedSample, order: MomentOrder) -> Result<MomentSummary> {
    let counts: Vec<f64> = sample.counts().iter().map(|&n| n as f64).collect();
    summarize(&counts, order)
}
