//! Random effects estimation with group-level random regressors.
//!
//! Model: `Y_ij = X_i' gamma + alpha_i + eps_ij`, where the regressor
//! vector `X_i` is itself random, drawn once per group and shared by all
//! of the group's observations.
//!
//! The mean structure is fitted by pooled least squares (each group's
//! regressor row repeated once per observation, which the normal
//! equations absorb as a weight of `N_i`). The variance components then
//! come from the same two-equation system as the plain one-way model,
//! with the variance explained by the fitted mean structure subtracted
//! from each observable moment: the fitted group sums `N_i X_i' gamma`
//! from the group-sum variance, and the fitted means `X_i' gamma`
//! (size-weighted) from the pooled response variance. With an
//! intercept-only regressor this reduces exactly to the one-way fit.

use crate::data::GroupedSample;
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{self, MomentOrder};
use crate::sums::{pairwise_map_sum, pairwise_sum};
use serde::Serialize;

use super::solve_two_component;

/// Size and location/spread of the pooled least squares residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub n_groups: usize,
    pub n_obs: usize,
    /// Pooled mean of the residuals (zero, up to rounding, whenever the
    /// regressors span an intercept).
    pub mean: f64,
    /// Pooled sample variance of the residuals.
    pub var: f64,
}

/// Estimates for the random-regressor model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionEstimate {
    /// Pooled least squares coefficients, one per regressor.
    pub gamma: Vec<f64>,
    pub sigma_a2: f64,
    pub sigma_e2: f64,
    pub raw_sigma_a2: f64,
    pub raw_sigma_e2: f64,
    pub clamped_sigma_a2: bool,
    pub clamped_sigma_e2: bool,
    pub residual_summary: ResidualSummary,
}

/// Fit the random-regressor model.
pub fn estimate_with_regressors(sample: &GroupedSample) -> Result<RegressionEstimate> {
    let p = sample.regressor_dim().ok_or(Error::MissingRegressors)?;
    let r = sample.n_groups();
    if r < 2 {
        return Err(Error::InsufficientData {
            what: "groups",
            needed: 2,
            got: r,
        });
    }
    if sample.counts().iter().all(|&n| n < 2) {
        return Err(Error::Unidentifiable(
            "every group has exactly one observation, so the noise variance \
             cannot be separated from the group-effect variance"
                .into(),
        ));
    }

    let counts: Vec<f64> = sample.counts().iter().map(|&n| n as f64).collect();
    let sums = moments::group_sums(sample);

    // Pooled least squares: A = sum_i N_i X_i X_i', b = sum_i S_i X_i.
    // Each matrix entry is accumulated with pairwise summation so that an
    // intercept-only fit reproduces the grand mean bit for bit.
    let mut a_mat = vec![0.0f64; p * p];
    let mut b_vec = vec![0.0f64; p];
    let mut scratch = vec![0.0f64; r];
    for u in 0..p {
        for v in 0..=u {
            for (i, g) in sample.groups().iter().enumerate() {
                let x = g.regressors().expect("validated");
                scratch[i] = counts[i] * x[u] * x[v];
            }
            let s = pairwise_sum(&scratch);
            a_mat[u * p + v] = s;
            a_mat[v * p + u] = s;
        }
        for (i, g) in sample.groups().iter().enumerate() {
            let x = g.regressors().expect("validated");
            scratch[i] = sums[i] * x[u];
        }
        b_vec[u] = pairwise_sum(&scratch);
    }
    let gamma = linalg::cholesky_solve(&a_mat, p, &b_vec)?;

    // Fitted per-group means and sums under the estimated mean structure.
    let fitted_means: Vec<f64> = sample
        .groups()
        .iter()
        .map(|g| {
            let x = g.regressors().expect("validated");
            x.iter().zip(&gamma).map(|(xi, gi)| xi * gi).sum::<f64>()
        })
        .collect();
    let fitted_sums: Vec<f64> = fitted_means
        .iter()
        .zip(&counts)
        .map(|(&f, &n)| n * f)
        .collect();

    let counts_summary = moments::count_summary(sample, MomentOrder::Two)?;
    let (nu1, nu2) = (counts_summary.mean, counts_summary.var);
    let var_s = moments::summarize(&sums, MomentOrder::Two)?.var;
    let var_y = moments::pooled_variance(sample)?;

    // Variance explained by the fitted mean structure, on both scales.
    let vs_fit = moments::summarize(&fitted_sums, MomentOrder::Two)?.var;
    let m = sample.n_obs() as f64;
    let wmean = pairwise_sum(&fitted_sums) / m;
    let weighted_devs: Vec<f64> = fitted_means
        .iter()
        .zip(&counts)
        .map(|(&f, &n)| {
            let d = f - wmean;
            n * d * d
        })
        .collect();
    let vy_fit = pairwise_sum(&weighted_devs) / (m - 1.0);

    let coef_a = nu2 + nu1 * nu1;
    let fit = solve_two_component(coef_a, nu1, var_s - vs_fit, var_y - vy_fit).map_err(|err| {
        match err {
            Error::Singular { cond } => Error::Unidentifiable(format!(
                "group-size moments make the system numerically singular (condition estimate {cond:.3e})"
            )),
            other => other,
        }
    })?;

    // Residual diagnostics: residuals share a group's fitted mean.
    let resid_total = pairwise_sum(&sums) - pairwise_sum(&fitted_sums);
    let resid_mean = resid_total / m;
    let per_group_ss: Vec<f64> = sample
        .groups()
        .iter()
        .zip(&fitted_means)
        .map(|(g, &f)| pairwise_map_sum(g.responses(), &|y| (y - f - resid_mean) * (y - f - resid_mean)))
        .collect();
    let resid_var = pairwise_sum(&per_group_ss) / (m - 1.0);

    Ok(RegressionEstimate {
        gamma,
        sigma_a2: fit.a,
        sigma_e2: fit.e,
        raw_sigma_a2: fit.raw_a,
        raw_sigma_e2: fit.raw_e,
        clamped_sigma_a2: fit.clamped_a,
        clamped_sigma_e2: fit.clamped_e,
        residual_summary: ResidualSummary {
            n_groups: r,
            n_obs: sample.n_obs(),
            mean: resid_mean,
            var: resid_var,
        },
    })
}
