//! One-way model whose mean depends on group size.
//!
//! Model: `Y_ij = c1 + c2 * N_i + alpha_i + eps_ij`. Group size now
//! enters the mean (larger families behave differently), so the mean
//! structure and the variance components must be fitted jointly:
//!
//! * given `(c1, c2)`, the group sums have
//!   `Var(S) = (nu2 + nu1^2) sigma_a2 + nu1 sigma_e2 + Var(c1 N + c2 N^2)`
//!   and the pooled responses have
//!   `Var(Y) = sigma_a2 + sigma_e2 + Var(c1 + c2 N)` (size-biased), so
//!   subtracting plug-in variances of the fitted mean structure leaves the
//!   familiar two-component system;
//! * given the variances, `(c1, c2)` is a weighted least squares fit of the
//!   group means on `(1, N_i)` with weights `N_i`.
//!
//! Alternating the two steps converges in a handful of iterations because
//! the least squares step does not actually depend on the variances: after
//! the mean structure settles, one more variance solve lands on the fixed
//! point.

use crate::data::GroupedSample;
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{self, MomentOrder, MomentSummary};
use crate::sums::{pairwise_map_sum, pairwise_sum};
use serde::Serialize;

use super::{solve_two_component, SolverOptions};

/// Joint estimate of the size-dependent mean and the variance components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamSizeEstimate {
    /// Intercept of the mean structure.
    pub c1: f64,
    /// Size coefficient of the mean structure.
    pub c2: f64,
    pub sigma_a2: f64,
    pub sigma_e2: f64,
    /// Moments of the group-size distribution (through order four).
    pub n_moments: MomentSummary,
    /// Iterations actually run.
    pub iterations: usize,
    /// Whether both the parameter step and the moment-equation residual
    /// fell below `tol`. A clamped fit cannot satisfy the raw equations
    /// and therefore reports `false`.
    pub converged: bool,
    /// Max-norm residual of the two moment equations at the final
    /// parameters.
    pub residual_norm: f64,
    pub raw_sigma_a2: f64,
    pub raw_sigma_e2: f64,
    pub clamped_sigma_a2: bool,
    pub clamped_sigma_e2: bool,
}

struct FamSizeData {
    counts: Vec<f64>,
    sums: Vec<f64>,
    group_means: Vec<f64>,
    var_s: f64,
    var_y: f64,
    n_obs: f64,
}

impl FamSizeData {
    /// Sample variance of the fitted group sums `c1 N_i + c2 N_i^2`.
    fn fitted_sum_var(&self, c1: f64, c2: f64) -> f64 {
        let fitted: Vec<f64> = self.counts.iter().map(|&n| c1 * n + c2 * n * n).collect();
        let mean = pairwise_sum(&fitted) / fitted.len() as f64;
        pairwise_map_sum(&fitted, &|m| (m - mean) * (m - mean)) / (fitted.len() as f64 - 1.0)
    }

    /// Pooled variance of the fitted per-observation means `c1 + c2 N_i`,
    /// each weighted by its group size (divisor `M - 1`).
    fn fitted_mean_var(&self, c1: f64, c2: f64) -> f64 {
        let weighted_total = pairwise_map_sum(&self.counts, &|n| n * (c1 + c2 * n));
        let wmean = weighted_total / self.n_obs;
        let ss = pairwise_map_sum(&self.counts, &|n| {
            let d = c1 + c2 * n - wmean;
            n * d * d
        });
        ss / (self.n_obs - 1.0)
    }

    /// Max-norm residual of the two moment equations at the given
    /// parameters.
    fn residual(&self, c1: f64, c2: f64, a: f64, e: f64, coef_a: f64, coef_e: f64) -> f64 {
        let r1 = coef_a * a + coef_e * e + self.fitted_sum_var(c1, c2) - self.var_s;
        let r2 = a + e + self.fitted_mean_var(c1, c2) - self.var_y;
        r1.abs().max(r2.abs())
    }
}

/// Weighted least squares of the group means on `(1, N_i)` with weights
/// `N_i`; equivalent to pooled per-observation least squares.
fn weighted_mean_fit(data: &FamSizeData) -> Result<(f64, f64)> {
    let sw = pairwise_sum(&data.counts);
    let swn = pairwise_map_sum(&data.counts, &|n| n * n);
    let swnn = pairwise_map_sum(&data.counts, &|n| n * n * n);
    // Right-hand side: sum_i w_i mean_i (1, N_i) = (sum S_i, sum N_i S_i).
    let b0 = pairwise_sum(&data.sums);
    let weighted: Vec<f64> = data
        .counts
        .iter()
        .zip(&data.sums)
        .map(|(&n, &s)| n * s)
        .collect();
    let b1 = pairwise_sum(&weighted);
    let x = linalg::cholesky_solve(&[sw, swn, swn, swnn], 2, &[b0, b1]).map_err(|_| {
        Error::Unidentifiable("group sizes carry too little spread for the size-dependent mean".into())
    })?;
    Ok((x[0], x[1]))
}

/// Fit the size-dependent-mean model by alternating moment solves.
pub fn estimate_famsize(sample: &GroupedSample, opts: &SolverOptions) -> Result<FamSizeEstimate> {
    opts.validate()?;
    let r = sample.n_groups();
    if r < 3 {
        return Err(Error::InsufficientData {
            what: "groups",
            needed: 3,
            got: r,
        });
    }
    let n_moments = moments::count_summary(sample, MomentOrder::Four)?;
    if n_moments.var <= 0.0 {
        return Err(Error::Unidentifiable(
            "group sizes are constant, so the size coefficient of the mean is not identifiable"
                .into(),
        ));
    }

    let counts: Vec<f64> = sample.counts().iter().map(|&n| n as f64).collect();
    let sums = moments::group_sums(sample);
    let group_means: Vec<f64> = sums.iter().zip(&counts).map(|(&s, &n)| s / n).collect();
    let data = FamSizeData {
        var_s: moments::summarize(&sums, MomentOrder::Two)?.var,
        var_y: moments::pooled_variance(sample)?,
        n_obs: sample.n_obs() as f64,
        counts,
        sums,
        group_means,
    };

    let (nu1, nu2) = (n_moments.mean, n_moments.var);
    let coef_a = nu2 + nu1 * nu1;
    let coef_e = nu1;

    // Start from an unweighted line through the group means and a
    // flat-mean variance solve (clamped if need be).
    let (mut c1, mut c2) = ols_means_fit(&data)?;
    let mu_flat = moments::grand_mean(sample);
    let init = solve_two_component(coef_a, coef_e, data.var_s - mu_flat * mu_flat * nu2, data.var_y)?;
    let (mut a, mut e) = (init.a, init.e);
    let mut last_fit = init;

    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        iterations += 1;
        // (a) plug-in mean-structure variances at the current coefficients;
        let vs_fit = data.fitted_sum_var(c1, c2);
        let vy_fit = data.fitted_mean_var(c1, c2);
        // (b) refresh the mean coefficients;
        let (c1_new, c2_new) = weighted_mean_fit(&data)?;
        // (c) re-solve the variance components against the adjusted moments.
        let fit = solve_two_component(coef_a, coef_e, data.var_s - vs_fit, data.var_y - vy_fit)?;

        let step = (c1_new - c1)
            .abs()
            .max((c2_new - c2).abs())
            .max((fit.a - a).abs())
            .max((fit.e - e).abs());
        c1 = c1_new;
        c2 = c2_new;
        a = fit.a;
        e = fit.e;
        last_fit = fit;

        if step < opts.tol && data.residual(c1, c2, a, e, coef_a, coef_e) < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(FamSizeEstimate {
        c1,
        c2,
        sigma_a2: a,
        sigma_e2: e,
        n_moments,
        iterations,
        converged,
        residual_norm: data.residual(c1, c2, a, e, coef_a, coef_e),
        raw_sigma_a2: last_fit.raw_a,
        raw_sigma_e2: last_fit.raw_e,
        clamped_sigma_a2: last_fit.clamped_a,
        clamped_sigma_e2: last_fit.clamped_e,
    })
}

/// Unweighted least squares of group means on `(1, N_i)`, used only to
/// initialise the iteration.
fn ols_means_fit(data: &FamSizeData) -> Result<(f64, f64)> {
    let r = data.counts.len() as f64;
    let sn = pairwise_sum(&data.counts);
    let snn = pairwise_map_sum(&data.counts, &|n| n * n);
    let b0 = pairwise_sum(&data.group_means);
    let weighted: Vec<f64> = data
        .counts
        .iter()
        .zip(&data.group_means)
        .map(|(&n, &m)| n * m)
        .collect();
    let b1 = pairwise_sum(&weighted);
    let x = linalg::cholesky_solve(&[r, sn, sn, snn], 2, &[b0, b1]).map_err(|_| {
        Error::Unidentifiable("group sizes carry too little spread for the size-dependent mean".into())
    })?;
    Ok((x[0], x[1]))
}
