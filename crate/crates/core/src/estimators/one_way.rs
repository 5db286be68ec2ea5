//! One-way random effects estimation with random group sizes.
//!
//! Model: `Y_ij = mu + alpha_i + eps_ij`, where `alpha_i` (group effect,
//! variance `sigma_a2`) and `eps_ij` (noise, variance `sigma_e2`) are
//! independent and the group sizes `N_i` are themselves i.i.d. draws.
//!
//! Writing `S_i` for the i-th group sum, decomposing by conditioning on
//! `N_i` gives
//!
//! ```text
//! Var(S)  = (nu2 + nu1^2) * sigma_a2 + nu1 * sigma_e2 + mu^2 * nu2
//! Var(Y)  = sigma_a2 + sigma_e2
//! ```
//!
//! with `nu1 = E N`, `nu2 = Var N`. Substituting sample moments and
//! solving the 2 x 2 system yields the estimates; no distributional shape
//! assumptions are used anywhere.

use crate::data::GroupedSample;
use crate::error::{Error, Result};
use crate::moments::{self, MomentOrder};
use crate::sums::pairwise_map_sum;
use serde::Serialize;

use super::solve_two_component;

/// Estimates for the one-way model, together with the group-size moments
/// that drove them and the pre-clamp solution for transparency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneWayEstimate {
    /// Estimated overall mean.
    pub mu: f64,
    /// Estimated group-effect variance (after clamping, if any).
    pub sigma_a2: f64,
    /// Estimated noise variance (after clamping, if any).
    pub sigma_e2: f64,
    /// Mean of the group sizes.
    pub nu1: f64,
    /// Sample variance of the group sizes.
    pub nu2: f64,
    /// Solution of the moment system before clamping.
    pub raw_sigma_a2: f64,
    pub raw_sigma_e2: f64,
    /// True when the corresponding component was truncated at zero.
    pub clamped_sigma_a2: bool,
    pub clamped_sigma_e2: bool,
}

fn validate_for_one_way(sample: &GroupedSample) -> Result<()> {
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
    Ok(())
}

/// Map a singular moment system onto the identifiability error: for this
/// model the system degenerates exactly when group sizes carry no usable
/// spread.
fn identifiability(err: Error) -> Error {
    match err {
        Error::Singular { cond } => Error::Unidentifiable(format!(
            "group-size moments make the system numerically singular (condition estimate {cond:.3e})"
        )),
        other => other,
    }
}

/// Estimate the one-way model treating group sizes as random.
pub fn estimate_one_way_fr(sample: &GroupedSample) -> Result<OneWayEstimate> {
    validate_for_one_way(sample)?;

    let counts = moments::count_summary(sample, MomentOrder::Two)?;
    let (nu1, nu2) = (counts.mean, counts.var);
    let mu = moments::grand_mean(sample);

    let sums = moments::group_sums(sample);
    let var_s = moments::summarize(&sums, MomentOrder::Two)?.var;
    let var_y = moments::pooled_variance(sample)?;

    let coef_a = nu2 + nu1 * nu1;
    let coef_e = nu1;
    let pivot_rhs = var_s - mu * mu * nu2;
    let fit = solve_two_component(coef_a, coef_e, pivot_rhs, var_y).map_err(identifiability)?;

    Ok(OneWayEstimate {
        mu,
        sigma_a2: fit.a,
        sigma_e2: fit.e,
        nu1,
        nu2,
        raw_sigma_a2: fit.raw_a,
        raw_sigma_e2: fit.raw_e,
        clamped_sigma_a2: fit.clamped_a,
        clamped_sigma_e2: fit.clamped_e,
    })
}

/// Estimate the one-way model conditioning on the observed group sizes
/// (the classical fixed-sizes formulation).
///
/// The pivot equation equates the centered second moment of the group
/// sums, `sum_i (S_i - N_i mu)^2 / (r - 1)`, with its conditional
/// expectation `sigma_a2 * avg(N^2) + sigma_e2 * avg(N)`. When every
/// group has the same size this reproduces the random-sizes system
/// exactly, so the two estimators coincide there.
pub fn estimate_one_way_fixed(sample: &GroupedSample) -> Result<OneWayEstimate> {
    validate_for_one_way(sample)?;

    let counts = moments::count_summary(sample, MomentOrder::Two)?;
    let (nu1, nu2) = (counts.mean, counts.var);
    let mu = moments::grand_mean(sample);

    let sums = moments::group_sums(sample);
    let count_f: Vec<f64> = sample.counts().iter().map(|&n| n as f64).collect();
    let r = sums.len() as f64;

    // Centered pivot: deviations of group sums from their fitted means.
    let mut dev_sq = Vec::with_capacity(sums.len());
    for (s, n) in sums.iter().zip(&count_f) {
        let d = s - n * mu;
        dev_sq.push(d * d);
    }
    let pivot_rhs = crate::sums::pairwise_sum(&dev_sq) / (r - 1.0);

    let coef_a = pairwise_map_sum(&count_f, &|n| n * n) / r;
    let coef_e = nu1;
    let var_y = moments::pooled_variance(sample)?;

    let fit = solve_two_component(coef_a, coef_e, pivot_rhs, var_y).map_err(identifiability)?;

    Ok(OneWayEstimate {
        mu,
        sigma_a2: fit.a,
        sigma_e2: fit.e,
        nu1,
        nu2,
        raw_sigma_a2: fit.raw_a,
        raw_sigma_e2: fit.raw_e,
        clamped_sigma_a2: fit.clamped_a,
        clamped_sigma_e2: fit.clamped_e,
    })
}
