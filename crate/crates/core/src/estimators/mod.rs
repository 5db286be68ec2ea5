//! Method-of-moments estimators.
//!
//! Every estimator here follows the same recipe. Group structure —
//! group sizes, regressors, which cells of a grid are observed — is
//! treated as random, part of the data-generating process, rather than as
//! a fixed design. Population moments of observable summaries (group
//! sums, pooled responses, row/column sums) are written in terms of the
//! model parameters, sample moments are substituted, and the resulting
//! small linear system is solved.
//!
//! Variance estimates produced this way can come out negative in small
//! samples. The crate-wide policy is: clamp the offending component to
//! zero, re-solve the remaining components with the total-variance
//! equation taking priority, and *flag* every clamped component on the
//! returned estimate so the truncation is never silent.

mod crossed;
mod famsize;
mod one_way;
mod regression;

pub use crossed::{
    estimate_crossed, overlap_distribution, row_cov_diagnostic, CountMoments, CrossedEstimate,
    OverlapDistribution, OverlapOptions, RowCovDiagnostic,
};
pub use famsize::{estimate_famsize, FamSizeEstimate};
pub use one_way::{estimate_one_way_fixed, estimate_one_way_fr, OneWayEstimate};
pub use regression::{estimate_with_regressors, RegressionEstimate, ResidualSummary};

use crate::error::{Error, Result};
use crate::linalg;
use serde::{Deserialize, Serialize};

/// Options for the iterative size-dependent-mean fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Convergence tolerance on both the parameter step and the
    /// moment-equation residual. Must be positive.
    pub tol: f64,
    /// Iteration cap. Must be at least one.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

impl SolverOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidOptions(format!(
                "tol must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidOptions("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of the shared two-component variance solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TwoComponentFit {
    pub a: f64,
    pub e: f64,
    pub raw_a: f64,
    pub raw_e: f64,
    pub clamped_a: bool,
    pub clamped_e: bool,
}

/// Negative solutions closer to zero than this (relative to the total
/// variance scale) are rounding noise: they are snapped to zero without
/// raising a clamp flag.
pub(crate) fn zero_snap_tol(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// Solve the 2 x 2 moment system
///
/// ```text
/// [ coef_a  coef_e ] [ sigma_a2 ]   [ pivot_rhs ]
/// [   1       1    ] [ sigma_e2 ] = [ total_var ]
/// ```
///
/// applying the clamp-and-re-solve policy: a genuinely negative component
/// is set to zero and flagged, and the other component is re-solved from
/// the total-variance equation.
pub(crate) fn solve_two_component(
    coef_a: f64,
    coef_e: f64,
    pivot_rhs: f64,
    total_var: f64,
) -> Result<TwoComponentFit> {
    let a_mat = [coef_a, coef_e, 1.0, 1.0];
    let rhs = [pivot_rhs, total_var];
    let (x, _cond) = linalg::solve_equilibrated(&a_mat, 2, &rhs)?;
    let (raw_a, raw_e) = (x[0], x[1]);
    let tol = zero_snap_tol(total_var);

    let mut a = raw_a;
    let mut e = raw_e;
    let mut clamped_a = false;
    let mut clamped_e = false;
    if a < 0.0 {
        if a < -tol {
            clamped_a = true;
            a = 0.0;
            e = total_var.max(0.0);
        } else {
            a = 0.0;
        }
    }
    if e < 0.0 {
        if e < -tol {
            clamped_e = true;
            e = 0.0;
            a = total_var.max(0.0);
            if a < 0.0 {
                // Unreachable for sample variances, kept for safety.
                a = 0.0;
                clamped_a = true;
            }
        } else {
            e = 0.0;
        }
    }
    Ok(TwoComponentFit {
        a,
        e,
        raw_a,
        raw_e,
        clamped_a,
        clamped_e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_solved_system() {
        // coef_a = nu2 + nu1^2 = 0 + 4, coef_e = nu1 = 2,
        // pivot_rhs = 10, total_var = 3  =>  (2, 1).
        let fit = solve_two_component(4.0, 2.0, 10.0, 3.0).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-12);
        assert!((fit.e - 1.0).abs() < 1e-12);
        assert!(!fit.clamped_a && !fit.clamped_e);
    }

    #[test]
    fn clamps_negative_noise_component() {
        // 4a + 2e = 8, a + e = 4/3  =>  raw (8/3, -4/3); e clamps, a
        // re-solves to the total variance.
        let fit = solve_two_component(4.0, 2.0, 8.0, 4.0 / 3.0).unwrap();
        assert!((fit.raw_a - 8.0 / 3.0).abs() < 1e-12);
        assert!((fit.raw_e + 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(fit.a, 4.0 / 3.0);
        assert_eq!(fit.e, 0.0);
        assert!(fit.clamped_e);
        assert!(!fit.clamped_a);
    }

    #[test]
    fn tiny_negative_is_snapped_without_flag() {
        // Construct a system whose exact solution is (1, 0): the solver's
        // rounding may land a hair below zero, which must not flag.
        let fit = solve_two_component(4.0, 2.0, 4.0, 1.0).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-12);
        assert_eq!(fit.e, 0.0);
        assert!(!fit.clamped_e);
    }

    #[test]
    fn singular_system_errors() {
        let err = solve_two_component(1.0, 1.0, 2.0, 3.0).unwrap_err();
        assert!(matches!(err, crate::Error::Singular { .. }));
    }

    #[test]
    fn options_validate() {
        assert!(SolverOptions::default().validate().is_ok());
        assert!(SolverOptions { tol: 0.0, max_iter: 5 }.validate().is_err());
        assert!(SolverOptions { tol: -1.0, max_iter: 5 }.validate().is_err());
        assert!(SolverOptions { tol: 1e-8, max_iter: 0 }.validate().is_err());
    }
}
