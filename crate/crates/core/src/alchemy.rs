//! Chunked estimation with empirical standard errors.
//!
//! Any of the moment estimators can be run on `g` disjoint chunks of the
//! data and the per-chunk parameter vectors averaged. Because the chunks
//! are built from i.i.d. units (whole groups, or arrival-order slices of
//! a ratings stream), the average retains the statistical accuracy of the
//! full-data fit while the spread *across* chunks yields standard errors
//! essentially for free — no asymptotic variance formulas required.
//!
//! Determinism contract: chunk results are combined in chunk-index order
//! using pairwise summation, so the result is bit-identical no matter how
//! many worker threads ran the chunks or in which order they finished.

use crate::data::{GroupedSample, SparseRatings};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_crossed, estimate_famsize, estimate_one_way_fixed, estimate_one_way_fr,
    estimate_with_regressors, SolverOptions,
};
use crate::sums::pairwise_sum;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Assignment of every i.i.d. unit to one of `g` chunks.
///
/// A unit is a group index for grouped samples and an *arrival position*
/// for ratings streams — chunking a stream slices it in the order entries
/// arrived, not in row/column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChunkPlan {
    g: usize,
    assignment: Vec<usize>,
}

impl ChunkPlan {
    /// Contiguous plan: the first `n mod g` chunks get `ceil(n / g)`
    /// units, the rest `floor(n / g)`, in input order.
    pub fn contiguous(n_units: usize, g: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidOptions("chunk count must be at least 1".into()));
        }
        if g > n_units {
            return Err(Error::TooManyChunks {
                chunks: g,
                units: n_units,
            });
        }
        let base = n_units / g;
        let extra = n_units % g;
        let mut assignment = Vec::with_capacity(n_units);
        for k in 0..g {
            let size = base + usize::from(k < extra);
            assignment.extend(std::iter::repeat(k).take(size));
        }
        Ok(ChunkPlan { g, assignment })
    }

    /// Like [`ChunkPlan::contiguous`], but units are first shuffled by a
    /// seeded generator. Useful when the input ordering is suspected of
    /// drifting (so contiguous chunks would not be exchangeable).
    pub fn shuffled(n_units: usize, g: usize, seed: u64) -> Result<Self> {
        let contiguous = Self::contiguous(n_units, g)?;
        let mut order: Vec<usize> = (0..n_units).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut assignment = vec![0usize; n_units];
        for (pos, &unit) in order.iter().enumerate() {
            assignment[unit] = contiguous.assignment[pos];
        }
        Ok(ChunkPlan { g, assignment })
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn n_units(&self) -> usize {
        self.assignment.len()
    }

    /// `assignment[unit]` is the chunk that owns the unit.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Units owned by chunk `k`, ascending.
    pub fn chunk_units(&self, k: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(u, &c)| (c == k).then_some(u))
            .collect()
    }

    /// Chunk sizes, by chunk index.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.g];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Contiguous plan over the groups of a sample.
pub fn make_chunks(sample: &GroupedSample, g: usize) -> Result<ChunkPlan> {
    ChunkPlan::contiguous(sample.n_groups(), g)
}

/// Contiguous plan over the arrival positions of a ratings stream.
pub fn make_stream_chunks(data: &SparseRatings, g: usize) -> Result<ChunkPlan> {
    ChunkPlan::contiguous(data.n_entries(), g)
}

/// Data that can hand out per-chunk subsets of itself.
pub trait Chunkable: Sync {
    fn n_units(&self) -> usize;
    /// Materialise the subset owning exactly `units` (ascending). Called
    /// once per chunk, so peak memory tracks the chunk size, not `g`
    /// copies of the data.
    fn take_units(&self, units: &[usize]) -> Self;
}

impl Chunkable for GroupedSample {
    fn n_units(&self) -> usize {
        self.n_groups()
    }

    fn take_units(&self, units: &[usize]) -> Self {
        self.subset(units)
    }
}

impl Chunkable for SparseRatings {
    fn n_units(&self) -> usize {
        self.n_entries()
    }

    fn take_units(&self, units: &[usize]) -> Self {
        self.subset_by_arrival(units)
    }
}

/// One chunk's parameter vector, with per-parameter clamp flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkFit {
    pub values: Vec<f64>,
    pub clamped: Vec<bool>,
}

/// Combined chunked estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlchemyResult {
    pub parameter_names: Vec<String>,
    /// Number of chunks.
    pub g: usize,
    /// Per-chunk parameter vectors, in chunk order.
    pub per_chunk: Vec<Vec<f64>>,
    /// Chunk average, combined in chunk-index order.
    pub theta_bar: Vec<f64>,
    /// Empirical covariance of the chunk estimates (divisor `g - 1`);
    /// absent when `g = 1`.
    pub emp_cov: Option<Vec<Vec<f64>>>,
    /// `sqrt(emp_cov[k][k] / g)` per parameter; absent when `g = 1`.
    pub std_errors: Option<Vec<f64>>,
    /// Per parameter, the number of chunks whose fit clamped it.
    pub clamp_counts: Vec<usize>,
}

impl AlchemyResult {
    /// Standard errors, or an error when only one chunk was fitted.
    pub fn standard_errors(&self) -> Result<&[f64]> {
        self.std_errors
            .as_deref()
            .ok_or(Error::InsufficientChunks { chunks: self.g })
    }
}

/// Run `fit` on every chunk of `plan` and average the results.
///
/// `workers` caps the number of threads (1 means fully serial). Chunk
/// failures abort the whole call: the error names the lowest failing
/// chunk index and nothing is averaged.
pub fn alchemy_estimate<D, F>(
    data: &D,
    plan: &ChunkPlan,
    parameter_names: Vec<String>,
    fit: F,
    workers: usize,
) -> Result<AlchemyResult>
where
    D: Chunkable,
    F: Fn(&D) -> Result<ChunkFit> + Sync,
{
    if workers == 0 {
        return Err(Error::InvalidOptions("worker count must be at least 1".into()));
    }
    if plan.n_units() != data.n_units() {
        return Err(Error::InvalidOptions(format!(
            "chunk plan covers {} units but the data has {}",
            plan.n_units(),
            data.n_units()
        )));
    }
    let g = plan.g();
    let k = parameter_names.len();

    let run_chunk = |chunk: usize| -> Result<ChunkFit> {
        let sub = data.take_units(&plan.chunk_units(chunk));
        let fitted = fit(&sub).map_err(|e| Error::ChunkEstimationFailed {
            chunk,
            source: Box::new(e),
        })?;
        if fitted.values.len() != k || fitted.clamped.len() != k {
            return Err(Error::InvalidOptions(format!(
                "chunk {} produced {} parameters, expected {}",
                chunk,
                fitted.values.len(),
                k
            )));
        }
        Ok(fitted)
    };

    let outcomes: Vec<Result<ChunkFit>> = if workers == 1 || g == 1 {
        (0..g).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.min(g))
            .build()
            .expect("failed to build worker thread pool");
        pool.install(|| (0..g).into_par_iter().map(run_chunk).collect())
    };

    // Lowest failing chunk wins, regardless of completion order.
    let mut fits = Vec::with_capacity(g);
    for outcome in outcomes {
        fits.push(outcome?);
    }

    let per_chunk: Vec<Vec<f64>> = fits.iter().map(|f| f.values.clone()).collect();
    let mut theta_bar = vec![0.0f64; k];
    let mut scratch = vec![0.0f64; g];
    for j in 0..k {
        for (i, f) in fits.iter().enumerate() {
            scratch[i] = f.values[j];
        }
        theta_bar[j] = pairwise_sum(&scratch) / g as f64;
    }

    let (emp_cov, std_errors) = if g >= 2 {
        let mut cov = vec![vec![0.0f64; k]; k];
        let mut prod = vec![0.0f64; g];
        for j in 0..k {
            for l in 0..=j {
                for (i, f) in fits.iter().enumerate() {
                    prod[i] = (f.values[j] - theta_bar[j]) * (f.values[l] - theta_bar[l]);
                }
                let c = pairwise_sum(&prod) / (g as f64 - 1.0);
                cov[j][l] = c;
                cov[l][j] = c;
            }
        }
        let se: Vec<f64> = (0..k).map(|j| (cov[j][j] / g as f64).sqrt()).collect();
        (Some(cov), Some(se))
    } else {
        (None, None)
    };

    let clamp_counts: Vec<usize> = (0..k)
        .map(|j| fits.iter().filter(|f| f.clamped[j]).count())
        .collect();

    Ok(AlchemyResult {
        parameter_names,
        g,
        per_chunk,
        theta_bar,
        emp_cov,
        std_errors,
        clamp_counts,
    })
}

/// Which estimator to run on each chunk of a grouped sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupedEstimator {
    OneWayRandomSizes,
    OneWayFixedSizes,
    FamSize(SolverOptions),
    Regression,
}

impl GroupedEstimator {
    fn parameter_names(&self, sample: &GroupedSample) -> Result<Vec<String>> {
        Ok(match self {
            GroupedEstimator::OneWayRandomSizes | GroupedEstimator::OneWayFixedSizes => {
                vec!["mu".into(), "sigma_a2".into(), "sigma_e2".into()]
            }
            GroupedEstimator::FamSize(_) => vec![
                "c1".into(),
                "c2".into(),
                "sigma_a2".into(),
                "sigma_e2".into(),
            ],
            GroupedEstimator::Regression => {
                let p = sample.regressor_dim().ok_or(Error::MissingRegressors)?;
                let mut names: Vec<String> = (1..=p).map(|i| format!("gamma{i}")).collect();
                names.push("sigma_a2".into());
                names.push("sigma_e2".into());
                names
            }
        })
    }

    fn fit_chunk(&self, chunk: &GroupedSample) -> Result<ChunkFit> {
        Ok(match self {
            GroupedEstimator::OneWayRandomSizes => {
                let e = estimate_one_way_fr(chunk)?;
                ChunkFit {
                    values: vec![e.mu, e.sigma_a2, e.sigma_e2],
                    clamped: vec![false, e.clamped_sigma_a2, e.clamped_sigma_e2],
                }
            }
            GroupedEstimator::OneWayFixedSizes => {
                let e = estimate_one_way_fixed(chunk)?;
                ChunkFit {
                    values: vec![e.mu, e.sigma_a2, e.sigma_e2],
                    clamped: vec![false, e.clamped_sigma_a2, e.clamped_sigma_e2],
                }
            }
            GroupedEstimator::FamSize(opts) => {
                let e = estimate_famsize(chunk, opts)?;
                ChunkFit {
                    values: vec![e.c1, e.c2, e.sigma_a2, e.sigma_e2],
                    clamped: vec![false, false, e.clamped_sigma_a2, e.clamped_sigma_e2],
                }
            }
            GroupedEstimator::Regression => {
                let e = estimate_with_regressors(chunk)?;
                let mut values = e.gamma.clone();
                let mut clamped = vec![false; values.len()];
                values.push(e.sigma_a2);
                values.push(e.sigma_e2);
                clamped.push(e.clamped_sigma_a2);
                clamped.push(e.clamped_sigma_e2);
                ChunkFit { values, clamped }
            }
        })
    }
}

/// Chunked estimation over a grouped sample.
pub fn alchemy_grouped(
    sample: &GroupedSample,
    plan: &ChunkPlan,
    estimator: &GroupedEstimator,
    workers: usize,
) -> Result<AlchemyResult> {
    let names = estimator.parameter_names(sample)?;
    alchemy_estimate(sample, plan, names, |chunk| estimator.fit_chunk(chunk), workers)
}

/// Chunked estimation of the crossed model over a ratings stream.
pub fn alchemy_crossed(
    data: &SparseRatings,
    plan: &ChunkPlan,
    workers: usize,
) -> Result<AlchemyResult> {
    let names = vec![
        "mu".into(),
        "sigma_a2".into(),
        "sigma_b2".into(),
        "sigma_e2".into(),
    ];
    alchemy_estimate(
        data,
        plan,
        names,
        |chunk: &SparseRatings| {
            let e = estimate_crossed(chunk)?;
            Ok(ChunkFit {
                values: vec![e.mu, e.sigma_a2, e.sigma_b2, e.sigma_e2],
                clamped: vec![
                    false,
                    e.clamped_sigma_a2,
                    e.clamped_sigma_b2,
                    e.clamped_sigma_e2,
                ],
            })
        },
        workers,
    )
}
