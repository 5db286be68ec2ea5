//! Synthetic data generators.
//!
//! Each generator draws from the exact process its estimator targets, so
//! simulated data doubles as a test oracle: estimates must approach the
//! spec parameters as the sample grows.
//!
//! Reproducibility contract: every independent unit (group, row, column,
//! draw) owns private counter-derived RNG streams. Unit `u`'s data
//! depends only on `(seed, u)` — never on how many other units exist or
//! in what order they were generated — so datasets are bit-identical
//! across runs, and a spec with more groups extends a smaller one
//! prefix-for-prefix.

use crate::data::{Group, GroupedSample, RatingEntry, SparseRatings};
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Stream tags: each (unit, tag) pair owns one RNG stream.
mod tag {
    pub const COUNT: u64 = 0;
    pub const ALPHA: u64 = 1;
    pub const EPS: u64 = 2;
    pub const X: u64 = 3;
    pub const BETA: u64 = 4;
    pub const INCLUDE: u64 = 5;
    pub const ARRIVAL: u64 = 6;
    pub const DRAW: u64 = 7;
    pub const COL_X: u64 = 8;
}
const N_TAGS: u64 = 16;

/// Private stream for one (unit, tag) pair.
fn unit_rng(seed: u64, unit: u64, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit * N_TAGS + tag);
    rng
}

/// Distribution of the per-group observation count (support >= 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum CountDist {
    /// `1 + Poisson(lambda)`.
    ShiftedPoisson { lambda: f64 },
    /// Uniform on the integers `lo..=hi`.
    UniformInt { lo: u64, hi: u64 },
    /// Every group has exactly `n` observations.
    Constant { n: u64 },
}

impl CountDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CountDist::ShiftedPoisson { lambda } => {
                if !(lambda >= 0.0) || !lambda.is_finite() {
                    return Err(Error::BadSpec(format!(
                        "shifted_poisson lambda must be finite and non-negative, got {lambda}"
                    )));
                }
            }
            CountDist::UniformInt { lo, hi } => {
                if lo < 1 || lo > hi {
                    return Err(Error::BadSpec(format!(
                        "uniform_int needs 1 <= lo <= hi, got lo={lo}, hi={hi}"
                    )));
                }
            }
            CountDist::Constant { n } => {
                if n < 1 {
                    return Err(Error::BadSpec("constant count must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CountDist::ShiftedPoisson { lambda } => 1.0 + lambda,
            CountDist::UniformInt { lo, hi } => (lo + hi) as f64 / 2.0,
            CountDist::Constant { n } => n as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CountDist::ShiftedPoisson { lambda } => lambda,
            CountDist::UniformInt { lo, hi } => {
                let span = (hi - lo + 1) as f64;
                (span * span - 1.0) / 12.0
            }
            CountDist::Constant { .. } => 0.0,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match *self {
            CountDist::ShiftedPoisson { lambda } => {
                if lambda == 0.0 {
                    1
                } else {
                    let pois: f64 = Poisson::new(lambda).expect("validated").sample(rng);
                    1 + pois as u64
                }
            }
            CountDist::UniformInt { lo, hi } => rng.random_range(lo..=hi),
            CountDist::Constant { n } => n,
        }
    }
}

/// Mean-zero distribution of a random effect or noise term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum EffectDist {
    /// `N(0, sd^2)`.
    Normal { sd: f64 },
    /// `Gamma(shape, scale)` re-centered to mean zero; right-skewed.
    CenteredGamma { shape: f64, scale: f64 },
    /// Uniform on `(-width/2, width/2)`.
    CenteredUniform { width: f64 },
}

impl EffectDist {
    /// Normal effect with the given variance.
    pub fn normal_with_variance(var: f64) -> Self {
        EffectDist::Normal { sd: var.sqrt() }
    }

    /// Centered gamma with the given shape and variance
    /// (`variance = shape * scale^2` fixes the scale).
    pub fn gamma_with_variance(shape: f64, var: f64) -> Self {
        EffectDist::CenteredGamma {
            shape,
            scale: (var / shape).sqrt(),
        }
    }

    /// Centered uniform with the given variance (`variance = width^2/12`).
    pub fn uniform_with_variance(var: f64) -> Self {
        EffectDist::CenteredUniform {
            width: (12.0 * var).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EffectDist::Normal { sd } => {
                if !(sd >= 0.0) || !sd.is_finite() {
                    return Err(Error::BadSpec(format!(
                        "normal sd must be finite and non-negative, got {sd}"
                    )));
                }
            }
            EffectDist::CenteredGamma { shape, scale } => {
                if !(shape > 0.0) || !shape.is_finite() || !(scale > 0.0) || !scale.is_finite() {
                    return Err(Error::BadSpec(format!(
                        "centered_gamma needs positive finite shape and scale, got shape={shape}, scale={scale}"
                    )));
                }
            }
            EffectDist::CenteredUniform { width } => {
                if !(width >= 0.0) || !width.is_finite() {
                    return Err(Error::BadSpec(format!(
                        "centered_uniform width must be finite and non-negative, got {width}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        match *self {
            EffectDist::Normal { sd } => sd * sd,
            EffectDist::CenteredGamma { shape, scale } => shape * scale * scale,
            EffectDist::CenteredUniform { width } => width * width / 12.0,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            EffectDist::Normal { sd } => {
                if sd == 0.0 {
                    0.0
                } else {
                    Normal::new(0.0, sd).expect("validated").sample(rng)
                }
            }
            EffectDist::CenteredGamma { shape, scale } => {
                Gamma::new(shape, scale).expect("validated").sample(rng) - shape * scale
            }
            EffectDist::CenteredUniform { width } => {
                if width == 0.0 {
                    0.0
                } else {
                    rng.random_range(-width / 2.0..width / 2.0)
                }
            }
        }
    }
}

/// Distribution of one regressor coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum RegressorDist {
    /// Always `value` (use 1.0 for an intercept).
    Constant { value: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl RegressorDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RegressorDist::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::BadSpec("constant regressor must be finite".into()));
                }
            }
            RegressorDist::Normal { mean, sd } => {
                if !mean.is_finite() || !(sd >= 0.0) || !sd.is_finite() {
                    return Err(Error::BadSpec(format!(
                        "normal regressor needs finite mean and non-negative sd, got mean={mean}, sd={sd}"
                    )));
                }
            }
            RegressorDist::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(Error::BadSpec(format!(
                        "uniform regressor needs finite lo <= hi, got lo={lo}, hi={hi}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            RegressorDist::Constant { value } => value,
            RegressorDist::Normal { mean, sd } => {
                if sd == 0.0 {
                    mean
                } else {
                    Normal::new(mean, sd).expect("validated").sample(rng)
                }
            }
            RegressorDist::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            }
        }
    }
}

fn check_effect_variance(name: &str, dist: &EffectDist, declared: f64) -> Result<()> {
    dist.validate()?;
    if !(declared >= 0.0) || !declared.is_finite() {
        return Err(Error::BadSpec(format!(
            "{name} must be finite and non-negative, got {declared}"
        )));
    }
    let got = dist.variance();
    if (got - declared).abs() > 1e-9 * declared.abs().max(1.0) {
        return Err(Error::BadSpec(format!(
            "{name} is declared as {declared} but its distribution has variance {got}"
        )));
    }
    Ok(())
}

/// Spec for the one-way model `Y_ij = mu + alpha_i + eps_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneWaySpec {
    pub mu: f64,
    pub sigma_a2: f64,
    pub sigma_e2: f64,
    pub n_groups: usize,
    pub count_dist: CountDist,
    pub alpha_dist: EffectDist,
    pub eps_dist: EffectDist,
    pub seed: u64,
}

/// Spec for the size-dependent-mean model
/// `Y_ij = c1 + c2 N_i + alpha_i + eps_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamsizeSpec {
    pub c1: f64,
    pub c2: f64,
    pub sigma_a2: f64,
    pub sigma_e2: f64,
    pub n_groups: usize,
    pub count_dist: CountDist,
    pub alpha_dist: EffectDist,
    pub eps_dist: EffectDist,
    pub seed: u64,
}

/// Spec for the random-regressor model
/// `Y_ij = X_i' gamma + alpha_i + eps_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub gamma: Vec<f64>,
    pub x_dists: Vec<RegressorDist>,
    pub sigma_a2: f64,
    pub sigma_e2: f64,
    pub n_groups: usize,
    pub count_dist: CountDist,
    pub alpha_dist: EffectDist,
    pub eps_dist: EffectDist,
    pub seed: u64,
}

/// How cells of the crossed grid come to be observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellMechanism {
    /// Each cell independently observed with probability `density`.
    #[default]
    Bernoulli,
    /// `n_draws` cells drawn uniformly at random (with replacement);
    /// repeat draws of a cell collapse to the last drawn value.
    IidDraws { n_draws: usize },
}

/// Extra mean structure for crossed generation: `U_i' gamma + V_j' eta`
/// with standard normal `U_i`, `V_j`. Generation-only — the crossed
/// estimator does not model it, which makes this useful for
/// misspecification experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossedMeanRegressors {
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
}

/// Spec for the crossed model `Y_ij = mu + a_i + b_j + eps_ij` on a
/// sparse grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossedSpec {
    pub mu: f64,
    pub sigma_a2: f64,
    pub sigma_b2: f64,
    pub sigma_e2: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Bernoulli inclusion probability (ignored by `iid_draws`).
    pub density: f64,
    #[serde(default)]
    pub mechanism: CellMechanism,
    pub alpha_dist: EffectDist,
    pub beta_dist: EffectDist,
    pub eps_dist: EffectDist,
    /// Attach a randomly shuffled arrival order instead of row-major.
    #[serde(default)]
    pub shuffle_arrivals: bool,
    /// Retry (with a salted seed) when a draw produces no entries.
    #[serde(default)]
    pub resample_empty: bool,
    #[serde(default)]
    pub mean_regressors: Option<CrossedMeanRegressors>,
    pub seed: u64,
}

/// A simulation spec for any of the supported models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SimSpec {
    OneWay(OneWaySpec),
    Famsize(FamsizeSpec),
    Regression(RegressionSpec),
    Crossed(CrossedSpec),
}

/// Output of [`SimSpec::generate`].
#[derive(Debug, Clone, PartialEq)]
pub enum SimData {
    Grouped(GroupedSample),
    Ratings(SparseRatings),
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SimSpec::OneWay(s) => validate_one_way(s),
            SimSpec::Famsize(s) => validate_famsize(s),
            SimSpec::Regression(s) => validate_regression(s),
            SimSpec::Crossed(s) => validate_crossed(s),
        }
    }

    pub fn generate(&self) -> Result<SimData> {
        Ok(match self {
            SimSpec::OneWay(s) => SimData::Grouped(gen_one_way(s)?),
            SimSpec::Famsize(s) => SimData::Grouped(gen_famsize(s)?),
            SimSpec::Regression(s) => SimData::Grouped(gen_regression(s)?),
            SimSpec::Crossed(s) => SimData::Ratings(gen_crossed(s)?),
        })
    }

    pub fn seed(&self) -> u64 {
        match self {
            SimSpec::OneWay(s) => s.seed,
            SimSpec::Famsize(s) => s.seed,
            SimSpec::Regression(s) => s.seed,
            SimSpec::Crossed(s) => s.seed,
        }
    }
}

fn validate_one_way(s: &OneWaySpec) -> Result<()> {
    if !s.mu.is_finite() {
        return Err(Error::BadSpec(format!("mu must be finite, got {}", s.mu)));
    }
    if s.n_groups == 0 {
        return Err(Error::BadSpec("n_groups must be at least 1".into()));
    }
    s.count_dist.validate()?;
    check_effect_variance("sigma_a2", &s.alpha_dist, s.sigma_a2)?;
    check_effect_variance("sigma_e2", &s.eps_dist, s.sigma_e2)?;
    Ok(())
}

fn validate_famsize(s: &FamsizeSpec) -> Result<()> {
    if !s.c1.is_finite() || !s.c2.is_finite() {
        return Err(Error::BadSpec(format!(
            "mean coefficients must be finite, got c1={}, c2={}",
            s.c1, s.c2
        )));
    }
    if s.n_groups == 0 {
        return Err(Error::BadSpec("n_groups must be at least 1".into()));
    }
    s.count_dist.validate()?;
    check_effect_variance("sigma_a2", &s.alpha_dist, s.sigma_a2)?;
    check_effect_variance("sigma_e2", &s.eps_dist, s.sigma_e2)?;
    Ok(())
}

fn validate_regression(s: &RegressionSpec) -> Result<()> {
    if s.gamma.is_empty() {
        return Err(Error::BadSpec("gamma must have at least one coefficient".into()));
    }
    if s.gamma.len() != s.x_dists.len() {
        return Err(Error::BadSpec(format!(
            "gamma has {} coefficients but x_dists has {}",
            s.gamma.len(),
            s.x_dists.len()
        )));
    }
    if s.gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::BadSpec("gamma coefficients must be finite".into()));
    }
    if s.n_groups == 0 {
        return Err(Error::BadSpec("n_groups must be at least 1".into()));
    }
    for d in &s.x_dists {
        d.validate()?;
    }
    s.count_dist.validate()?;
    check_effect_variance("sigma_a2", &s.alpha_dist, s.sigma_a2)?;
    check_effect_variance("sigma_e2", &s.eps_dist, s.sigma_e2)?;
    Ok(())
}

fn validate_crossed(s: &CrossedSpec) -> Result<()> {
    if !s.mu.is_finite() {
        return Err(Error::BadSpec(format!("mu must be finite, got {}", s.mu)));
    }
    if s.n_rows == 0 || s.n_cols == 0 {
        return Err(Error::BadSpec("the grid needs at least one row and one column".into()));
    }
    if let CellMechanism::Bernoulli = s.mechanism {
        if !(s.density > 0.0 && s.density <= 1.0) {
            return Err(Error::BadSpec(format!(
                "density must lie in (0, 1], got {}",
                s.density
            )));
        }
    }
    if let CellMechanism::IidDraws { n_draws } = s.mechanism {
        if n_draws == 0 {
            return Err(Error::BadSpec("iid_draws needs at least one draw".into()));
        }
    }
    if let Some(mr) = &s.mean_regressors {
        if mr.gamma.iter().chain(&mr.eta).any(|g| !g.is_finite()) {
            return Err(Error::BadSpec("mean regressor coefficients must be finite".into()));
        }
    }
    check_effect_variance("sigma_a2", &s.alpha_dist, s.sigma_a2)?;
    check_effect_variance("sigma_b2", &s.beta_dist, s.sigma_b2)?;
    check_effect_variance("sigma_e2", &s.eps_dist, s.sigma_e2)?;
    Ok(())
}

/// Shared grouped-data generator; `mean_of(n)` supplies the group mean.
fn gen_grouped_core(
    seed: u64,
    n_groups: usize,
    count_dist: &CountDist,
    alpha_dist: &EffectDist,
    eps_dist: &EffectDist,
    mean_of: impl Fn(u64) -> f64,
) -> Result<GroupedSample> {
    let mut groups = Vec::with_capacity(n_groups);
    for i in 0..n_groups {
        let u = i as u64;
        let n = count_dist.sample(&mut unit_rng(seed, u, tag::COUNT));
        let alpha = alpha_dist.sample(&mut unit_rng(seed, u, tag::ALPHA));
        let mean = mean_of(n);
        let mut eps_rng = unit_rng(seed, u, tag::EPS);
        let responses: Vec<f64> = (0..n)
            .map(|_| mean + alpha + eps_dist.sample(&mut eps_rng))
            .collect();
        groups.push(Group::new(format!("g{}", i + 1), responses));
    }
    GroupedSample::new(groups)
}

/// Generate a one-way sample.
pub fn gen_one_way(spec: &OneWaySpec) -> Result<GroupedSample> {
    validate_one_way(spec)?;
    gen_grouped_core(
        spec.seed,
        spec.n_groups,
        &spec.count_dist,
        &spec.alpha_dist,
        &spec.eps_dist,
        |_| spec.mu,
    )
}

/// Generate a size-dependent-mean sample. With `c2 = 0` this consumes
/// the RNG streams exactly like [`gen_one_way`] with `mu = c1`, so the
/// two produce identical datasets for identical seeds.
pub fn gen_famsize(spec: &FamsizeSpec) -> Result<GroupedSample> {
    validate_famsize(spec)?;
    gen_grouped_core(
        spec.seed,
        spec.n_groups,
        &spec.count_dist,
        &spec.alpha_dist,
        &spec.eps_dist,
        |n| spec.c1 + spec.c2 * n as f64,
    )
}

/// Generate a random-regressor sample; regressors are stored on the
/// groups.
pub fn gen_regression(spec: &RegressionSpec) -> Result<GroupedSample> {
    validate_regression(spec)?;
    let mut groups = Vec::with_capacity(spec.n_groups);
    for i in 0..spec.n_groups {
        let u = i as u64;
        let n = spec.count_dist.sample(&mut unit_rng(spec.seed, u, tag::COUNT));
        let mut x_rng = unit_rng(spec.seed, u, tag::X);
        let x: Vec<f64> = spec.x_dists.iter().map(|d| d.sample(&mut x_rng)).collect();
        let mean: f64 = x.iter().zip(&spec.gamma).map(|(xi, gi)| xi * gi).sum();
        let alpha = spec.alpha_dist.sample(&mut unit_rng(spec.seed, u, tag::ALPHA));
        let mut eps_rng = unit_rng(spec.seed, u, tag::EPS);
        let responses: Vec<f64> = (0..n)
            .map(|_| mean + alpha + spec.eps_dist.sample(&mut eps_rng))
            .collect();
        groups.push(Group::with_regressors(format!("g{}", i + 1), responses, x));
    }
    GroupedSample::new(groups)
}

/// Generation diagnostics for the crossed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossedGenDetail {
    pub data: SparseRatings,
    /// Draws that landed on an already-drawn cell (`iid_draws` only).
    pub collapsed_duplicates: usize,
    /// Extra full re-draws needed to escape an empty dataset.
    pub resample_attempts: usize,
}

/// Generate a crossed ratings grid.
pub fn gen_crossed(spec: &CrossedSpec) -> Result<SparseRatings> {
    gen_crossed_detailed(spec).map(|d| d.data)
}

/// [`gen_crossed`] with duplicate/resample diagnostics.
pub fn gen_crossed_detailed(spec: &CrossedSpec) -> Result<CrossedGenDetail> {
    validate_crossed(spec)?;
    let max_attempts: u64 = if spec.resample_empty { 64 } else { 1 };
    for attempt in 0..max_attempts {
        // Salt the seed on retries so the whole draw is fresh but still
        // a pure function of (seed, attempt).
        let seed = spec.seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (entries, collapsed) = draw_crossed_entries(spec, seed);
        if entries.is_empty() {
            continue;
        }
        let n = entries.len();
        let mut data = SparseRatings::new(spec.n_rows, spec.n_cols, entries)?;
        if spec.shuffle_arrivals {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut unit_rng(seed, 0, tag::ARRIVAL));
            data = data.with_arrival_order(order)?;
        }
        return Ok(CrossedGenDetail {
            data,
            collapsed_duplicates: collapsed,
            resample_attempts: attempt as usize,
        });
    }
    Err(Error::DegenerateDraw)
}

fn draw_crossed_entries(spec: &CrossedSpec, seed: u64) -> (Vec<RatingEntry>, usize) {
    let (r, c) = (spec.n_rows, spec.n_cols);
    let alphas: Vec<f64> = (0..r)
        .map(|i| spec.alpha_dist.sample(&mut unit_rng(seed, i as u64, tag::ALPHA)))
        .collect();
    let betas: Vec<f64> = (0..c)
        .map(|j| spec.beta_dist.sample(&mut unit_rng(seed, j as u64, tag::BETA)))
        .collect();

    // Optional extra mean structure from per-row/per-column regressors.
    let row_shift: Vec<f64> = match &spec.mean_regressors {
        Some(mr) if !mr.gamma.is_empty() => (0..r)
            .map(|i| {
                let mut rng = unit_rng(seed, i as u64, tag::X);
                mr.gamma
                    .iter()
                    .map(|g| g * Normal::new(0.0, 1.0).unwrap().sample(&mut rng))
                    .sum()
            })
            .collect(),
        _ => vec![0.0; r],
    };
    let col_shift: Vec<f64> = match &spec.mean_regressors {
        Some(mr) if !mr.eta.is_empty() => (0..c)
            .map(|j| {
                let mut rng = unit_rng(seed, j as u64, tag::COL_X);
                mr.eta
                    .iter()
                    .map(|g| g * Normal::new(0.0, 1.0).unwrap().sample(&mut rng))
                    .sum()
            })
            .collect(),
        _ => vec![0.0; c],
    };

    let cell_value = |i: usize, j: usize, eps: f64| -> f64 {
        spec.mu + alphas[i] + betas[j] + row_shift[i] + col_shift[j] + eps
    };

    match spec.mechanism {
        CellMechanism::Bernoulli => {
            let mut entries = Vec::new();
            for i in 0..r {
                let mut inc_rng = unit_rng(seed, i as u64, tag::INCLUDE);
                let mut eps_rng = unit_rng(seed, i as u64, tag::EPS);
                for j in 0..c {
                    if inc_rng.random::<f64>() < spec.density {
                        let eps = spec.eps_dist.sample(&mut eps_rng);
                        entries.push(RatingEntry::new(i, j, cell_value(i, j, eps)));
                    }
                }
            }
            (entries, 0)
        }
        CellMechanism::IidDraws { n_draws } => {
            // Keep the first-arrival position of each cell but let later
            // draws overwrite its value.
            let mut first_pos: HashMap<(usize, usize), usize> = HashMap::new();
            let mut drawn: Vec<RatingEntry> = Vec::new();
            let mut collapsed = 0usize;
            for m in 0..n_draws {
                let mut rng = unit_rng(seed, m as u64, tag::DRAW);
                let i = rng.random_range(0..r);
                let j = rng.random_range(0..c);
                let eps = spec.eps_dist.sample(&mut rng);
                let value = cell_value(i, j, eps);
                match first_pos.get(&(i, j)) {
                    Some(&pos) => {
                        collapsed += 1;
                        drawn[pos] = RatingEntry::new(i, j, value);
                    }
                    None => {
                        first_pos.insert((i, j), drawn.len());
                        drawn.push(RatingEntry::new(i, j, value));
                    }
                }
            }
            (drawn, collapsed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{self, MomentOrder};

    fn one_way_spec() -> OneWaySpec {
        OneWaySpec {
            mu: 10.0,
            sigma_a2: 4.0,
            sigma_e2: 1.0,
            n_groups: 2000,
            count_dist: CountDist::ShiftedPoisson { lambda: 4.0 },
            alpha_dist: EffectDist::normal_with_variance(4.0),
            eps_dist: EffectDist::normal_with_variance(1.0),
            seed: 20240811,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = one_way_spec();
        let a = gen_one_way(&spec).unwrap();
        let b = gen_one_way(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn smaller_run_is_a_prefix_of_a_larger_one() {
        let big = one_way_spec();
        let mut small = big.clone();
        small.n_groups = 50;
        let a = gen_one_way(&small).unwrap();
        let b = gen_one_way(&big).unwrap();
        assert_eq!(a.groups(), &b.groups()[..50]);
    }

    #[test]
    fn zero_variances_generate_constant_data() {
        let spec = OneWaySpec {
            mu: 3.25,
            sigma_a2: 0.0,
            sigma_e2: 0.0,
            n_groups: 10,
            count_dist: CountDist::UniformInt { lo: 1, hi: 4 },
            alpha_dist: EffectDist::Normal { sd: 0.0 },
            eps_dist: EffectDist::CenteredUniform { width: 0.0 },
            seed: 5,
        };
        let s = gen_one_way(&spec).unwrap();
        for g in s.groups() {
            for &y in g.responses() {
                assert_eq!(y, 3.25);
            }
        }
    }

    #[test]
    fn famsize_with_zero_slope_matches_one_way_bit_for_bit() {
        let ow = one_way_spec();
        let fs = FamsizeSpec {
            c1: ow.mu,
            c2: 0.0,
            sigma_a2: ow.sigma_a2,
            sigma_e2: ow.sigma_e2,
            n_groups: ow.n_groups,
            count_dist: ow.count_dist,
            alpha_dist: ow.alpha_dist,
            eps_dist: ow.eps_dist,
            seed: ow.seed,
        };
        assert_eq!(gen_one_way(&ow).unwrap(), gen_famsize(&fs).unwrap());
    }

    #[test]
    fn sample_moments_track_the_spec() {
        let spec = one_way_spec();
        let s = gen_one_way(&spec).unwrap();
        // Grand mean within 3 standard errors of mu: SD(grand mean) is
        // roughly sqrt(sigma_a2 * E[N^2] / (M * E[N]) + sigma_e2 / M),
        // about 0.05 here.
        let mu_hat = moments::grand_mean(&s);
        assert!((mu_hat - spec.mu).abs() < 0.15, "mu_hat = {mu_hat}");
        // Count moments near (1 + lambda, lambda).
        let cs = moments::count_summary(&s, MomentOrder::Two).unwrap();
        assert!((cs.mean - 5.0).abs() < 0.15, "count mean = {}", cs.mean);
        assert!((cs.var - 4.0).abs() < 0.45, "count var = {}", cs.var);
        // Pooled variance near sigma_a2 + sigma_e2 = 5.
        let vy = moments::pooled_variance(&s).unwrap();
        assert!((vy - 5.0).abs() < 0.5, "pooled var = {vy}");
    }

    #[test]
    fn gamma_effects_have_matching_variance() {
        let d = EffectDist::gamma_with_variance(2.0, 4.0);
        assert!((d.variance() - 4.0).abs() < 1e-12);
        let mut rng = unit_rng(1, 0, tag::ALPHA);
        let draws: Vec<f64> = (0..200_000).map(|_| d.sample(&mut rng)).collect();
        let m = moments::summarize(&draws, MomentOrder::Two).unwrap();
        assert!(m.mean.abs() < 0.05, "mean = {}", m.mean);
        assert!((m.var - 4.0).abs() < 0.2, "var = {}", m.var);
    }

    #[test]
    fn mismatched_variance_is_rejected() {
        let mut spec = one_way_spec();
        spec.alpha_dist = EffectDist::Normal { sd: 1.0 };
        let err = gen_one_way(&spec).unwrap_err();
        assert!(matches!(err, Error::BadSpec(_)));
    }

    #[test]
    fn crossed_generation_tracks_the_spec() {
        let spec = CrossedSpec {
            mu: 5.0,
            sigma_a2: 1.0,
            sigma_b2: 0.5,
            sigma_e2: 1.0,
            n_rows: 100,
            n_cols: 80,
            density: 0.1,
            mechanism: CellMechanism::Bernoulli,
            alpha_dist: EffectDist::normal_with_variance(1.0),
            beta_dist: EffectDist::normal_with_variance(0.5),
            eps_dist: EffectDist::normal_with_variance(1.0),
            shuffle_arrivals: false,
            resample_empty: false,
            mean_regressors: None,
            seed: 99,
        };
        let d = gen_crossed(&spec).unwrap();
        // Entry count near 100 * 80 * 0.1 = 800 (4 SDs ~ 107).
        let n = d.n_entries() as f64;
        assert!((n - 800.0).abs() < 110.0, "entries = {n}");
        // Pooled variance near 2.5.
        let values: Vec<f64> = d.entries().iter().map(|e| e.value).collect();
        let vy = moments::summarize(&values, MomentOrder::Two).unwrap().var;
        assert!((vy - 2.5).abs() < 0.4, "pooled var = {vy}");
        // Deterministic.
        assert_eq!(d, gen_crossed(&spec).unwrap());
    }

    #[test]
    fn crossed_shuffle_attaches_arrival_order() {
        let spec = CrossedSpec {
            mu: 0.0,
            sigma_a2: 0.25,
            sigma_b2: 0.25,
            sigma_e2: 0.25,
            n_rows: 20,
            n_cols: 20,
            density: 0.3,
            mechanism: CellMechanism::Bernoulli,
            alpha_dist: EffectDist::normal_with_variance(0.25),
            beta_dist: EffectDist::normal_with_variance(0.25),
            eps_dist: EffectDist::normal_with_variance(0.25),
            shuffle_arrivals: true,
            resample_empty: false,
            mean_regressors: None,
            seed: 7,
        };
        let d = gen_crossed(&spec).unwrap();
        let order = d.arrival_order().expect("shuffled arrivals requested");
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..d.n_entries()).collect::<Vec<_>>());
        assert_ne!(order, sorted.as_slice(), "shuffle left arrivals in place");
    }

    #[test]
    fn iid_draws_collapse_duplicates_to_the_last_value() {
        let spec = CrossedSpec {
            mu: 0.0,
            sigma_a2: 0.0,
            sigma_b2: 0.0,
            sigma_e2: 0.0,
            n_rows: 2,
            n_cols: 2,
            density: 1.0,
            mechanism: CellMechanism::IidDraws { n_draws: 64 },
            alpha_dist: EffectDist::Normal { sd: 0.0 },
            beta_dist: EffectDist::Normal { sd: 0.0 },
            eps_dist: EffectDist::Normal { sd: 0.0 },
            shuffle_arrivals: false,
            resample_empty: false,
            mean_regressors: None,
            seed: 3,
        };
        let detail = gen_crossed_detailed(&spec).unwrap();
        // 64 draws over 4 cells: essentially certain to hit all cells.
        assert_eq!(detail.data.n_entries(), 4);
        assert_eq!(detail.collapsed_duplicates, 64 - 4);
        assert_eq!(detail.resample_attempts, 0);
    }

    #[test]
    fn empty_draw_errors_or_resamples() {
        let mut spec = CrossedSpec {
            mu: 0.0,
            sigma_a2: 0.0,
            sigma_b2: 0.0,
            sigma_e2: 0.0,
            n_rows: 1,
            n_cols: 1,
            density: 1e-9,
            mechanism: CellMechanism::Bernoulli,
            alpha_dist: EffectDist::Normal { sd: 0.0 },
            beta_dist: EffectDist::Normal { sd: 0.0 },
            eps_dist: EffectDist::Normal { sd: 0.0 },
            shuffle_arrivals: false,
            resample_empty: false,
            mean_regressors: None,
            seed: 1,
        };
        let err = gen_crossed(&spec).unwrap_err();
        assert!(matches!(err, Error::DegenerateDraw));
        // With resampling enabled the call still gives up only after the
        // attempt budget, which this density will practically exhaust.
        spec.resample_empty = true;
        let err = gen_crossed(&spec).unwrap_err();
        assert!(matches!(err, Error::DegenerateDraw));
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = SimSpec::OneWay(one_way_spec());
        let text = serde_json::to_string_pretty(&spec).unwrap();
        assert!(text.contains("\"model\": \"one_way\""));
        let back: SimSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
