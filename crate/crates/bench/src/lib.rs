//! Shared dataset builders for the criterion benches.

use varcomp::{
    gen_crossed, gen_one_way, CellMechanism, CountDist, CrossedSpec, EffectDist, GroupedSample,
    OneWaySpec, SparseRatings,
};

/// One-way sample with the recovery-study parameters
/// (`mu = 10`, `sigma_a2 = 4`, `sigma_e2 = 1`, sizes `1 + Poisson(4)`).
pub fn one_way_sample(n_groups: usize, seed: u64) -> GroupedSample {
    gen_one_way(&OneWaySpec {
        mu: 10.0,
        sigma_a2: 4.0,
        sigma_e2: 1.0,
        n_groups,
        count_dist: CountDist::ShiftedPoisson { lambda: 4.0 },
        alpha_dist: EffectDist::normal_with_variance(4.0),
        eps_dist: EffectDist::normal_with_variance(1.0),
        seed,
    })
    .expect("benchmark generation succeeds")
}

/// Sparse crossed grid with the rating-study parameters
/// (`mu = 3`, `sigma_a2 = 1`, `sigma_b2 = 0.5`, `sigma_e2 = 1`).
pub fn crossed_data(n_rows: usize, n_cols: usize, density: f64, seed: u64) -> SparseRatings {
    gen_crossed(&CrossedSpec {
        mu: 3.0,
        sigma_a2: 1.0,
        sigma_b2: 0.5,
        sigma_e2: 1.0,
        n_rows,
        n_cols,
        density,
        mechanism: CellMechanism::Bernoulli,
        alpha_dist: EffectDist::normal_with_variance(1.0),
        beta_dist: EffectDist::normal_with_variance(0.5),
        eps_dist: EffectDist::normal_with_variance(1.0),
        shuffle_arrivals: false,
        resample_empty: true,
        mean_regressors: None,
        seed,
    })
    .expect("benchmark generation succeeds")
}
