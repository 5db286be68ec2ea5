//! Two-factor crossed random effects on a sparse grid.
//!
//! Model: `Y_ij = mu + a_i + b_j + eps_ij` for observed cells of an
//! r x c grid (raters x items, say), with which cells are observed being
//! part of the randomness. Row i holds `N_i` ratings; column j holds
//! `M_j`.
//!
//! Conditioning on the inclusion pattern, the row sums `R_i`, the column
//! sums `C_j` and the pooled values give three moment equations:
//!
//! ```text
//! Var(R) = (nu2 + nu1^2) sa2 + nu1 sb2 + nu1 se2 + mu^2 nu2
//! Var(C) = m1 sa2 + (m2 + m1^2) sb2 + m1 se2 + mu^2 m2
//! Var(Y) = sa2 + sb2 + se2
//! ```
//!
//! where `(nu1, nu2)` are the mean/variance of the row counts and
//! `(m1, m2)` of the column counts. Solving the 3 x 3 system yields the
//! estimates; negative components are clamped and the remaining ones
//! re-solved with the total-variance equation taking priority (then the
//! row-sum equation, then the column-sum equation).

use crate::data::SparseRatings;
use crate::error::{Error, Result};
use crate::linalg;
use crate::moments::{self, MomentOrder};
use crate::sums::pairwise_sum;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::zero_snap_tol;

/// Mean and sample variance of a count vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountMoments {
    pub mean: f64,
    pub var: f64,
}

/// Estimates for the crossed model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossedEstimate {
    pub mu: f64,
    /// Row-effect variance (after clamping, if any).
    pub sigma_a2: f64,
    /// Column-effect variance (after clamping, if any).
    pub sigma_b2: f64,
    /// Noise variance (after clamping, if any).
    pub sigma_e2: f64,
    /// Solution of the moment system before clamping.
    pub raw_sigma_a2: f64,
    pub raw_sigma_b2: f64,
    pub raw_sigma_e2: f64,
    pub clamped_sigma_a2: bool,
    pub clamped_sigma_b2: bool,
    pub clamped_sigma_e2: bool,
    /// Moments of the per-row rating counts (zeros included).
    pub row_count_moments: CountMoments,
    /// Moments of the per-column rating counts (zeros included).
    pub col_count_moments: CountMoments,
}

/// Which components are still free during the clamp-and-re-solve cascade.
#[derive(Clone, Copy, PartialEq)]
enum Component {
    A,
    B,
    E,
}

/// Per-index sums along one axis, each accumulated over that index's
/// values in sorted order, the whole vector then sorted as well. Indices
/// with no entries contribute an exact zero. The result is invariant
/// under both entry reordering and index relabelling.
fn sorted_axis_sums(
    entries: &[crate::data::RatingEntry],
    size: usize,
    axis: impl Fn(&crate::data::RatingEntry) -> usize,
) -> Vec<f64> {
    let mut pairs: Vec<(usize, f64)> = entries.iter().map(|e| (axis(e), e.value)).collect();
    pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut sums = vec![0.0f64; size];
    let mut start = 0;
    while start < pairs.len() {
        let idx = pairs[start].0;
        let mut end = start;
        while end < pairs.len() && pairs[end].0 == idx {
            end += 1;
        }
        let vals: Vec<f64> = pairs[start..end].iter().map(|p| p.1).collect();
        sums[idx] = pairwise_sum(&vals);
        start = end;
    }
    sums.sort_unstable_by(f64::total_cmp);
    sums
}

/// Fit the crossed model by the three-equation moment solve.
pub fn estimate_crossed(data: &SparseRatings) -> Result<CrossedEstimate> {
    if data.n_rows() < 2 {
        return Err(Error::InsufficientData {
            what: "rows",
            needed: 2,
            got: data.n_rows(),
        });
    }
    if data.n_cols() < 2 {
        return Err(Error::InsufficientData {
            what: "columns",
            needed: 2,
            got: data.n_cols(),
        });
    }
    if data.n_entries() < 4 {
        return Err(Error::InsufficientData {
            what: "ratings",
            needed: 4,
            got: data.n_entries(),
        });
    }

    // Every moment below is computed from *canonically sorted* inputs, so
    // the estimate depends only on the labelled multiset of ratings: it is
    // bit-identical under row/column relabelling and entry reordering.
    // That is what makes a CSV round trip (which renumbers labels by first
    // appearance and may reorder entries) reproduce the in-memory estimate
    // exactly.
    let n = data.n_entries() as f64;
    let mut values: Vec<f64> = data.entries().iter().map(|e| e.value).collect();
    values.sort_unstable_by(f64::total_cmp);
    let mu = pairwise_sum(&values) / n;

    let row_sums = sorted_axis_sums(data.entries(), data.n_rows(), |e| e.row);
    let col_sums = sorted_axis_sums(data.entries(), data.n_cols(), |e| e.col);

    let mut row_counts: Vec<f64> = data.row_counts().iter().map(|&c| c as f64).collect();
    let mut col_counts: Vec<f64> = data.col_counts().iter().map(|&c| c as f64).collect();
    row_counts.sort_unstable_by(f64::total_cmp);
    col_counts.sort_unstable_by(f64::total_cmp);
    let rc = moments::summarize(&row_counts, MomentOrder::Two)?;
    let cc = moments::summarize(&col_counts, MomentOrder::Two)?;
    let (nu1, nu2) = (rc.mean, rc.var);
    let (m1, m2) = (cc.mean, cc.var);

    let var_r = moments::summarize(&row_sums, MomentOrder::Two)?.var;
    let var_c = moments::summarize(&col_sums, MomentOrder::Two)?.var;
    let var_y = moments::summarize(&values, MomentOrder::Two)?.var;

    // Equation rows: [row-sum, column-sum, total-variance].
    let eq_rows = [
        [nu2 + nu1 * nu1, nu1, nu1],
        [m1, m2 + m1 * m1, m1],
        [1.0, 1.0, 1.0],
    ];
    let rhs_full = [
        var_r - mu * mu * nu2,
        var_c - mu * mu * m2,
        var_y,
    ];

    let flat: Vec<f64> = eq_rows.iter().flatten().copied().collect();
    let (raw, _) = linalg::solve_equilibrated(&flat, 3, &rhs_full)?;
    let (raw_a, raw_b, raw_e) = (raw[0], raw[1], raw[2]);

    // Clamp-and-re-solve cascade.
    let tol = zero_snap_tol(var_y);
    let mut value = [raw_a, raw_b, raw_e];
    let mut clamped = [false, false, false];
    let mut free = vec![Component::A, Component::B, Component::E];
    loop {
        let mut any_clamped = false;
        free.retain(|&comp| {
            let k = comp as usize;
            if value[k] < -tol {
                clamped[k] = true;
                value[k] = 0.0;
                any_clamped = true;
                false
            } else {
                if value[k] < 0.0 {
                    // Rounding noise: zero it, but keep the component in
                    // the re-solve set — a later reduced system may push
                    // it genuinely negative.
                    value[k] = 0.0;
                }
                true
            }
        });
        if !any_clamped || free.is_empty() {
            break;
        }
        // Pick equations for the reduced system: total variance first,
        // then the row-sum equation when sigma_a2 is still free, then the
        // column-sum equation.
        let eq_idx: Vec<usize> = match free.len() {
            1 => vec![2],
            2 => {
                if free.contains(&Component::A) {
                    vec![2, 0]
                } else {
                    vec![2, 1]
                }
            }
            _ => vec![2, 0, 1],
        };
        let k = free.len();
        let mut sub = vec![0.0f64; k * k];
        let mut sub_rhs = vec![0.0f64; k];
        for (ei, &eq) in eq_idx.iter().enumerate() {
            for (vi, &comp) in free.iter().enumerate() {
                sub[ei * k + vi] = eq_rows[eq][comp as usize];
            }
            sub_rhs[ei] = rhs_full[eq];
        }
        let (sol, _) = linalg::solve_equilibrated(&sub, k, &sub_rhs)?;
        for (vi, &comp) in free.iter().enumerate() {
            value[comp as usize] = sol[vi];
        }
    }

    Ok(CrossedEstimate {
        mu,
        sigma_a2: value[0],
        sigma_b2: value[1],
        sigma_e2: value[2],
        raw_sigma_a2: raw_a,
        raw_sigma_b2: raw_b,
        raw_sigma_e2: raw_e,
        clamped_sigma_a2: clamped[0],
        clamped_sigma_b2: clamped[1],
        clamped_sigma_e2: clamped[2],
        row_count_moments: CountMoments {
            mean: nu1,
            var: nu2,
        },
        col_count_moments: CountMoments {
            mean: m1,
            var: m2,
        },
    })
}

/// Options for [`overlap_distribution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapOptions {
    /// Row pairs beyond this budget are sampled instead of enumerated.
    pub max_pairs: usize,
    /// Seed for the pair sampler (only used when sampling).
    pub seed: u64,
}

impl Default for OverlapOptions {
    fn default() -> Self {
        OverlapOptions {
            max_pairs: 100_000,
            seed: 0,
        }
    }
}

/// Distribution of the number of common columns shared by two rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapDistribution {
    /// `(t, probability)` pairs sorted by `t`; probabilities sum to one.
    pub support: Vec<(usize, f64)>,
    /// Mean number of shared columns per row pair.
    pub mean_t: f64,
    /// Row pairs actually evaluated.
    pub pairs_evaluated: usize,
    /// Whether every pair was enumerated (as opposed to sampled).
    pub exhaustive: bool,
    /// The evaluated pairs, kept so covariance diagnostics can reuse the
    /// exact same sample.
    #[serde(skip)]
    pairs: Vec<(usize, usize)>,
}

impl OverlapDistribution {
    /// Row pairs that went into the distribution.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// Distribution of the common-column count `T` between two distinct rows.
///
/// Two rows that rate many of the same columns share that much more
/// column-effect noise; the mean of `T` calibrates how strongly row sums
/// covary. All `r (r - 1) / 2` pairs are enumerated when the budget
/// allows, otherwise `max_pairs` pairs are sampled uniformly (with
/// replacement) from a seeded generator.
pub fn overlap_distribution(
    data: &SparseRatings,
    opts: &OverlapOptions,
) -> Result<OverlapDistribution> {
    let r = data.n_rows();
    if r < 2 {
        return Err(Error::InsufficientData {
            what: "rows",
            needed: 2,
            got: r,
        });
    }
    if opts.max_pairs == 0 {
        return Err(Error::InvalidOptions("max_pairs must be at least 1".into()));
    }

    // Sorted column lists per row; overlap by sorted merge.
    let mut row_cols: Vec<Vec<u32>> = vec![Vec::new(); r];
    for e in data.entries() {
        row_cols[e.row].push(e.col as u32);
    }
    for cols in &mut row_cols {
        cols.sort_unstable();
    }
    let overlap = |i: usize, j: usize| -> usize {
        let (a, b) = (&row_cols[i], &row_cols[j]);
        let (mut u, mut v, mut t) = (0usize, 0usize, 0usize);
        while u < a.len() && v < b.len() {
            match a[u].cmp(&b[v]) {
                std::cmp::Ordering::Less => u += 1,
                std::cmp::Ordering::Greater => v += 1,
                std::cmp::Ordering::Equal => {
                    t += 1;
                    u += 1;
                    v += 1;
                }
            }
        }
        t
    };

    let total_pairs = (r as u128) * (r as u128 - 1) / 2;
    let exhaustive = total_pairs <= opts.max_pairs as u128;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if exhaustive {
        pairs.reserve(total_pairs as usize);
        for i in 0..r {
            for j in i + 1..r {
                pairs.push((i, j));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        pairs.reserve(opts.max_pairs);
        for _ in 0..opts.max_pairs {
            let i = rng.random_range(0..r);
            let mut j = rng.random_range(0..r - 1);
            if j >= i {
                j += 1;
            }
            pairs.push((i.min(j), i.max(j)));
        }
    }

    let mut hist: std::collections::BTreeMap<usize, u64> = std::collections::BTreeMap::new();
    for &(i, j) in &pairs {
        *hist.entry(overlap(i, j)).or_insert(0) += 1;
    }
    let total = pairs.len() as f64;
    let mut weighted: u128 = 0;
    let support: Vec<(usize, f64)> = hist
        .iter()
        .map(|(&t, &count)| {
            weighted += t as u128 * count as u128;
            (t, count as f64 / total)
        })
        .collect();
    let mean_t = weighted as f64 / total;

    Ok(OverlapDistribution {
        support,
        mean_t,
        pairs_evaluated: pairs.len(),
        exhaustive,
        pairs,
    })
}

/// Model-implied versus empirical covariance of row sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowCovDiagnostic {
    /// `mean_t * sigma_b2`: per the model, two rows covary only through
    /// the column effects of their shared columns.
    pub model_cov: f64,
    /// Sample covariance of the row-sum pairs that went into the overlap
    /// distribution (NaN when fewer than two pairs were evaluated).
    pub empirical_cov: f64,
}

/// Compare the model-implied row-sum covariance against the data.
pub fn row_cov_diagnostic(
    est: &CrossedEstimate,
    overlap: &OverlapDistribution,
    data: &SparseRatings,
) -> RowCovDiagnostic {
    let model_cov = overlap.mean_t * est.sigma_b2;

    let mut row_sums = vec![0.0f64; data.n_rows()];
    for e in data.entries() {
        row_sums[e.row] += e.value;
    }
    let pairs = overlap.pairs();
    let p = pairs.len();
    let empirical_cov = if p < 2 {
        f64::NAN
    } else {
        let xs: Vec<f64> = pairs.iter().map(|&(i, _)| row_sums[i]).collect();
        let ys: Vec<f64> = pairs.iter().map(|&(_, j)| row_sums[j]).collect();
        let xbar = pairwise_sum(&xs) / p as f64;
        let ybar = pairwise_sum(&ys) / p as f64;
        let cross: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (x - xbar) * (y - ybar))
            .collect();
        pairwise_sum(&cross) / (p as f64 - 1.0)
    };

    RowCovDiagnostic {
        model_cov,
        empirical_cov,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RatingEntry;

    #[test]
    fn estimate_is_invariant_under_relabelling_and_reordering() {
        // An awkward irrational-ish value set where summation order
        // genuinely moves the last bits if not canonicalised.
        let cells: Vec<(usize, usize, f64)> = (0..7)
            .flat_map(|i| (0..5).map(move |j| (i, j, ((i * 5 + j) as f64).sqrt() * 3.7 - 4.1)))
            .filter(|&(i, j, _)| (i + 2 * j) % 4 != 1)
            .collect();
        let base = ratings(7, 5, &cells);

        // Relabel rows and columns by fixed permutations and reverse the
        // entry order.
        let row_map = [3usize, 0, 6, 2, 5, 1, 4];
        let col_map = [4usize, 2, 0, 3, 1];
        let mut permuted: Vec<(usize, usize, f64)> = cells
            .iter()
            .map(|&(i, j, v)| (row_map[i], col_map[j], v))
            .collect();
        permuted.reverse();
        let moved = ratings(7, 5, &permuted);

        let a = estimate_crossed(&base).unwrap();
        let b = estimate_crossed(&moved).unwrap();
        assert_eq!(a.mu.to_bits(), b.mu.to_bits());
        assert_eq!(a.sigma_a2.to_bits(), b.sigma_a2.to_bits());
        assert_eq!(a.sigma_b2.to_bits(), b.sigma_b2.to_bits());
        assert_eq!(a.sigma_e2.to_bits(), b.sigma_e2.to_bits());
        assert_eq!(a.raw_sigma_a2.to_bits(), b.raw_sigma_a2.to_bits());
    }

    fn ratings(n_rows: usize, n_cols: usize, cells: &[(usize, usize, f64)]) -> SparseRatings {
        SparseRatings::new(
            n_rows,
            n_cols,
            cells
                .iter()
                .map(|&(i, j, v)| RatingEntry::new(i, j, v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn dense_two_by_two_clamping_cascade() {
        // Values [[0, 0], [2, 2]]: the raw solve gives (8/3, -4/3, 0);
        // clamping the column effect re-solves (a, e) to (8/3, -4/3)
        // again, so the noise clamps too and the row variance absorbs the
        // total: final (4/3, 0, 0).
        let d = ratings(
            2,
            2,
            &[(0, 0, 0.0), (0, 1, 0.0), (1, 0, 2.0), (1, 1, 2.0)],
        );
        let est = estimate_crossed(&d).unwrap();
        assert!((est.mu - 1.0).abs() < 1e-15);
        assert!((est.raw_sigma_a2 - 8.0 / 3.0).abs() < 1e-12);
        assert!((est.raw_sigma_b2 + 4.0 / 3.0).abs() < 1e-12);
        assert!(est.raw_sigma_e2.abs() < 1e-12);
        assert!((est.sigma_a2 - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(est.sigma_b2, 0.0);
        assert_eq!(est.sigma_e2, 0.0);
        assert!(est.clamped_sigma_b2);
        assert!(est.clamped_sigma_e2);
        assert!(!est.clamped_sigma_a2);
        assert_eq!(est.row_count_moments.mean, 2.0);
        assert_eq!(est.row_count_moments.var, 0.0);
        assert_eq!(est.col_count_moments.mean, 2.0);
    }

    #[test]
    fn constant_values_give_zero_components() {
        let d = ratings(
            2,
            3,
            &[
                (0, 0, 7.0),
                (0, 1, 7.0),
                (1, 1, 7.0),
                (1, 2, 7.0),
            ],
        );
        let est = estimate_crossed(&d).unwrap();
        assert_eq!(est.mu, 7.0);
        assert_eq!(est.sigma_a2, 0.0);
        assert_eq!(est.sigma_b2, 0.0);
        assert_eq!(est.sigma_e2, 0.0);
        assert!(!est.clamped_sigma_a2 && !est.clamped_sigma_b2 && !est.clamped_sigma_e2);
    }

    #[test]
    fn empty_rows_count_as_zero() {
        let d = ratings(
            3,
            3,
            &[
                (0, 0, 1.0),
                (0, 1, 2.0),
                (2, 1, 3.0),
                (2, 2, 4.0),
            ],
        );
        let est = estimate_crossed(&d).unwrap();
        // Row counts are [2, 0, 2]: mean 4/3, sample variance 4/3.
        assert!((est.row_count_moments.mean - 4.0 / 3.0).abs() < 1e-15);
        assert!((est.row_count_moments.var - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_rating_rows_and_columns_are_singular() {
        // Every row and column holds exactly one rating: the three
        // equations collapse onto each other.
        let d = ratings(
            2,
            2,
            &[(0, 0, 1.0), (1, 1, 2.0)],
        );
        let err = estimate_crossed(&d).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { .. }));

        let d = ratings(
            4,
            4,
            &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0), (3, 3, 4.0)],
        );
        let err = estimate_crossed(&d).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn moment_equations_reproduced_by_raw_solution() {
        // Unclamped fits must reproduce the three sample moments.
        let d = ratings(
            3,
            3,
            &[
                (0, 0, 5.0),
                (0, 1, 3.0),
                (0, 2, 4.0),
                (1, 0, 2.0),
                (1, 1, 6.0),
                (2, 1, 1.0),
                (2, 2, 7.0),
            ],
        );
        let est = estimate_crossed(&d).unwrap();
        let (a, b, e) = (est.raw_sigma_a2, est.raw_sigma_b2, est.raw_sigma_e2);
        let (nu1, nu2) = (est.row_count_moments.mean, est.row_count_moments.var);
        let (m1, m2) = (est.col_count_moments.mean, est.col_count_moments.var);

        let row_sums = [12.0, 8.0, 8.0];
        let col_sums = [7.0, 10.0, 11.0];
        let values = [5.0, 3.0, 4.0, 2.0, 6.0, 1.0, 7.0];
        let var = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
        };
        let lhs_r = (nu2 + nu1 * nu1) * a + nu1 * b + nu1 * e + est.mu * est.mu * nu2;
        let lhs_c = m1 * a + (m2 + m1 * m1) * b + m1 * e + est.mu * est.mu * m2;
        let lhs_y = a + b + e;
        assert!((lhs_r - var(&row_sums)).abs() < 1e-10);
        assert!((lhs_c - var(&col_sums)).abs() < 1e-10);
        assert!((lhs_y - var(&values)).abs() < 1e-10);
    }

    #[test]
    fn overlap_hand_example() {
        // Rows rate columns {1,2}, {2,3}, {1,2,3} (1-based): overlaps are
        // |{2}| = 1, |{1,2}| = 2, |{2,3}| = 2 -> P(T=1) = 1/3,
        // P(T=2) = 2/3, mean 5/3.
        let d = ratings(
            3,
            3,
            &[
                (0, 0, 1.0),
                (0, 1, 1.0),
                (1, 1, 1.0),
                (1, 2, 1.0),
                (2, 0, 1.0),
                (2, 1, 1.0),
                (2, 2, 1.0),
            ],
        );
        let ov = overlap_distribution(&d, &OverlapOptions::default()).unwrap();
        assert!(ov.exhaustive);
        assert_eq!(ov.pairs_evaluated, 3);
        assert_eq!(ov.support.len(), 2);
        assert_eq!(ov.support[0].0, 1);
        assert!((ov.support[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ov.support[1].0, 2);
        assert!((ov.support[1].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((ov.mean_t - 5.0 / 3.0).abs() < 1e-15);
        let total: f64 = ov.support.iter().map(|&(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_point_masses() {
        // Identical rows -> point mass at the common size; disjoint rows
        // -> point mass at zero.
        let d = ratings(
            2,
            3,
            &[
                (0, 0, 1.0),
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 0, 1.0),
                (1, 1, 1.0),
                (1, 2, 1.0),
            ],
        );
        let ov = overlap_distribution(&d, &OverlapOptions::default()).unwrap();
        assert_eq!(ov.support, vec![(3, 1.0)]);
        assert_eq!(ov.mean_t, 3.0);

        let d = ratings(2, 4, &[(0, 0, 1.0), (0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)]);
        let ov = overlap_distribution(&d, &OverlapOptions::default()).unwrap();
        assert_eq!(ov.support, vec![(0, 1.0)]);
        assert_eq!(ov.mean_t, 0.0);
    }

    #[test]
    fn sampled_overlap_approximates_exhaustive() {
        // A grid with enough rows that a tight budget forces sampling.
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..60usize {
            for j in 0..5usize {
                if (i + j) % 2 == 0 {
                    cells.push((i, (i + j) % 10, (i * j) as f64));
                }
            }
        }
        let d = ratings(60, 10, &cells);
        let exact = overlap_distribution(&d, &OverlapOptions::default()).unwrap();
        assert!(exact.exhaustive);
        let sampled = overlap_distribution(
            &d,
            &OverlapOptions {
                max_pairs: 500,
                seed: 42,
            },
        )
        .unwrap();
        assert!(!sampled.exhaustive);
        assert_eq!(sampled.pairs_evaluated, 500);
        assert!((sampled.mean_t - exact.mean_t).abs() < 0.25);
        // Deterministic under the same seed.
        let again = overlap_distribution(
            &d,
            &OverlapOptions {
                max_pairs: 500,
                seed: 42,
            },
        )
        .unwrap();
        assert_eq!(sampled, again);
    }

    #[test]
    fn row_cov_diagnostic_zero_when_no_column_effect() {
        let d = ratings(
            3,
            3,
            &[
                (0, 0, 1.0),
                (0, 1, 2.0),
                (1, 1, 3.0),
                (1, 2, 4.0),
                (2, 0, 5.0),
                (2, 2, 6.0),
            ],
        );
        let est_zero_b = CrossedEstimate {
            mu: 0.0,
            sigma_a2: 1.0,
            sigma_b2: 0.0,
            sigma_e2: 1.0,
            raw_sigma_a2: 1.0,
            raw_sigma_b2: 0.0,
            raw_sigma_e2: 1.0,
            clamped_sigma_a2: false,
            clamped_sigma_b2: false,
            clamped_sigma_e2: false,
            row_count_moments: CountMoments { mean: 2.0, var: 0.0 },
            col_count_moments: CountMoments { mean: 2.0, var: 0.0 },
        };
        let ov = overlap_distribution(&d, &OverlapOptions::default()).unwrap();
        let diag = row_cov_diagnostic(&est_zero_b, &ov, &d);
        assert_eq!(diag.model_cov, 0.0);
        assert!(diag.empirical_cov.is_finite());
    }
}
