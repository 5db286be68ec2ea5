//! Accurate summation helpers.
//!
//! Moment estimates feed linear solves whose conditioning is already
//! delicate, so sums over large inputs use pairwise (cascade) summation:
//! error grows like O(log n) rather than O(n) for the naive loop, which
//! keeps million-element moment checks stable to ~1e-12 relative error.

/// Below this length a straight loop is faster and accurate enough.
const PAIRWISE_BASE: usize = 64;

/// Pairwise sum of a slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise sum of `f(x)` over a slice without materialising the mapped
/// values.
pub fn pairwise_map_sum<F>(xs: &[f64], f: &F) -> f64
where
    F: Fn(f64) -> f64,
{
    if xs.len() <= PAIRWISE_BASE {
        return xs.iter().map(|&x| f(x)).sum();
    }
    let mid = xs.len() / 2;
    pairwise_map_sum(&xs[..mid], f) + pairwise_map_sum(&xs[mid..], f)
}

/// Arithmetic mean via pairwise summation. Returns NaN on empty input.
pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 3.5, -1.25];
        assert_eq!(pairwise_sum(&xs), 5.25);
        assert_eq!(mean(&xs), 5.25 / 4.0);
    }

    #[test]
    fn large_alternating_sum_is_stable() {
        // 1e6 copies of (1e8 + 0.5, -1e8): exact sum is 5e5.
        let mut xs = Vec::with_capacity(2_000_000);
        for _ in 0..1_000_000 {
            xs.push(1.0e8 + 0.5);
            xs.push(-1.0e8);
        }
        let s = pairwise_sum(&xs);
        assert!((s - 5.0e5).abs() / 5.0e5 < 1e-12, "got {s}");
    }

    #[test]
    fn map_sum_agrees_with_materialised_sum() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64 * 0.25 - 7.0).collect();
        let mapped: Vec<f64> = xs.iter().map(|&x| (x - 3.0) * (x - 3.0)).collect();
        let a = pairwise_map_sum(&xs, &|x| (x - 3.0) * (x - 3.0));
        let b = pairwise_sum(&mapped);
        assert_eq!(a, b);
    }
}
