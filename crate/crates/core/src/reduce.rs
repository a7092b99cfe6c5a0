//! Order-fixed reductions.
//!
//! Parallel work is always mapped into an index-ordered buffer first and then
//! summed by a fixed binary tree, so results do not depend on the number of
//! worker threads.

use rayon::prelude::*;

const LEAF: usize = 8;

/// Pairwise (cascade) summation with a fixed split point at `len / 2`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Order-preserving parallel map.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// `sum_i weights[i] * values[i]` with pairwise summation.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    let prods: Vec<f64> = weights.iter().zip(values).map(|(w, v)| w * v).collect();
    pairwise_sum(&prods)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_small_sums() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn parallel_map_is_thread_count_independent() {
        let xs: Vec<f64> = (0..10_000)
            .map(|i| (i as f64 * 0.37).sin() * 1e-3)
            .collect();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| pairwise_sum(&par_map(&xs, |x| x.exp())))
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }
}
