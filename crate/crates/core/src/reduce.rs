//! Reproducible summation.
//!
//! Every total in the crate is formed by first producing the terms in a
//! canonical order (possibly in parallel, but collected by index) and then
//! adding them with a fixed binary tree. The result therefore does not depend
//! on the number of worker threads.

use rayon::prelude::*;

const LEAF: usize = 8;

/// Sums `terms` with a fixed pairwise tree.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    if terms.len() <= LEAF {
        let mut acc = 0.0;
        for t in terms {
            acc += t;
        }
        return acc;
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Evaluates `f(i)` for `i in 0..n` in parallel and combines the values with
/// [`pairwise_sum`].
pub fn par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let terms: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    pairwise_sum(&terms)
}
