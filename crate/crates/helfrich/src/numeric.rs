//! Deterministic summation helpers.
//!
//! Every reduction in this crate goes through pairwise summation with a fixed
//! association order, so results are bit-identical between runs and do not
//! depend on the rayon thread count.

use rayon::prelude::*;

const PAIRWISE_LEAF: usize = 32;
const PAR_BLOCK: usize = 4096;

/// Pairwise sum with a fixed association tree.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Parallel map-reduce over an index range with deterministic combination.
///
/// Blocks of indices are mapped in parallel, each block is pairwise-summed,
/// and the ordered block partials are pairwise-combined. The result is
/// independent of scheduling.
pub fn par_sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    if n <= PAR_BLOCK {
        let values: Vec<f64> = (0..n).map(&f).collect();
        return pairwise_sum(&values);
    }
    let blocks: Vec<f64> = (0..n.div_ceil(PAR_BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * PAR_BLOCK;
            let hi = (lo + PAR_BLOCK).min(n);
            let values: Vec<f64> = (lo..hi).map(&f).collect();
            pairwise_sum(&values)
        })
        .collect();
    pairwise_sum(&blocks)
}
