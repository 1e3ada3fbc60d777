//! Data-parallel mapping with a sequential fallback.
//!
//! Every batch loop in the crate goes through [`map_indexed`]: with the
//! `parallel` feature (default) it runs on the rayon pool, without it on a
//! plain iterator. Results are collected in index order, so output is
//! identical regardless of feature selection or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Reduces per-index `u64` count vectors by elementwise addition.
///
/// Used by the Monte Carlo estimators: per-replication counts are integers,
/// so the merged totals do not depend on reduction order.
pub fn sum_counts<F>(n: usize, len: usize, f: F) -> Vec<u64>
where
    F: Fn(usize) -> Vec<u64> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .map(&f)
            .reduce(|| vec![0u64; len], |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            })
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = vec![0u64; len];
        for i in 0..n {
            for (x, y) in acc.iter_mut().zip(f(i)) {
                *x += y;
            }
        }
        acc
    }
}
