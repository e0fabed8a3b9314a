//! Data-parallel map with a sequential fallback.
//!
//! Compiled with the default `parallel` feature, independent work items
//! (acquisition restarts, benchmark repeats) fan out over rayon. Without
//! it the same code runs on one thread. Results are collected by index,
//! so both modes produce identical output for pure functions.

/// Applies `f` to `0..n` and returns results in index order.
#[cfg(feature = "parallel")]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Applies `f` to `0..n` and returns results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Single-threaded variant, independent of the feature flag.
///
/// Used by benchmarks to compare against `map_collect`.
pub fn map_collect_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
