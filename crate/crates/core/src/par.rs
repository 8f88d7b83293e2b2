//! Data-parallel instance loops with a sequential fallback.
//!
//! Suites, finite-difference sweeps, and ring sweeps map an index range
//! through an independent closure; with the `parallel` feature (default)
//! that map runs on rayon, otherwise sequentially. Results come back in
//! index order either way, so reports are identical across both paths.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `0..n` through `f`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Maps `0..n` through `f`, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Always-sequential variant; the bench suite compares this against
/// [`map_indexed`] on the same workloads.
pub fn map_indexed_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}
