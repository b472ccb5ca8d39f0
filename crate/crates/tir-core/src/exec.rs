//! Data-parallel map helpers with a sequential fallback.
//!
//! With the default `parallel` feature the indexed maps fan out over the
//! rayon global pool; without it they run as plain loops. Results are always
//! ordered by index, so output never depends on the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to `0..n` and collects results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Forced-sequential variant, kept callable in all builds so benchmarks can
/// compare the two code paths directly.
pub fn map_indexed_sequential<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Caps the rayon pool size (no-op in sequential builds). Honors the
/// `TIR_IPW_THREADS` convention used by the CLI.
pub fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        // ignore failure: the global pool can only be built once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}
