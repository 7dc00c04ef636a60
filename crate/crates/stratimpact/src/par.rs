//! Parallel execution helpers.
//!
//! With the `parallel` feature (the default) these fan work out over rayon's
//! current thread pool; without it they are plain sequential loops with the
//! same signatures, so call sites never change. Both variants collect results
//! in input order, and callers pre-derive any per-item seeds (see [`crate::rng`]),
//! which together make the output independent of scheduling. Floating-point
//! reductions are never done with a parallel fold — map in parallel, reduce
//! sequentially over the ordered results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indices<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
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

/// Map `f` over a slice, collecting results in input order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Cap the global thread pool at `jobs` threads. Call once at startup before
/// any parallel work; later calls (or `jobs == 0`) are ignored because the
/// pool is process-global. A no-op without the `parallel` feature.
pub fn set_jobs(jobs: usize) {
    #[cfg(feature = "parallel")]
    {
        if jobs == 0 {
            return;
        }
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
    }
}
