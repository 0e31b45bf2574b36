//! Fan-out of independent work items over the rayon pool, with a sequential
//! fallback when the `parallel` feature is disabled.
//!
//! Outputs are collected in item order, so callers observe identical results
//! on both paths.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..count`, in parallel when the `parallel` feature is on.
pub(crate) fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Sequential variant, kept available under every feature set so the two
/// execution modes can be compared directly (see the benches).
pub(crate) fn map_indexed_seq<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}
