//! Internal dispatch between sequential and data-parallel execution.
//!
//! Parallelism in this crate is only ever applied across independent
//! output elements; any floating-point reduction stays inside one
//! element (or one fixed-size chunk) and keeps its order. The parallel
//! path therefore produces bitwise-identical results to the sequential
//! one, and [`map_indexed`] with [`Mode::Sequential`] is the reference
//! implementation both for tests and for the non-`parallel` build.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Sequential,
    Auto,
}

/// Computes `f(0..n)` in index order, in parallel when the `parallel`
/// feature is enabled and `mode` allows it.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(mode: Mode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        Mode::Sequential => (0..n).map(f).collect(),
        Mode::Auto => (0..n).into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(_mode: Mode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
