//! Deterministic execution helpers for data-parallel loops.
//!
//! Every parallel reduction in this crate is split into fixed-size chunks;
//! each chunk is reduced sequentially and the per-chunk partials are combined
//! in chunk order. Because the chunking is independent of the worker count,
//! results are bit-identical
//!
//! * across any number of threads,
//! * across repeated runs, and
//! * between the `parallel` build and the sequential fallback
//!   (`--no-default-features`), which walks the same chunks in a plain loop.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Items per work chunk. Fixed: the chunk size determines the floating-point
/// association of chunked sums, which is part of the crate's reproducibility
/// contract.
pub(crate) const CHUNK: usize = 1024;

/// Maps `f` over the chunk ranges `[start, end)` covering `0..len` and
/// collects the per-chunk results in chunk order.
pub(crate) fn map_chunks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync,
{
    let ranges: Vec<(usize, usize)> = (0..len)
        .step_by(CHUNK)
        .map(|start| (start, usize::min(start + CHUNK, len)))
        .collect();
    #[cfg(feature = "parallel")]
    {
        ranges.par_iter().map(|&(s, e)| f(s, e)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.iter().map(|&(s, e)| f(s, e)).collect()
    }
}

/// Runs `f` on consecutive `CHUNK`-sized sub-slices of `items`, passing the
/// index of the first element of each sub-slice. Slots are disjoint, so the
/// result does not depend on scheduling.
pub(crate) fn for_each_chunk_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    items
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| f(c * CHUNK, chunk));
    #[cfg(not(feature = "parallel"))]
    items
        .chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| f(c * CHUNK, chunk));
}

/// Fixed-order chunked sum of `f(i)` for `i in 0..len`.
pub(crate) fn sum_chunked<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    map_chunks(len, |s, e| (s..e).map(&f).sum::<f64>())
        .into_iter()
        .sum()
}

/// Index and value of the first maximal element; ties keep the earliest
/// index. `(0, -inf)` for an empty slice.
pub(crate) fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    (best, best_value)
}
