//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over the rayon pool.
//! Without it, or when [`set_parallel`] has switched execution off at
//! runtime, the same closures run on the calling thread. Results never
//! depend on the mode: every helper preserves element order and reductions
//! go through [`pairwise_sum`], whose tree shape depends only on length.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable parallel execution at runtime. Has no effect when the
/// crate is compiled without the `parallel` feature.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::SeqCst);
}

/// Cap the worker count of the global pool. Must run before any parallel
/// work; `1` also switches to sequential execution.
pub fn set_threads(threads: usize) -> Result<(), String> {
    if threads == 0 {
        return Err("worker count must be positive".into());
    }
    if threads == 1 {
        set_parallel(false);
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())?;
    Ok(())
}

/// True when helpers will dispatch to the thread pool.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::SeqCst)
}

/// Run `f` on each `chunk_size` chunk of `data`, passing the chunk index.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_size: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_size)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    data.chunks_mut(chunk_size)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Map `f` over `0..len` and collect in index order.
pub fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}

/// Map `f` over a slice and collect in order.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Deterministic pairwise (tree) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` over `values`, chunked so no temporary the size
/// of the input is needed. Chunk boundaries are fixed by length only.
pub fn pairwise_map_sum<T, F>(values: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Send + Sync,
{
    const CHUNK: usize = 4096;
    let n_chunks = values.len().div_ceil(CHUNK);
    let partial = map_indexed(n_chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(values.len());
        let v: Vec<f64> = values[lo..hi].iter().map(&f).collect();
        pairwise_sum(&v)
    });
    pairwise_sum(&partial)
}

/// Pairwise sum of `f(i)` for `i in 0..len`.
pub fn pairwise_index_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    const CHUNK: usize = 4096;
    let n_chunks = len.div_ceil(CHUNK);
    let partial = map_indexed(n_chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let v: Vec<f64> = (lo..hi).map(&f).collect();
        pairwise_sum(&v)
    });
    pairwise_sum(&partial)
}

/// Maximum of `f(x)` over `values` (0 for an empty slice).
pub fn max_map<T, F>(values: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Send + Sync,
{
    const CHUNK: usize = 4096;
    let n_chunks = values.len().div_ceil(CHUNK);
    let partial = map_indexed(n_chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(values.len());
        values[lo..hi].iter().map(&f).fold(0.0_f64, f64::max)
    });
    partial.into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_sum() {
        let v: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-9);
        assert_eq!(pairwise_map_sum(&v, |x| *x), pairwise_map_sum(&v, |x| *x));
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let v: Vec<f64> = (0..50_000).map(|i| (i as f64 * 0.37).cos()).collect();
        set_parallel(true);
        let a = pairwise_map_sum(&v, |x| x * x);
        set_parallel(false);
        let b = pairwise_map_sum(&v, |x| x * x);
        set_parallel(true);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
