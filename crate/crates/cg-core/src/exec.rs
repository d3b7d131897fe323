//! Chunked execution of Monte-Carlo work.
//!
//! Work of size `n` is split into fixed-size chunks; chunk `k` always covers
//! the same items and owns RNG substream `k`, so the merged result does not
//! depend on the number of worker threads. With the `parallel` feature the
//! chunks run on rayon; without it they run in order on the current thread.
//! Both paths produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default number of items per chunk.
pub const DEFAULT_CHUNK: usize = 8192;

/// Chunk layout for `n` items: yields `(chunk_index, start, count)`.
pub fn chunk_layout(n: usize, chunk: usize) -> Vec<(usize, usize, usize)> {
    assert!(chunk > 0);
    let mut out = Vec::with_capacity(n.div_ceil(chunk));
    let mut start = 0usize;
    let mut k = 0usize;
    while start < n {
        let count = chunk.min(n - start);
        out.push((k, start, count));
        start += count;
        k += 1;
    }
    out
}

/// Maps `f` over the chunk layout, parallel when the `parallel` feature is
/// enabled. Results come back in chunk order.
pub fn map_chunks<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync,
{
    let layout = chunk_layout(n, chunk);
    #[cfg(feature = "parallel")]
    {
        layout.into_par_iter().map(|(k, _, c)| f(k, c)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        layout.into_iter().map(|(k, _, c)| f(k, c)).collect()
    }
}

/// Sequential twin of [`map_chunks`], available regardless of features; used
/// as the reference path in benchmarks and determinism tests.
pub fn map_chunks_seq<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    F: Fn(usize, usize) -> T,
{
    chunk_layout(n, chunk)
        .into_iter()
        .map(|(k, _, c)| f(k, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_covers_everything_once() {
        let layout = chunk_layout(10_001, 4096);
        assert_eq!(layout.len(), 3);
        assert_eq!(layout[2], (2, 8192, 1809));
        let total: usize = layout.iter().map(|&(_, _, c)| c).sum();
        assert_eq!(total, 10_001);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let a = map_chunks(50_000, 1024, |k, c| (k * 31 + c) as u64);
        let b = map_chunks_seq(50_000, 1024, |k, c| (k * 31 + c) as u64);
        assert_eq!(a, b);
    }
}
