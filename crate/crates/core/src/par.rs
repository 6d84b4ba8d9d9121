//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the loops below run on the rayon pool; without
//! it they are plain iterators. Reductions are always split into fixed-size
//! chunks whose partial sums are combined in index order, so results do not
//! depend on the number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by ordered reductions.
pub const CHUNK: usize = 1024;

/// Loops shorter than this always run inline.
pub const SERIAL_BELOW: usize = 4096;

/// `out[i] = f(i)` for every index.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if out.len() >= SERIAL_BELOW {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
        return;
    }
    out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
}

/// Collects `f(i)` for `i in 0..n` in index order.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if n >= SERIAL_BELOW {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Calls `f(index, chunk)` on consecutive chunks of length `len`.
pub fn chunks_mut<T, F>(buf: &mut [T], len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if buf.len() >= SERIAL_BELOW {
        buf.par_chunks_mut(len).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    buf.chunks_mut(len).enumerate().for_each(|(i, c)| f(i, c));
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if n < SERIAL_BELOW {
        return (0..n.div_ceil(CHUNK))
            .map(|c| (c * CHUNK..(c * CHUNK + CHUNK).min(n)).map(&f).sum::<f64>())
            .sum();
    }
    let chunks = n.div_ceil(CHUNK);
    let partial = map(chunks, |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    });
    partial.into_iter().sum()
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.len(), |i| a[i] * b[i])
}

/// `y[i] += alpha * x[i]`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    if y.len() >= SERIAL_BELOW {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
        return;
    }
    y.iter_mut().zip(x.iter()).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Runs `f` with every parallel loop forced onto a single worker thread.
///
/// Results are bit-identical to the parallel run; this only removes
/// scheduling from the picture (used by `--deterministic`).
pub fn run_sequential<R: Send, F: FnOnce() -> R + Send>(f: F) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_sum_matches_sequential_chunks() {
        let n = 5 * CHUNK + 17;
        let v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 1e-9).collect();
        let a = sum(n, |i| v[i]);
        let b = run_sequential(|| sum(n, |i| v[i]));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn map_keeps_order() {
        assert_eq!(map(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}
