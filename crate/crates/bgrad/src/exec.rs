//! Deterministic fan-out over independent work items.
//!
//! `map_indexed` is the single parallelism point of the crate: results are
//! collected into a `Vec` in index order and reduced sequentially by the
//! caller, so the emitted numbers are bit-identical for any worker count
//! (and for the sequential fallback built without the `parallel` feature).

/// Map `f` over `0..n`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..n).map(f).collect()
}

/// Sequential reference implementation, always available (used by the
/// benchmark suite to compare against the data-parallel path).
pub fn map_indexed_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

/// Run `f` on a dedicated pool with `workers` threads (parallel builds), or
/// directly (sequential builds). Used by the determinism checks.
#[cfg(feature = "parallel")]
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<T: Send>(_workers: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_elementwise() {
        let f = |i: u64| (i as f64).sin() * (i as f64 + 0.5).sqrt();
        let par = map_indexed(1000, f);
        let seq = map_indexed_seq(1000, f);
        assert_eq!(par, seq);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let run = || map_indexed(257, |i| 1.0f64 / (i as f64 + 1.0));
        let one = with_workers(1, run);
        let four = with_workers(4, run);
        assert_eq!(one, four);
    }
}
