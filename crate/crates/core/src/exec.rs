//! Execution policy for data-parallel loops.
//!
//! Every parallel helper splits work into a fixed partition and returns the
//! per-item results in index order, so reductions performed by the caller
//! are bit-identical between [`Exec::Sequential`] and [`Exec::Parallel`].

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "HARMAP_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    #[default]
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to the sequential path.
    Parallel,
}

impl Exec {
    /// Reads [`THREADS_ENV`]. Unset, unparsable or `1` means sequential.
    /// Larger values configure the global rayon pool (first call wins).
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .unwrap_or(1);
        Self::with_threads(threads)
    }

    pub fn with_threads(threads: usize) -> Self {
        if threads <= 1 {
            return Exec::Sequential;
        }
        #[cfg(feature = "parallel")]
        {
            // An already initialised global pool is fine.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
        Exec::Parallel
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f(chunk_index, chunk)` to consecutive chunks of `data`.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(k, c)| f(k, c));
            return;
        }
        data.chunks_mut(chunk)
            .enumerate()
            .for_each(|(k, c)| f(k, c));
    }

    /// Sum of `f(k)` over `0..n`, partial sums combined in index order.
    pub fn ordered_sum<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map(n, f).into_iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let f = |k: usize| ((k as f64) * 0.37).sin() / (1.0 + k as f64);
        let a = Exec::Sequential.ordered_sum(10_000, f);
        let b = Exec::Parallel.ordered_sum(10_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn chunked_mutation_visits_every_chunk() {
        let mut data = vec![0usize; 103];
        Exec::Parallel.for_each_chunk_mut(&mut data, 10, |k, c| {
            for x in c.iter_mut() {
                *x = k;
            }
        });
        assert_eq!(data[0], 0);
        assert_eq!(data[102], 10);
    }

    #[test]
    fn single_thread_means_sequential() {
        assert_eq!(Exec::with_threads(1), Exec::Sequential);
        assert_eq!(Exec::with_threads(0), Exec::Sequential);
    }
}
