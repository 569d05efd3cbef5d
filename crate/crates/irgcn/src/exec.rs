//! Execution strategy for embarrassingly parallel outer loops.
//!
//! [`Exec::map`] computes `f(0), …, f(n-1)` into a vector, either
//! sequentially or on a dedicated thread pool. Each index writes its own
//! slot and results are always assembled in index order, so for a pure
//! `f` the output is **bit-identical** regardless of thread count —
//! parallelism changes wall-clock time, never results.
//!
//! The `parallel` feature (on by default) provides the threaded path;
//! without it the same interface exists and every call runs
//! sequentially. Only leaf computations that share nothing — ranking
//! queries, per-gene rankings, control-experiment trials — go through
//! here; training stays sequential by design.

/// Sequential or thread-pool execution with a fixed thread count.
pub struct Exec {
    threads: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Exec {
    /// Always run on the calling thread.
    pub fn sequential() -> Self {
        Exec {
            threads: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// Run with `threads` worker threads; `0` means one per available
    /// CPU. Without the `parallel` feature every count degrades to
    /// sequential execution (the interface is identical).
    pub fn new(threads: usize) -> Self {
        let resolved = if threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            threads
        };
        #[cfg(feature = "parallel")]
        {
            if resolved > 1 {
                match rayon::ThreadPoolBuilder::new().num_threads(resolved).build() {
                    Ok(pool) => {
                        return Exec {
                            threads: resolved,
                            pool: Some(pool),
                        }
                    }
                    Err(_) => return Exec::sequential(),
                }
            }
            Exec::sequential()
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = resolved;
            Exec::sequential()
        }
    }

    /// Effective worker count (1 when running sequentially).
    pub fn threads(&self) -> usize {
        self.threads
    }

    /// `vec![f(0), f(1), …, f(n-1)]`, slot `i` computed independently
    /// and placed at index `i`.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(f).collect());
        }
        (0..n).map(f).collect()
    }
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Exec").field("threads", &self.threads).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn map_preserves_index_order() {
        let e = Exec::sequential();
        assert_eq!(e.map(5, |i| i * i), vec![0, 1, 4, 9, 16]);
        assert_eq!(e.map(0, |i| i), Vec::<usize>::new());
    }

    /// A float-heavy per-index computation must come out bit-identical
    /// under any thread count.
    #[test]
    fn parallel_results_are_bitwise_equal_to_sequential() {
        let work = |i: usize| -> f64 {
            let mut rng = Rng::derive(1234, i as u64);
            let mut acc = 0.0;
            for _ in 0..100 {
                acc += rng.uniform(-1.0, 1.0).sin_cos().0;
            }
            acc
        };
        let seq = Exec::sequential().map(64, work);
        for threads in [1, 2, 4, 8] {
            let par = Exec::new(threads).map(64, work);
            let same = seq
                .iter()
                .zip(&par)
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "results differ at {threads} threads");
        }
    }

    #[test]
    fn thread_count_reporting() {
        assert_eq!(Exec::sequential().threads(), 1);
        assert_eq!(Exec::new(1).threads(), 1);
        if cfg!(feature = "parallel") {
            assert_eq!(Exec::new(3).threads(), 3);
        } else {
            assert_eq!(Exec::new(3).threads(), 1);
        }
        assert!(Exec::new(0).threads() >= 1);
    }
}
