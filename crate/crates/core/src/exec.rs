//! Chunked execution shared by the serial and data-parallel paths.
//!
//! Work is always split into fixed-size chunks of [`CHUNK`] points and the
//! per-chunk results are returned in chunk order. Floating-point reductions
//! folded over that vector are therefore identical whether the chunks ran
//! on one thread or many.

use std::ops::Range;

use crate::error::{Error, Result};

/// Points per chunk. Independent of the worker count.
pub const CHUNK: usize = 2048;

pub enum Executor {
    Serial,
    #[cfg(feature = "parallel")]
    Pool(rayon::ThreadPool),
}

impl Executor {
    /// A serial executor, or a pool of `workers` threads when `parallel` is set
    /// and the crate was built with the `parallel` feature.
    pub fn new(parallel: bool, workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::invalid("workers", "must be at least 1"));
        }
        if !parallel {
            return Ok(Executor::Serial);
        }
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            Ok(Executor::Pool(pool))
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Executor::Serial)
    }

    pub fn is_parallel(&self) -> bool {
        !matches!(self, Executor::Serial)
    }

    /// Maps `f` over the chunk ranges of `0..n`, results in chunk order.
    pub fn map_chunks<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> T + Sync + Send,
    {
        let chunks = n.div_ceil(CHUNK);
        let range = move |c: usize| c * CHUNK..((c + 1) * CHUNK).min(n);
        match self {
            Executor::Serial => (0..chunks).map(|c| f(range(c))).collect(),
            #[cfg(feature = "parallel")]
            Executor::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| (0..chunks).into_par_iter().map(|c| f(range(c))).collect())
            }
        }
    }

    /// Maps `f(start, chunk)` over mutable chunks of `slice`, results in chunk order.
    pub fn map_chunks_mut<E, T, F>(&self, slice: &mut [E], f: F) -> Vec<T>
    where
        E: Send,
        T: Send,
        F: Fn(usize, &mut [E]) -> T + Sync + Send,
    {
        match self {
            Executor::Serial => slice
                .chunks_mut(CHUNK)
                .enumerate()
                .map(|(c, chunk)| f(c * CHUNK, chunk))
                .collect(),
            #[cfg(feature = "parallel")]
            Executor::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| {
                    slice
                        .par_chunks_mut(CHUNK)
                        .enumerate()
                        .map(|(c, chunk)| f(c * CHUNK, chunk))
                        .collect()
                })
            }
        }
    }
}

/// Maps `f` over `items`, in parallel on the global pool when available.
/// Output order always matches input order.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
