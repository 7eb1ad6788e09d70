use rayon::prelude::*;

use super::SolverError;

/// Fans row-range work out to a fixed number of workers. One worker runs inline.
pub(crate) struct Executor {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub(crate) fn new(workers: usize) -> Result<Self, SolverError> {
        if workers == 0 {
            return Err(SolverError::InvalidParameter("workers must be at least 1".into()));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| SolverError::InvalidParameter(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { workers, pool })
    }

    pub(crate) fn workers(&self) -> usize {
        self.workers
    }

    /// Calls `f(first_row, block)` over `workers` disjoint contiguous blocks of
    /// `rows`, each row being `stride` elements wide.
    pub(crate) fn for_row_blocks<T, F>(&self, rows: &mut [T], stride: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync,
    {
        let n_rows = rows.len() / stride.max(1);
        match &self.pool {
            Some(pool) if n_rows > 1 => {
                let per = n_rows.div_ceil(self.workers);
                pool.install(|| {
                    rows.par_chunks_mut(per * stride)
                        .enumerate()
                        .for_each(|(b, block)| f(b * per, block));
                });
            }
            _ => f(0, rows),
        }
    }
}
