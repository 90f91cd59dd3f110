//! Per-item data parallelism with a sequential path.
//!
//! With the `parallel` feature off, [`Execution::Parallel`] runs sequentially.
//! Results always come back in input order.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Maps `f(index, item)` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
        }
        _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

/// Runs `f` on a pool of `jobs` threads; `None` keeps the global pool.
pub fn with_jobs<R, F>(jobs: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            return pool.install(f);
        }
    }
    let _ = jobs;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let xs: Vec<u64> = (0..500).collect();
        let seq = map(Execution::Sequential, &xs, |i, x| x * 3 + i as u64);
        let par = with_jobs(Some(3), || {
            map(Execution::Parallel, &xs, |i, x| x * 3 + i as u64)
        });
        assert_eq!(seq, par);
        assert_eq!(seq[10], 40);
    }
}
