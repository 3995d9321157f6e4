//! Order-preserving parallel map over a job list.

/// Applies `f` to every job and returns results in job order.
///
/// `threads == 0` uses the global pool, `threads == 1` runs inline. Without
/// the `parallel` feature everything runs inline.
#[cfg(feature = "parallel")]
pub(crate) fn map_jobs<J, T, F>(threads: usize, jobs: Vec<J>, f: F) -> Vec<T>
where
    J: Send,
    T: Send,
    F: Fn(J) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if threads == 1 || jobs.len() <= 1 {
        return jobs.into_iter().map(f).collect();
    }
    if threads == 0 {
        return jobs.into_par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| jobs.into_par_iter().map(&f).collect()),
        Err(_) => jobs.into_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_jobs<J, T, F>(_threads: usize, jobs: Vec<J>, f: F) -> Vec<T>
where
    F: Fn(J) -> T,
{
    jobs.into_iter().map(f).collect()
}
