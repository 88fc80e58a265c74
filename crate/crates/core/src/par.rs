//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the closures run on the rayon pool; without
//! it they run in order on the caller's thread. Callers draw any randomness
//! up front so the output is identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A one-thread pool gains nothing and pays a thread handoff per call.
#[cfg(feature = "parallel")]
fn single_thread() -> bool {
    rayon::current_num_threads() <= 1
}

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if single_thread() {
        return items.iter().map(f).collect();
    }
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// `true` iff `f` holds for every item. Stops early on the sequential path.
#[cfg(feature = "parallel")]
pub fn all<T, F>(items: &[T], f: F) -> bool
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    if single_thread() {
        return items.iter().all(f);
    }
    items.par_iter().all(f)
}

#[cfg(not(feature = "parallel"))]
pub fn all<T, F>(items: &[T], f: F) -> bool
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    items.iter().all(f)
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
