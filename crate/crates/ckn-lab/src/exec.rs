//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature the [`Parallelism::Rayon`] policy dispatches
//! to rayon; without it every policy runs sequentially. Results are always
//! returned in input order, so outputs do not depend on the policy.

use std::sync::atomic::{AtomicU8, Ordering};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Rayon,
}

static POLICY: AtomicU8 = AtomicU8::new(1);

/// Process-wide policy used by the library's internal maps.
pub fn policy() -> Parallelism {
    match POLICY.load(Ordering::Relaxed) {
        0 => Parallelism::Sequential,
        _ => Parallelism::Rayon,
    }
}

pub fn set_policy(p: Parallelism) {
    POLICY.store(
        match p {
            Parallelism::Sequential => 0,
            Parallelism::Rayon => 1,
        },
        Ordering::Relaxed,
    );
}

/// True when the crate was built with rayon support.
pub const fn rayon_available() -> bool {
    cfg!(feature = "parallel")
}

pub fn map_range_with<R, F>(p: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if p == Parallelism::Rayon {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = p;
    (0..n).map(f).collect()
}

pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    map_range_with(policy(), n, f)
}

pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_range(items.len(), |i| f(&items[i]))
}
