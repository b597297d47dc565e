//! Data-parallel helpers with a sequential fallback.
//!
//! Every enumeration in the crate goes through [`Exec`] so the same code
//! runs single-threaded when the `parallel` feature is off or when the caller
//! asks for it (the benchmarks compare both).

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether work is actually spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Smallest index in `range` satisfying `pred`.
    pub fn find_first<F>(self, range: Range<usize>, pred: F) -> Option<usize>
    where
        F: Fn(usize) -> bool + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().find_first(|&i| pred(i));
        }
        range.into_iter().find(|&i| pred(i))
    }

    /// [`Exec::find_first`] with per-worker state built by `init`.
    pub fn find_first_with<S, I, F>(self, range: Range<usize>, init: I, pred: F) -> Option<usize>
    where
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, usize) -> bool + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range
                .into_par_iter()
                .map_init(&init, |s, i| (i, pred(s, i)))
                .find_first(|&(_, hit)| hit)
                .map(|(i, _)| i);
        }
        let mut s = init();
        range.into_iter().find(|&i| pred(&mut s, i))
    }

    /// `f` applied to every index, results in index order.
    pub fn map_range<T, F>(self, range: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return range.into_par_iter().map(f).collect();
        }
        range.map(f).collect()
    }

    /// `f` applied to every item, results in input order.
    pub fn map_slice<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}
