//! Pluggable execution of independent trajectories.
//!
//! Results are always returned in input order, so reports do not depend on
//! which worker finished first.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Applies `f(index, item)` to every item and returns the results in input order.
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send,
    {
        items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}
