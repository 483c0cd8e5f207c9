//! Thread-pool executor for independent trajectories.

use plap_core::exec::Executor;
use rayon::prelude::*;

/// Maps over items on the rayon pool; results keep input order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send,
    {
        items.into_par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}
