//! Thread-pool executor for the per-region work.

use cfm_core::Executor;
use rayon::prelude::*;

/// Runs the map on the global rayon pool. Results come back in index order,
/// so output does not depend on the thread count.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}
