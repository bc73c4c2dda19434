//! Scheduling hook for the embarrassingly parallel per-region work.
//!
//! Every region solve is a pure function of its inputs, so an executor only has
//! to run `f(0..n)` and return the results in index order. The core ships the
//! serial executor; the std companion crate provides a thread-pool one.

use alloc::vec::Vec;

pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
