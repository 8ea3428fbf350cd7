//! Running independent replicates, optionally across worker threads.

use std::ops::Range;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{MultiStats, RunningStats};

/// How per-replicate values are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Values are folded in replicate order: bitwise identical for any worker count.
    #[default]
    Sequential,
    /// Tree reduction across workers: identical up to floating-point reassociation.
    Parallel,
}

/// A mergeable summary of per-replicate values.
pub trait Accumulator: Default + Send {
    type Item: Send;
    fn push(&mut self, item: &Self::Item);
    fn merge(&mut self, other: Self);
}

impl Accumulator for RunningStats {
    type Item = f64;
    fn push(&mut self, item: &f64) {
        RunningStats::push(self, *item);
    }
    fn merge(&mut self, other: Self) {
        RunningStats::merge(self, &other);
    }
}

impl Accumulator for MultiStats {
    type Item = Vec<f64>;
    fn push(&mut self, item: &Vec<f64>) {
        MultiStats::push(self, item);
    }
    fn merge(&mut self, other: Self) {
        MultiStats::merge(self, &other);
    }
}

/// Keeps every value, in replicate order.
#[derive(Debug, Clone)]
pub struct Collect<T>(pub Vec<T>);

impl<T> Default for Collect<T> {
    fn default() -> Self {
        Collect(Vec::new())
    }
}

impl<T: Clone + Send> Accumulator for Collect<T> {
    type Item = T;
    fn push(&mut self, item: &T) {
        self.0.push(item.clone());
    }
    fn merge(&mut self, mut other: Self) {
        self.0.append(&mut other.0);
    }
}

#[derive(Debug)]
pub struct Outcome<A> {
    pub acc: A,
    pub completed: u64,
    pub partial: bool,
}

#[derive(Debug, Clone)]
pub struct Replicator {
    workers: usize,
    reduction: Reduction,
    cancel: Option<Arc<AtomicBool>>,
}

impl Default for Replicator {
    fn default() -> Self {
        Self::sequential()
    }
}

impl Replicator {
    pub fn sequential() -> Self {
        Self { workers: 1, reduction: Reduction::Sequential, cancel: None }
    }

    pub fn new(workers: usize, reduction: Reduction) -> Result<Self> {
        if workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(Self { workers, reduction, cancel: None })
    }

    /// Replicates not yet started when the flag is raised are skipped and the
    /// outcome is marked partial.
    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }

    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    /// Runs `body(scratch, index)` for every index in `range`. `init` builds the
    /// per-worker scratch space.
    pub fn run<A, S, I, F>(&self, range: Range<u64>, init: I, body: F) -> Result<Outcome<A>>
    where
        A: Accumulator,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, u64) -> A::Item + Sync + Send,
    {
        let total = range.end.saturating_sub(range.start);
        if self.workers == 1 {
            let mut acc = A::default();
            let mut scratch = init();
            let mut completed = 0;
            for i in range {
                if self.cancelled() {
                    break;
                }
                acc.push(&body(&mut scratch, i));
                completed += 1;
            }
            return Ok(Outcome { acc, completed, partial: completed < total });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        let step = |s: &mut S, i: u64| if self.cancelled() { None } else { Some(body(s, i)) };
        let (acc, completed) = pool.install(|| match self.reduction {
            Reduction::Sequential => {
                let items: Vec<Option<A::Item>> =
                    range.into_par_iter().map_init(&init, step).collect();
                let mut acc = A::default();
                let mut completed = 0;
                for item in items.iter().flatten() {
                    acc.push(item);
                    completed += 1;
                }
                (acc, completed)
            }
            Reduction::Parallel => range
                .into_par_iter()
                .map_init(&init, step)
                .fold(
                    || (A::default(), 0u64),
                    |(mut acc, c), item| match item {
                        Some(v) => {
                            acc.push(&v);
                            (acc, c + 1)
                        }
                        None => (acc, c),
                    },
                )
                .reduce(
                    || (A::default(), 0u64),
                    |(mut a, ca), (b, cb)| {
                        a.merge(b);
                        (a, ca + cb)
                    },
                ),
        });
        Ok(Outcome { acc, completed, partial: completed < total })
    }
}

/// Sample size, master seed and execution strategy of a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct McOptions {
    pub n: u64,
    pub seed: u64,
    pub replicator: Replicator,
}

impl McOptions {
    pub fn new(n: u64, seed: u64) -> Self {
        Self { n, seed, replicator: Replicator::sequential() }
    }

    pub fn with_replicator(mut self, replicator: Replicator) -> Self {
        self.replicator = replicator;
        self
    }

    pub(crate) fn require_n(&self, at_least: u64, what: &str) -> Result<()> {
        if self.n < at_least {
            return Err(Error::Config(format!(
                "{what} needs at least {at_least} replicates, got {}",
                self.n
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(_: &mut (), i: u64) -> f64 {
        ((i as f64) * 0.7).sin() * 1e3 + 1e-3 * i as f64
    }

    #[test]
    fn sequential_reduction_is_worker_invariant() {
        let one: Outcome<RunningStats> =
            Replicator::sequential().run(0..5000, || (), noisy).unwrap();
        for w in [2, 3] {
            let many: Outcome<RunningStats> = Replicator::new(w, Reduction::Sequential)
                .unwrap()
                .run(0..5000, || (), noisy)
                .unwrap();
            assert_eq!(one.acc, many.acc);
        }
    }

    #[test]
    fn parallel_reduction_agrees_to_rounding() {
        let one: Outcome<RunningStats> =
            Replicator::sequential().run(0..5000, || (), noisy).unwrap();
        let par: Outcome<RunningStats> = Replicator::new(3, Reduction::Parallel)
            .unwrap()
            .run(0..5000, || (), noisy)
            .unwrap();
        assert_eq!(par.completed, 5000);
        assert!((one.acc.mean() - par.acc.mean()).abs() < 1e-9);
    }

    #[test]
    fn cancel_flag_gives_partial_outcome() {
        let flag = Arc::new(AtomicBool::new(true));
        let out: Outcome<RunningStats> = Replicator::sequential()
            .with_cancel(flag)
            .run(0..10, || (), noisy)
            .unwrap();
        assert!(out.partial);
        assert_eq!(out.completed, 0);
    }

    #[test]
    fn zero_workers_is_config_error() {
        assert!(Replicator::new(0, Reduction::Sequential).is_err());
    }
}
