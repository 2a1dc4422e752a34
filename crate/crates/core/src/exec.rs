//! Execution strategy and deterministic reductions.
//!
//! Every long sum is cut into fixed-size chunks. Each chunk is summed
//! sequentially with Neumaier compensation and the chunk totals are then
//! combined by a pairwise tree. The tree depends only on the range length,
//! never on the thread count, so sequential and parallel runs agree bit for
//! bit.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of terms per leaf of the reduction tree.
pub const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential evaluation.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Pairwise sum of `values` with a split point that depends only on length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

fn chunk_bounds(range: &Range<u64>) -> Vec<Range<u64>> {
    let mut out = Vec::new();
    let mut lo = range.start;
    while lo < range.end {
        let hi = (lo + CHUNK).min(range.end);
        out.push(lo..hi);
        lo = hi;
    }
    out
}

fn sum_chunk<F: Fn(u64) -> f64>(chunk: Range<u64>, term: &F) -> f64 {
    let mut acc = CompensatedSum::default();
    for k in chunk {
        acc.add(term(k));
    }
    acc.value()
}

/// `Σ_{k ∈ range} term(k)` with the fixed chunked reduction tree.
pub fn sum_range<F>(exec: Execution, range: Range<u64>, term: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = chunk_bounds(&range);
    let partials: Vec<f64> = if exec.is_parallel() {
        #[cfg(feature = "parallel")]
        {
            chunks.into_par_iter().map(|c| sum_chunk(c, &term)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            unreachable!()
        }
    } else {
        chunks.into_iter().map(|c| sum_chunk(c, &term)).collect()
    };
    pairwise_sum(&partials)
}

/// Sum of a sequentially generated series, using the same leaf size and
/// tree as [`sum_range`]. `terms` must yield the terms for indices
/// `0, 1, 2, …` in order.
pub fn sum_sequence<I: Iterator<Item = f64>>(terms: I) -> f64 {
    let mut partials = Vec::new();
    let mut acc = CompensatedSum::default();
    let mut count = 0u64;
    for x in terms {
        acc.add(x);
        count += 1;
        if count == CHUNK {
            partials.push(acc.value());
            acc = CompensatedSum::default();
            count = 0;
        }
    }
    if count > 0 {
        partials.push(acc.value());
    }
    pairwise_sum(&partials)
}

/// Order-preserving map over independent work items.
pub fn map_items<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if exec.is_parallel() {
        #[cfg(feature = "parallel")]
        {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}
