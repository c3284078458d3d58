use crate::error::{Error, Result};
use rayon::prelude::*;

/// Upper bound on the number of elementary steps an exhaustive enumeration
/// may take. Every enumerating operation checks its size against one of these
/// before doing any work.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Guard {
    limit: u64,
}

impl Guard {
    pub const DEFAULT_LIMIT: u64 = 100_000_000;

    pub fn new(limit: u64) -> Self {
        Guard { limit }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn check(&self, what: &str, size: f64) -> Result<()> {
        if size > self.limit as f64 {
            return Err(Error::TooLarge {
                what: what.to_string(),
                size,
                limit: self.limit,
            });
        }
        Ok(())
    }
}

impl Default for Guard {
    fn default() -> Self {
        Guard::new(Self::DEFAULT_LIMIT)
    }
}

const CHUNK: usize = 1 << 12;

/// Parallel fold over `0..len` whose result does not depend on the number of
/// worker threads: chunk boundaries are fixed and partial results are
/// combined left to right.
pub(crate) fn chunked_fold<T, F, C>(len: usize, identity: T, body: F, combine: C) -> T
where
    T: Send + Sync + Clone,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    C: Fn(T, T) -> T,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| body(c * CHUNK..((c + 1) * CHUNK).min(len)))
        .collect();
    partials.into_iter().fold(identity, combine)
}

/// Kahan-compensated sum of a closure over a range.
pub(crate) fn kahan_sum<F: Fn(usize) -> f64>(range: std::ops::Range<usize>, f: F) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in range {
        let y = f(i) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Thread-count independent parallel compensated sum.
pub(crate) fn par_sum<F: Fn(usize) -> f64 + Sync + Send>(len: usize, f: F) -> f64 {
    chunked_fold(len, 0.0, |r| kahan_sum(r, &f), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_rejects_oversize() {
        let g = Guard::new(1000);
        assert!(g.check("x", 1000.0).is_ok());
        assert!(matches!(g.check("x", 1001.0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn par_sum_matches_serial() {
        let s = par_sum(100_000, |i| (i as f64).sqrt());
        let t: f64 = (0..100_000).map(|i| (i as f64).sqrt()).sum();
        assert!((s - t).abs() < 1e-6);
    }
}
