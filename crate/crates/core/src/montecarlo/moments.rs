//! Streaming mean and variance of feature vectors.

use serde::{Deserialize, Serialize};

/// Welford accumulator over fixed-length feature vectors, mergeable with Chan's update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMoments {
    pub count: u64,
    pub mean: Vec<f64>,
    /// Sums of squared deviations from the mean.
    pub m2: Vec<f64>,
}

impl RunningMoments {
    pub fn new(len: usize) -> Self {
        Self { count: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    #[inline]
    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.mean.len());
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta * inv;
            *s += delta * (v - *m);
        }
    }

    pub fn merge(&mut self, other: &RunningMoments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    /// Sample variance of feature `i`; needs two observations.
    pub fn variance(&self, i: usize) -> Option<f64> {
        (self.count >= 2).then(|| self.m2[i] / (self.count - 1) as f64)
    }

    /// Standard error of the mean of feature `i`.
    pub fn standard_error(&self, i: usize) -> Option<f64> {
        self.variance(i).map(|v| (v.max(0.0) / self.count as f64).sqrt())
    }
}

/// Merge a sequence of accumulators by a balanced pairwise tree over their order.
pub fn merge_tree(mut parts: Vec<RunningMoments>, len: usize) -> RunningMoments {
    if parts.is_empty() {
        return RunningMoments::new(len);
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut left) = it.next() {
            if let Some(right) = it.next() {
                left.merge(&right);
            }
            next.push(left);
        }
        parts = next;
    }
    parts.pop().unwrap()
}
