//! Draws of the recalled time `β_{n+1}` and the matrix code.

use crate::rng::RngStream;

use super::codes::MatrixCode;

/// Most corrections the guided search takes before it falls back to bisection.
const MAX_LOCAL_STEPS: usize = 8;

/// Samples `k ∈ 1..=n` with probability `μ_k / C_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MemorySampler {
    /// `β = 0`: every past step is equally likely.
    Uniform,
    /// Inverse CDF over the prefix sums `C_k`. The search starts from
    /// `n (u/C_n)^{1/(β+1)}`, which is within a few indices of the
    /// answer since `C_k ∝ k^{β+1}` to leading order, and bisects otherwise.
    InverseCdf { inv_exponent: f64 },
}

impl MemorySampler {
    pub fn for_beta(beta: f64) -> Self {
        if beta == 0.0 {
            MemorySampler::Uniform
        } else {
            MemorySampler::InverseCdf { inv_exponent: 1.0 / (beta + 1.0) }
        }
    }

    /// `cum` is the prefix table with `cum[0] = 0` and `cum.len() > n`.
    #[inline]
    pub fn sample(&self, n: usize, cum: &[f64], rng: &mut RngStream) -> usize {
        match *self {
            MemorySampler::Uniform => rng.below(n as u64) as usize + 1,
            MemorySampler::InverseCdf { inv_exponent } => {
                let total = cum[n];
                let f = rng.next_f64();
                invert_guided(f * total, f, n, cum, inv_exponent)
            }
        }
    }
}

/// Smallest `k ∈ 1..=n` with `cum[k] > target`.
#[inline]
fn invert_guided(target: f64, frac: f64, n: usize, cum: &[f64], inv_exponent: f64) -> usize {
    let guess = if inv_exponent == 0.5 { frac.sqrt() } else { frac.powf(inv_exponent) };
    let mut k = ((guess * n as f64) as usize).clamp(1, n);
    for _ in 0..MAX_LOCAL_STEPS {
        if cum[k - 1] > target {
            k -= 1;
        } else if cum[k] <= target && k < n {
            k += 1;
        } else {
            return k;
        }
    }
    invert_bisect(target, n, cum)
}

/// Smallest `k ∈ 1..=n` with `cum[k] > target`, by bisection.
#[inline]
pub fn invert_bisect(target: f64, n: usize, cum: &[f64]) -> usize {
    let k = cum[1..=n].partition_point(|&c| c <= target) + 1;
    k.min(n)
}

/// Reference sampler: scan `μ_1, μ_2, …` until the running sum exceeds `u · C_n`.
pub fn sample_memory_linear(n: usize, mu: &[f64], u: f64) -> usize {
    let total: f64 = mu[1..=n].iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (k, &m) in mu.iter().enumerate().take(n + 1).skip(1) {
        acc += m;
        if acc > target {
            return k;
        }
    }
    n
}

/// Exact law of `β_{n+1}`: `(β+1)/n · μ_k / μ_{n+1}` for `k = 1..=n`, index 0 unused.
pub fn memory_pmf(n: usize, beta: f64, mu: &[f64]) -> Vec<f64> {
    let mut pmf = vec![0.0; n + 1];
    let scale = (beta + 1.0) / (n as f64 * mu[n + 1]);
    for k in 1..=n {
        pmf[k] = scale * mu[k];
    }
    pmf
}

/// Identity with probability `p`, else one of the other `2d-1` codes uniformly.
#[inline]
pub fn sample_matrix_index(p: f64, d: usize, rng: &mut RngStream) -> usize {
    if d == 1 && p > 0.0 && p < 1.0 {
        // branch-free: the coin is unpredictable near p = 1/2
        return (rng.next_f64() >= p) as usize;
    }
    if p >= 1.0 || (p > 0.0 && rng.next_f64() < p) {
        0
    } else if d == 1 {
        1
    } else {
        1 + rng.below((2 * d - 1) as u64) as usize
    }
}

pub fn sample_step_matrix(p: f64, d: usize, rng: &mut RngStream) -> MatrixCode {
    MatrixCode::from_index(sample_matrix_index(p, d, rng), d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;
    use crate::sequences::SequenceCache;

    #[test]
    fn guided_and_bisection_agree() {
        for &beta in &[0.3, 1.0, 2.0, 4.5] {
            let p = ModelParams::new(2, 0.5, beta).unwrap();
            let cache = SequenceCache::new(&p, 3000).unwrap();
            let cum = cache.cum_mu_table();
            let sampler = MemorySampler::for_beta(beta);
            let MemorySampler::InverseCdf { inv_exponent } = sampler else { unreachable!() };
            let mut rng = RngStream::new(5, 0);
            for n in [1usize, 2, 3, 17, 2999] {
                for _ in 0..2000 {
                    let f = rng.next_f64();
                    let t = f * cum[n];
                    assert_eq!(invert_guided(t, f, n, cum, inv_exponent), invert_bisect(t, n, cum));
                }
                // edges
                assert_eq!(invert_guided(0.0, 0.0, n, cum, inv_exponent), 1);
                assert_eq!(invert_bisect(cum[n], n, cum), n);
            }
        }
    }

    #[test]
    fn linear_scan_agrees_with_bisection() {
        let p = ModelParams::new(1, 0.5, 1.5).unwrap();
        let cache = SequenceCache::new(&p, 200).unwrap();
        let (mu, cum) = (cache.mu_table().unwrap(), cache.cum_mu_table());
        let mut rng = RngStream::new(8, 1);
        for _ in 0..5000 {
            let u = rng.next_f64();
            let n = 1 + rng.below(199) as usize;
            let lin = sample_memory_linear(n, mu, u);
            let bis = invert_bisect(u * cum[n], n, cum);
            // the two prefix sums round differently; they may only disagree at a boundary
            if lin != bis {
                let boundary = cum[lin.min(bis)];
                assert!((boundary - u * cum[n]).abs() < 1e-10 * cum[n]);
            }
        }
    }

    #[test]
    fn pmf_n2_beta1() {
        let p = ModelParams::new(1, 0.5, 1.0).unwrap();
        let cache = SequenceCache::new(&p, 3).unwrap();
        let pmf = memory_pmf(2, 1.0, cache.mu_table().unwrap());
        assert!((pmf[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((pmf[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_law_extremes() {
        let mut rng = RngStream::new(3, 3);
        for _ in 0..1000 {
            assert_eq!(sample_matrix_index(1.0, 3, &mut rng), 0);
            assert_ne!(sample_matrix_index(0.0, 3, &mut rng), 0);
            assert!(sample_matrix_index(0.0, 1, &mut rng) == 1);
        }
    }
}
