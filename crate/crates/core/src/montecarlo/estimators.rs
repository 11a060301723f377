//! Statistics on ensemble output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::CorrectionTerm;

/// Wilson score interval half-width multiplier used for tail probabilities.
pub const WILSON_Z: f64 = 4.0;

/// A mean with its Monte Carlo standard error; `se` is `None` below two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: Option<f64>,
}

impl Estimate {
    pub fn scaled(self, factor: f64) -> Self {
        Self { mean: self.mean * factor, se: self.se.map(|s| s * factor.abs()) }
    }

    /// `(mean - target)/se`, when the standard error is positive.
    pub fn z_score(&self, target: f64) -> Option<f64> {
        match self.se {
            Some(se) if se > 0.0 => Some((self.mean - target) / se),
            _ => None,
        }
    }

    pub fn within_se(&self, target: f64, k: f64) -> bool {
        match self.se {
            Some(se) => (self.mean - target).abs() <= k * se,
            None => false,
        }
    }
}

/// Mean and standard error of a sample.
pub fn sample_estimate(xs: &[f64]) -> Option<Estimate> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = (xs.len() >= 2).then(|| {
        let v = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (v / n).sqrt()
    });
    Some(Estimate { mean, se })
}

/// Median, averaging the two middle values for even lengths. NaNs are ignored.
pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Wilson score interval for `hits` successes out of `n` trials.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// `ϑ_n^{-2} log P(‖a_n μ_n S_n / (ϑ_n √w_n)‖ ≥ r)` for one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpEstimate {
    pub radius: f64,
    pub hits: u64,
    pub paths: u64,
    pub probability: f64,
    pub probability_interval: (f64, f64),
    /// `None` when there were no hits.
    pub scaled_log: Option<f64>,
    pub scaled_log_lower: Option<f64>,
    pub scaled_log_upper: f64,
    /// `-r²/2`
    pub theory: f64,
    pub relative_error: Option<f64>,
    /// Within 20% of the theory value, or the theory value inside the interval.
    pub brackets_theory: bool,
}

pub fn mdp_estimate(radius: f64, hits: u64, paths: u64, theta_sq: f64) -> MdpEstimate {
    let probability = if paths == 0 { 0.0 } else { hits as f64 / paths as f64 };
    let (lo, hi) = wilson_interval(hits, paths, WILSON_Z);
    let theory = -radius * radius / 2.0;
    let scaled_log = (hits > 0).then(|| probability.ln() / theta_sq);
    let scaled_log_lower = (lo > 0.0).then(|| lo.ln() / theta_sq);
    let scaled_log_upper = hi.ln() / theta_sq;
    let relative_error = scaled_log.map(|s| ((s - theory) / theory).abs());
    let in_interval = scaled_log_lower.map_or(false, |l| l <= theory) && theory <= scaled_log_upper;
    let close = relative_error.map_or(false, |e| e <= 0.2);
    MdpEstimate {
        radius,
        hits,
        paths,
        probability,
        probability_interval: (lo, hi),
        scaled_log,
        scaled_log_lower,
        scaled_log_upper,
        theory,
        relative_error,
        brackets_theory: hits > 0 && (close || in_interval),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    /// `(c₁, c₂)` in `residual(n) ≈ c₁ f₁(n) + c₂ f₂(n)`.
    pub coefficients: [f64; 2],
    pub r_squared: f64,
    /// Condition number of the column-normalised design.
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

/// Condition numbers above this get flagged.
pub const ILL_CONDITIONED: f64 = 1e8;

/// Least-squares fit of `values[i] - limit` against the two correction shapes.
/// `weights` are inverse variances; `None` weighs all points equally.
pub fn regress_msd_corrections(
    ns: &[f64],
    values: &[f64],
    limit: f64,
    corrections: [CorrectionTerm; 2],
    weights: Option<&[f64]>,
) -> Result<RegressionFit> {
    if ns.len() != values.len() || weights.map_or(false, |w| w.len() != ns.len()) {
        return Err(Error::InvalidConfig("regression inputs differ in length".into()));
    }
    if ns.len() < 6 {
        return Err(Error::InvalidConfig(format!("need at least 6 checkpoints for the correction fit, got {}", ns.len())));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let f1: Vec<f64> = ns.iter().map(|&n| corrections[0].eval(n)).collect();
    let f2: Vec<f64> = ns.iter().map(|&n| corrections[1].eval(n)).collect();
    let y: Vec<f64> = values.iter().map(|v| v - limit).collect();
    // column scaling keeps the 2x2 normal equations well balanced
    let s1 = (0..ns.len()).map(|i| w(i) * f1[i] * f1[i]).sum::<f64>().sqrt();
    let s2 = (0..ns.len()).map(|i| w(i) * f2[i] * f2[i]).sum::<f64>().sqrt();
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::InvalidConfig("a correction column vanishes on the grid".into()));
    }
    let (mut g11, mut g12, mut g22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..ns.len() {
        let (x1, x2) = (f1[i] / s1, f2[i] / s2);
        g11 += w(i) * x1 * x1;
        g12 += w(i) * x1 * x2;
        g22 += w(i) * x2 * x2;
        b1 += w(i) * x1 * y[i];
        b2 += w(i) * x2 * y[i];
    }
    let tr = g11 + g22;
    let det = g11 * g22 - g12 * g12;
    let disc = ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt();
    let (lmax, lmin) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    let condition_number = if lmin > 0.0 { (lmax / lmin).sqrt() } else { f64::INFINITY };
    let c1 = (g22 * b1 - g12 * b2) / det / s1;
    let c2 = (g11 * b2 - g12 * b1) / det / s2;
    let wsum: f64 = (0..ns.len()).map(w).sum();
    let ybar = (0..ns.len()).map(|i| w(i) * y[i]).sum::<f64>() / wsum;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..ns.len() {
        let fit = c1 * f1[i] + c2 * f2[i];
        ss_res += w(i) * (y[i] - fit).powi(2);
        ss_tot += w(i) * (y[i] - ybar).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RegressionFit {
        coefficients: [c1, c2],
        r_squared,
        condition_number,
        ill_conditioned: condition_number > ILL_CONDITIONED,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn wilson_contains_truth_and_handles_zero() {
        let (lo, hi) = wilson_interval(50, 1000, 1.96);
        assert!(lo < 0.05 && 0.05 < hi);
        let (lo, hi) = wilson_interval(0, 1000, 4.0);
        assert_eq!(lo, 0.0);
        assert!((hi - 16.0 / 1016.0).abs() < 1e-12);
    }

    #[test]
    fn zero_hits_give_only_a_bound() {
        let e = mdp_estimate(1.0, 0, 1_000_000, 20.0);
        assert!(e.scaled_log.is_none() && e.scaled_log_lower.is_none());
        assert!(e.scaled_log_upper < 0.0);
        assert!(!e.brackets_theory);
    }

    #[test]
    fn regression_recovers_synthetic_coefficients() {
        let ns: Vec<f64> = (0..12).map(|i| 100.0 * 1.8f64.powi(i)).collect();
        let terms = [CorrectionTerm::Power { exponent: 0.7 }, CorrectionTerm::Power { exponent: 1.0 }];
        let (c1, c2, limit) = (-1.3, 4.2, 2.4);
        let vals: Vec<f64> = ns.iter().map(|&n| limit + c1 * n.powf(-0.7) + c2 / n).collect();
        let fit = regress_msd_corrections(&ns, &vals, limit, terms, None).unwrap();
        assert!((fit.coefficients[0] - c1).abs() < 1e-8);
        assert!((fit.coefficients[1] - c2).abs() < 1e-8);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(!fit.ill_conditioned);
    }

    #[test]
    fn regression_flags_near_equal_exponents() {
        let ns: Vec<f64> = (0..8).map(|i| 100.0 * 2f64.powi(i)).collect();
        let terms = [CorrectionTerm::Power { exponent: 1.0 }, CorrectionTerm::Power { exponent: 1.0 + 1e-9 }];
        let vals: Vec<f64> = ns.iter().map(|&n| 1.0 + 1.0 / n).collect();
        let fit = regress_msd_corrections(&ns, &vals, 1.0, terms, None).unwrap();
        assert!(fit.ill_conditioned);
        assert!(regress_msd_corrections(&ns[..5], &vals[..5], 1.0, terms, None).is_err());
    }
}
