//! Deterministic sequences of the model.
//!
//! With `c = a(β+1)`:
//!
//! * `μ_n = Γ(β+n) / (Γ(n) Γ(β+1)) = ∏_{k<n} (1 + β/k)`
//! * `a_n = Γ(n) Γ(c+1) / Γ(c+n) = ∏_{k<n} γ_k^{-1}` with `γ_k = 1 + c/k`
//! * `w_n = Σ_{k≤n} (a_k μ_k)²`, `δ_n = Σ_{k≤n} (a_k μ_k)^{-1}`, `C_n = Σ_{k≤n} μ_k`
//!
//! The cache walks the product forms in the log domain. The free functions
//! [`mu`] and [`a_seq`] evaluate the Gamma-ratio forms directly and serve as
//! the independent route.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::gamma::{ln_gamma, ln_gamma_ratio, ln_gamma_signed};
use crate::params::ModelParams;

/// Linear values are only materialised when `|ln x| < LOG_LIMIT`.
pub const LOG_LIMIT: f64 = 700.0;

const RATIO_THRESHOLD: f64 = 16.0;

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn linear(sequence: &'static str, n: usize, log_value: f64, sign: f64) -> Result<f64> {
    if log_value.abs() < LOG_LIMIT {
        Ok(sign * log_value.exp())
    } else {
        Err(Error::Overflow { sequence, n, log_value })
    }
}

/// `ln μ_n` from the Gamma ratio.
pub fn ln_mu(n: usize, beta: f64) -> f64 {
    assert!(n >= 1, "mu is indexed from 1");
    if beta == 0.0 {
        return 0.0;
    }
    ln_gamma_ratio(n as f64, beta) - ln_gamma(beta + 1.0)
}

/// `μ_n = Γ(β+n) / (Γ(n) Γ(β+1))`.
pub fn mu(n: usize, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParams("mu is indexed from n = 1".into()));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidParams(format!("beta must be >= 0, got {beta}")));
    }
    linear("mu", n, ln_mu(n, beta), 1.0)
}

/// `(ln |a_n|, sign a_n)` from the Gamma ratio, or an error if some `γ_k`
/// with `k < n` vanishes.
pub fn ln_abs_a_seq(n: usize, params: &ModelParams) -> Result<(f64, f64)> {
    assert!(n >= 1, "a_n is indexed from 1");
    let c = params.memory_drift();
    ln_abs_a_direct(n, c).ok_or(Error::DriftUndefined { from: first_undefined_a(c).unwrap_or(n) })
}

/// `a_n = Γ(n) Γ(a(β+1)+1) / Γ(a(β+1)+n)`.
pub fn a_seq(n: usize, params: &ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParams("a_n is indexed from n = 1".into()));
    }
    let (ln, sign) = ln_abs_a_seq(n, params)?;
    linear("a_n", n, ln, sign)
}

/// First `n` at which `a_n` is undefined because `γ_{n-1} = 0`.
fn first_undefined_a(c: f64) -> Option<usize> {
    if c < 0.0 && c.fract() == 0.0 {
        Some((-c) as usize + 1)
    } else {
        None
    }
}

fn ln_abs_a_direct(n: usize, c: f64) -> Option<(f64, f64)> {
    if let Some(bad) = first_undefined_a(c) {
        if n >= bad {
            return None;
        }
    }
    if n == 1 || c == 0.0 {
        return Some((0.0, 1.0));
    }
    let nf = n as f64;
    if c > -1.0 {
        if nf.min(nf + c) < RATIO_THRESHOLD {
            let (g_top, s_top) = ln_gamma_signed(c + 1.0);
            let (g_bot, s_bot) = ln_gamma_signed(c + nf);
            return Some((ln_gamma(nf) + g_top - g_bot, s_top * s_bot));
        }
        return Some((ln_gamma_signed(c + 1.0).0 - ln_gamma_ratio(nf, c), 1.0));
    }
    // Strongly negative drift: take the head of ∏ j/(c+j) term by term, where
    // the factors can be negative, and the tail as a ratio of Gamma ratios.
    let j0 = ((RATIO_THRESHOLD - c).ceil() as usize).max(RATIO_THRESHOLD as usize).min(n);
    let (mut ln, mut sign) = (0.0, 1.0);
    for j in 1..j0 {
        let f = c + j as f64;
        ln += (j as f64).ln() - f.abs().ln();
        if f < 0.0 {
            sign = -sign;
        }
    }
    if j0 < n {
        ln += ln_gamma_ratio(j0 as f64, c) - ln_gamma_ratio(nf, c);
    }
    Some((ln, sign))
}

/// `w_n` by direct compensated summation of Gamma-ratio terms.
pub fn w_n(n: usize, params: &ModelParams) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for k in 1..=n {
        let (la, _) = ln_abs_a_seq(k, params)?;
        acc.add((2.0 * (la + ln_mu(k, params.beta))).exp());
    }
    Ok(acc.value())
}

/// `δ_n` by direct compensated summation of Gamma-ratio terms.
pub fn delta_n(n: usize, params: &ModelParams) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for k in 1..=n {
        let (la, sa) = ln_abs_a_seq(k, params)?;
        acc.add(sa * (-(la + ln_mu(k, params.beta))).exp());
    }
    Ok(acc.value())
}

/// Tables of the sequences for `n = 1..=horizon`, extendable in O(1) per index.
///
/// Index 0 of every table is a placeholder so that `table[n]` is the n-th term.
#[derive(Debug, Clone)]
pub struct SequenceCache {
    params: ModelParams,
    horizon: usize,
    ln_mu: Vec<f64>,
    mu: Vec<f64>,
    ln_abs_a: Vec<f64>,
    a_sign: Vec<f64>,
    w: Vec<f64>,
    delta: Vec<f64>,
    cum_mu: Vec<f64>,
    ln_mu_acc: CompensatedSum,
    ln_a_acc: CompensatedSum,
    w_acc: CompensatedSum,
    delta_acc: CompensatedSum,
    cum_acc: CompensatedSum,
    a_defined_through: usize,
}

impl SequenceCache {
    pub fn new(params: &ModelParams, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidConfig("sequence cache horizon must be >= 1".into()));
        }
        let cap = horizon + 1;
        let mut cache = Self {
            params: *params,
            horizon: 0,
            ln_mu: Vec::with_capacity(cap),
            mu: Vec::with_capacity(cap),
            ln_abs_a: Vec::with_capacity(cap),
            a_sign: Vec::with_capacity(cap),
            w: Vec::with_capacity(cap),
            delta: Vec::with_capacity(cap),
            cum_mu: Vec::with_capacity(cap),
            ln_mu_acc: CompensatedSum::new(),
            ln_a_acc: CompensatedSum::new(),
            w_acc: CompensatedSum::new(),
            delta_acc: CompensatedSum::new(),
            cum_acc: CompensatedSum::new(),
            a_defined_through: 0,
        };
        cache.ln_mu.push(f64::NAN);
        cache.mu.push(0.0);
        cache.ln_abs_a.push(f64::NAN);
        cache.a_sign.push(0.0);
        cache.w.push(0.0);
        cache.delta.push(0.0);
        cache.cum_mu.push(0.0);
        cache.extend_to(horizon);
        Ok(cache)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Append terms up to `horizon`; a smaller value is a no-op.
    pub fn extend_to(&mut self, horizon: usize) {
        let beta = self.params.beta;
        let c = self.params.memory_drift();
        while self.horizon < horizon {
            let n = self.horizon + 1;
            if n > 1 {
                let k = (n - 1) as f64;
                self.ln_mu_acc.add((beta / k).ln_1p());
                if self.a_defined_through == n - 1 {
                    let g = c / k;
                    if g == -1.0 {
                        // γ_{n-1} = 0: a_n and everything built on it stops here
                    } else {
                        let lg = if g > -1.0 { g.ln_1p() } else { (-1.0 - g).ln() };
                        self.ln_a_acc.add(-lg);
                        let sign = self.a_sign[n - 1] * if g < -1.0 { -1.0 } else { 1.0 };
                        self.a_sign.push(sign);
                        self.a_defined_through = n;
                    }
                }
                if self.a_sign.len() == n {
                    self.a_sign.push(f64::NAN);
                }
            } else {
                self.a_sign.push(1.0);
                self.a_defined_through = 1;
            }
            let lm = self.ln_mu_acc.value();
            self.ln_mu.push(lm);
            let m = if lm.abs() < LOG_LIMIT { lm.exp() } else { f64::INFINITY };
            self.mu.push(m);
            self.cum_acc.add(m);
            self.cum_mu.push(self.cum_acc.value());
            if self.a_defined_through == n {
                let la = self.ln_a_acc.value();
                self.ln_abs_a.push(la);
                let lam = la + lm;
                self.w_acc.add((2.0 * lam).exp());
                self.delta_acc.add(self.a_sign[n] * (-lam).exp());
                self.w.push(self.w_acc.value());
                self.delta.push(self.delta_acc.value());
            } else {
                self.ln_abs_a.push(f64::NAN);
                self.w.push(f64::NAN);
                self.delta.push(f64::NAN);
            }
            self.horizon = n;
        }
    }

    #[inline]
    fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.horizon {
            Err(Error::OutOfRange { n, horizon: self.horizon })
        } else {
            Ok(())
        }
    }

    fn check_a(&self, n: usize) -> Result<()> {
        self.check(n)?;
        if n > self.a_defined_through {
            Err(Error::DriftUndefined { from: self.a_defined_through + 1 })
        } else {
            Ok(())
        }
    }

    /// Last index with `a_n` defined.
    pub fn a_defined_through(&self) -> usize {
        self.a_defined_through
    }

    pub fn ln_mu(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.ln_mu[n])
    }

    pub fn mu(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        linear("mu", n, self.ln_mu[n], 1.0)
    }

    /// Linear `μ_n` for `n = 0..=horizon` (index 0 holds 0), or `None` if any term overflows.
    pub fn mu_table(&self) -> Option<&[f64]> {
        if self.ln_mu[self.horizon] < LOG_LIMIT {
            Some(&self.mu)
        } else {
            None
        }
    }

    /// `C_n` for `n = 0..=horizon`, with `C_0 = 0`.
    pub fn cum_mu_table(&self) -> &[f64] {
        &self.cum_mu
    }

    pub fn cum_mu(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        Ok(self.cum_mu[n])
    }

    /// `(ln |a_n|, sign a_n)`.
    pub fn ln_abs_a(&self, n: usize) -> Result<(f64, f64)> {
        self.check_a(n)?;
        Ok((self.ln_abs_a[n], self.a_sign[n]))
    }

    pub fn a(&self, n: usize) -> Result<f64> {
        let (la, s) = self.ln_abs_a(n)?;
        linear("a_n", n, la, s)
    }

    /// `a_n μ_n`, which stays representable far longer than its factors.
    pub fn a_mu(&self, n: usize) -> Result<f64> {
        let (la, s) = self.ln_abs_a(n)?;
        linear("a_n mu_n", n, la + self.ln_mu[n], s)
    }

    pub fn w(&self, n: usize) -> Result<f64> {
        self.check_a(n)?;
        finite("w_n", n, self.w[n])
    }

    pub fn delta(&self, n: usize) -> Result<f64> {
        self.check_a(n)?;
        finite("delta_n", n, self.delta[n])
    }

    /// Write `n, mu, a, w, delta` rows for `n = 1..=horizon`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,mu,a,w,delta")?;
        for n in 1..=self.horizon {
            let show = |r: Result<f64>| r.map(|v| format!("{v:e}")).unwrap_or_else(|_| "nan".into());
            writeln!(
                out,
                "{n},{},{},{},{}",
                show(self.mu(n)),
                show(self.a(n)),
                show(self.w(n)),
                show(self.delta(n))
            )?;
        }
        Ok(())
    }
}

fn finite(sequence: &'static str, n: usize, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { sequence, n, log_value: f64::INFINITY })
    }
}

/// Limits of the normalised sequences.
pub mod asymptotics {
    use super::*;
    use crate::params::Regime;

    /// `lim n^{a(β+1)} a_n = Γ(a(β+1) + 1)`; needs `a(β+1) > -1`.
    pub fn a_scaling_limit(params: &ModelParams) -> f64 {
        crate::gamma::gamma(params.memory_drift() + 1.0)
    }

    /// `lim n^{-β} μ_n = 1/Γ(β+1)`.
    pub fn mu_scaling_limit(beta: f64) -> f64 {
        1.0 / crate::gamma::gamma(beta + 1.0)
    }

    /// `(Γ(a(β+1)+1) / Γ(β+1))²`, the squared limit of `n^{a(β+1)-β} a_n μ_n`.
    pub fn a_mu_limit_sq(params: &ModelParams) -> f64 {
        let c = params.memory_drift();
        (2.0 * (ln_gamma(c + 1.0) - ln_gamma(params.beta + 1.0))).exp()
    }

    /// `l(β) = (Γ(a(β+1)+1)/Γ(β+1))² / (1 + 2(β - a(β+1)))`, the limit of
    /// `w_n / n^{1 - 2(a(β+1)-β)}` in the diffusive regime.
    pub fn diffusive_w_limit(params: &ModelParams) -> Result<f64> {
        expect(params, Regime::Diffusive, "diffusive w_n limit")?;
        Ok(a_mu_limit_sq(params) / (1.0 - 2.0 * params.growth_exponent()))
    }

    /// Limit of `w_n / log n` in the critical regime, `(Γ(β+3/2)/Γ(β+1))²`.
    pub fn critical_w_limit(params: &ModelParams) -> Result<f64> {
        expect(params, Regime::Critical, "critical w_n limit")?;
        let b = params.beta;
        Ok((2.0 * (ln_gamma(b + 1.5) - ln_gamma(b + 1.0))).exp())
    }

    /// Limit of `n^{-(1 + a(β+1) - β)} δ_n`; needs `1 + a(β+1) - β > 0`.
    pub fn delta_limit(params: &ModelParams) -> Result<f64> {
        let e1 = 1.0 + params.growth_exponent();
        if e1 <= 0.0 {
            return Err(Error::InvalidParams(format!("delta_n is not of polynomial growth when 1 + a(beta+1) - beta = {e1} <= 0")));
        }
        let c = params.memory_drift();
        Ok((-(ln_gamma(c + 1.0) + ln_gamma(params.beta + 1.0))).exp() / e1)
    }

    fn expect(params: &ModelParams, regime: Regime, quantity: &'static str) -> Result<()> {
        let actual = params.regime();
        if actual == regime {
            Ok(())
        } else {
            Err(Error::WrongRegime { quantity, expected: regime.as_str(), actual })
        }
    }
}
