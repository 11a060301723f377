//! The martingales `M_n = a_n Y_n` and `N_n = S_n + κ μ_n^{-1} Y_n`, with
//! `κ = a(β+1)/(β - a(β+1))`, and their predictable quadratic variations.
//!
//! With `ε_{n+1} = μ_{n+1} X_{n+1} - (a(β+1)/n) Y_n` the increments are
//! `ΔM = a_{n+1} ε_{n+1}` and `ΔN = κ_N μ_{n+1}^{-1} ε_{n+1}` where `κ_N = β/(β - a(β+1))`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::ModelParams;
use crate::sequences::SequenceCache;

/// Row-major `d × d` matrix.
pub type Matrix = Vec<f64>;

pub fn identity_scaled(d: usize, scale: f64) -> Matrix {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = scale;
    }
    m
}

pub fn trace(m: &[f64], d: usize) -> f64 {
    (0..d).map(|i| m[i * d + i]).sum()
}

/// `E[ε_{n+1} ε_{n+1}^T | F_n] = (c/n) μ_{n+1} Σ_n + ((1-a)/d) μ_{n+1}² I - (c/n)² Y_n Y_n^T`
/// where `c = a(β+1)` and `Σ_n = diag(occupation)`.
pub fn conditional_eps_covariance(params: &ModelParams, n: usize, mu_next: f64, y: &[f64], occupation: &[f64]) -> Matrix {
    let d = params.d;
    let g = params.memory_drift() / n as f64;
    let iso = (1.0 - params.a) / d as f64 * mu_next * mu_next;
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            m[i * d + j] = -g * g * y[i] * y[j];
        }
        m[i * d + i] += g * mu_next * occupation[i] + iso;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleView {
    pub d: usize,
    pub kappa: f64,
    pub kappa_n: f64,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub eps_last: Vec<f64>,
    pub qv_m: Matrix,
    pub qv_n: Matrix,
    pub qv_mn: Matrix,
    /// `Σ_{k<n} (c/k)² a_{k+1}² ‖Y_k‖²`
    pub trace_m_correction: f64,
    /// `Σ_{k<n} (c/(k μ_{k+1}))² ‖Y_k‖²`
    pub trace_n_correction: f64,
}

impl MartingaleView {
    /// View at `n = 1` after the first step `x1 = S_1 = Y_1`.
    pub fn start(params: &ModelParams, x1: &[f64]) -> Result<Self> {
        let d = params.d;
        let kappa = params.decomposition_coefficient()?;
        let kappa_n = params.n_increment_factor()?;
        let inv_d = 1.0 / d as f64;
        Ok(Self {
            d,
            kappa,
            kappa_n,
            m: x1.to_vec(),
            n: x1.iter().map(|x| x * kappa_n).collect(),
            eps_last: vec![0.0; d],
            qv_m: identity_scaled(d, inv_d),
            qv_n: identity_scaled(d, kappa_n * kappa_n * inv_d),
            qv_mn: identity_scaled(d, kappa_n * inv_d),
            trace_m_correction: 0.0,
            trace_n_correction: 0.0,
        })
    }

    /// Advance from time `n` to `n+1`. `y` and `occupation` are the values at time `n`.
    #[allow(clippy::too_many_arguments)]
    pub fn advance(
        &mut self,
        params: &ModelParams,
        n: usize,
        a_next: f64,
        mu_next: f64,
        y: &[f64],
        occupation: &[f64],
        x_next: &[f64],
    ) {
        let d = self.d;
        let g = params.memory_drift() / n as f64;
        let cov = conditional_eps_covariance(params, n, mu_next, y, occupation);
        let fac_n = self.kappa_n / mu_next;
        for i in 0..d * d {
            self.qv_m[i] += a_next * a_next * cov[i];
            self.qv_n[i] += fac_n * fac_n * cov[i];
            self.qv_mn[i] += a_next * fac_n * cov[i];
        }
        let mut y2 = 0.0;
        for i in 0..d {
            let e = mu_next * x_next[i] - g * y[i];
            self.eps_last[i] = e;
            self.m[i] += a_next * e;
            self.n[i] += fac_n * e;
            y2 += y[i] * y[i];
        }
        self.trace_m_correction += g * g * a_next * a_next * y2;
        let h = g / mu_next;
        self.trace_n_correction += h * h * y2;
    }

    /// `S_n = N_n - κ (a_n μ_n)^{-1} M_n`.
    pub fn reconstruct_position(&self, a_mu: f64) -> Vec<f64> {
        self.n.iter().zip(&self.m).map(|(n, m)| n - self.kappa * m / a_mu).collect()
    }

    /// `Tr⟨M⟩_n = w_n - Σ_{k<n} (c/k)² a_{k+1}² ‖Y_k‖²`.
    pub fn trace_qv_m_scalar(&self, time: usize, cache: &SequenceCache) -> Result<f64> {
        Ok(cache.w(time)? - self.trace_m_correction)
    }

    /// `Tr⟨N⟩_n = κ_N² (n - Σ_{k<n} (c/(k μ_{k+1}))² ‖Y_k‖²)`.
    pub fn trace_qv_n_scalar(&self, time: usize) -> f64 {
        self.kappa_n * self.kappa_n * (time as f64 - self.trace_n_correction)
    }

    pub fn trace_qv_m(&self) -> f64 {
        trace(&self.qv_m, self.d)
    }

    pub fn trace_qv_n(&self) -> f64 {
        trace(&self.qv_n, self.d)
    }
}
