//! Brute-force conditional laws, by enumerating every memory index and every
//! matrix code. Cost is `O(n d)`; meant for checking the closed forms.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::sequences::SequenceCache;

use super::codes::{Direction, MatrixCode};
use super::martingale::Matrix;
use super::WalkState;

/// Law of `X_{n+1}` given `F_n`, indexed by direction code.
pub fn conditional_step_distribution(state: &WalkState, params: &ModelParams, cache: &SequenceCache) -> Result<Vec<f64>> {
    if !state.has_history() {
        return Err(Error::HistoryUnavailable);
    }
    let d = params.d;
    let n = state.n;
    let total = cache.cum_mu(n)?;
    let mut pmf = vec![0.0; 2 * d];
    for k in 1..=n {
        let pk = cache.mu(k)? / total;
        let recalled = state.step_at(k);
        for code in MatrixCode::all(d) {
            pmf[code.apply(recalled, d).0 as usize] += pk * code.probability(params.p, d);
        }
    }
    Ok(pmf)
}

/// `E[X_{n+1} | F_n]` from a direction pmf.
pub fn pmf_mean(pmf: &[f64], d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for dir in Direction::all(d) {
        mean[dir.axis()] += dir.sign() as f64 * pmf[dir.0 as usize];
    }
    mean
}

/// `P(X_{n+1}^j ≠ 0 | F_n)` from a direction pmf.
pub fn pmf_axis_hits(pmf: &[f64], d: usize) -> Vec<f64> {
    let mut hits = vec![0.0; d];
    for dir in Direction::all(d) {
        hits[dir.axis()] += pmf[dir.0 as usize];
    }
    hits
}

/// Closed form of the conditional mean, `a(β+1)/(n μ_{n+1}) · Y_n`.
pub fn conditional_mean(state: &WalkState, params: &ModelParams, cache: &SequenceCache) -> Result<Vec<f64>> {
    let f = params.memory_drift() / (state.n as f64 * cache.mu(state.n + 1)?);
    Ok(state.y.iter().map(|y| f * y).collect())
}

/// Closed form of the axis hit probabilities, `a(β+1)/(n μ_{n+1}) · N^X_n(j) + (1-a)/d`.
pub fn conditional_axis_hits(state: &WalkState, params: &ModelParams, cache: &SequenceCache) -> Result<Vec<f64>> {
    let f = params.memory_drift() / (state.n as f64 * cache.mu(state.n + 1)?);
    let iso = (1.0 - params.a) / params.d as f64;
    Ok(state.occupation.iter().map(|o| f * o + iso).collect())
}

/// `E[ε_{n+1} ε_{n+1}^T | F_n]` by summing over the enumerated law of `X_{n+1}`.
pub fn enumerated_eps_second_moment(state: &WalkState, params: &ModelParams, cache: &SequenceCache) -> Result<Matrix> {
    let d = params.d;
    let n = state.n;
    let pmf = conditional_step_distribution(state, params, cache)?;
    let mu_next = cache.mu(n + 1)?;
    let g = params.memory_drift() / n as f64;
    let mut m = vec![0.0; d * d];
    let mut eps = vec![0.0; d];
    for dir in Direction::all(d) {
        let w = pmf[dir.0 as usize];
        for (i, e) in eps.iter_mut().enumerate() {
            *e = -g * state.y[i];
        }
        eps[dir.axis()] += mu_next * dir.sign() as f64;
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] += w * eps[i] * eps[j];
            }
        }
    }
    Ok(m)
}
