use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Default number of checkpoints.
pub const DEFAULT_CHECKPOINTS: usize = 16;
/// Paths per work block. Blocks are the unit of scheduling and of the merge tree.
pub const DEFAULT_BLOCK_SIZE: usize = 256;

/// Moderate-deviation settings: `ϑ_n = n^η` and the radii of the ball complements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpConfig {
    pub eta: f64,
    pub radii: Vec<f64>,
}

impl Default for MdpConfig {
    fn default() -> Self {
        Self { eta: 1.0 / 6.0, radii: vec![0.5, 1.0] }
    }
}

/// Which per-path quantities to accumulate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimators {
    /// `Σ S_k S_k^T / k²` (diffusive) and `Σ S_k S_k^T / (k log k)²` (critical).
    pub qsl: bool,
    /// `Σ G_k G_k^T / k²` and its critical analogue.
    pub barycenter_qsl: bool,
    /// Keep `n^{-e} S_n` and `n^{-e} G_n` per path at the horizon.
    pub l_beta: bool,
    /// Keep the diagonal of `Σ_n / (n μ_{n+1})` per path at the horizon.
    pub sigma_ratio: bool,
    pub mdp: Option<MdpConfig>,
}

impl Estimators {
    pub fn needs_step_trackers(&self) -> bool {
        self.qsl || self.barycenter_qsl
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: ModelParams,
    pub num_paths: u64,
    pub horizon: usize,
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    pub estimators: Estimators,
    pub block_size: usize,
    /// Thread count; `None` uses the global pool. Has no effect on the output.
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Stop scheduling new blocks after this long and return what finished.
    #[serde(skip)]
    pub time_limit: Option<Duration>,
}

impl EnsembleConfig {
    pub fn new(params: ModelParams, num_paths: u64, horizon: usize, seed: u64) -> Self {
        Self {
            params,
            num_paths,
            horizon,
            checkpoints: geometric_checkpoints(horizon, DEFAULT_CHECKPOINTS),
            seed,
            estimators: Estimators::default(),
            block_size: DEFAULT_BLOCK_SIZE,
            workers: None,
            time_limit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::walk::path::validate_checkpoints(self.horizon, &self.checkpoints)?;
        if self.num_paths == 0 {
            return Err(Error::InvalidConfig("num_paths must be >= 1".into()));
        }
        if self.block_size == 0 {
            return Err(Error::InvalidConfig("block_size must be >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        if let Some(mdp) = &self.estimators.mdp {
            validate_mdp(mdp, self.horizon, self.num_paths)?;
        }
        Ok(())
    }
}

/// `ϑ_n² r²/2 ≤ log(paths) - 2` for every radius, so that each event is
/// expected to be hit at least `e²` times.
pub fn validate_mdp(mdp: &MdpConfig, n: usize, num_paths: u64) -> Result<()> {
    if !(mdp.eta > 0.0 && mdp.eta < 0.5) {
        return Err(Error::InvalidConfig(format!("eta must lie in (0, 1/2), got {}", mdp.eta)));
    }
    let theta2 = (n as f64).powf(2.0 * mdp.eta);
    let budget = (num_paths as f64).ln() - 2.0;
    for &r in &mdp.radii {
        if !(r > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be > 0, got {r}")));
        }
        let need = theta2 * r * r / 2.0;
        if need > budget {
            return Err(Error::InvalidConfig(format!(
                "radius {r} is unobservable: theta_n^2 r^2/2 = {need:.3} exceeds log(paths) - 2 = {budget:.3}"
            )));
        }
    }
    Ok(())
}

/// About `count` points spaced geometrically from 100 (or 1) to `horizon`,
/// rounded to integers and deduplicated. `horizon` is always included.
pub fn geometric_checkpoints(horizon: usize, count: usize) -> Vec<usize> {
    if horizon == 0 {
        return Vec::new();
    }
    let start = if horizon > 100 { 100.0f64 } else { 1.0 };
    let count = count.max(2);
    let ratio = (horizon as f64 / start).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<usize> = (0..count).map(|i| (start * ratio.powi(i as i32)).round() as usize).collect();
    *out.last_mut().unwrap() = horizon;
    out.retain(|&c| c >= 1 && c <= horizon);
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = geometric_checkpoints(10_000, 16);
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], 100);
        assert_eq!(*g.last().unwrap(), 10_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let small = geometric_checkpoints(5, 16);
        assert_eq!(small, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn mdp_validator() {
        let m = MdpConfig::default();
        assert!(validate_mdp(&m, 10_000, 10_000_000).is_ok());
        assert!(validate_mdp(&MdpConfig { eta: 1.0 / 6.0, radii: vec![2.0] }, 10_000, 10_000_000).is_err());
        assert!(validate_mdp(&MdpConfig { eta: 0.5, radii: vec![0.5] }, 10_000, 10_000_000).is_err());
    }
}
