//! Exact-identity and enumeration-oracle suites over random admissible parameters.

use marw::walk::martingale::conditional_eps_covariance;
use marw::walk::oracle::{conditional_mean, conditional_step_distribution, enumerated_eps_second_moment, pmf_mean};
use marw::walk::{Walk, WalkOptions};
use marw::{ModelParams, RngStream, SequenceCache};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const ORACLE_TOLERANCE: f64 = 1e-12;

/// Stream id of the parameter draws, away from the path streams.
const DRAW_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteConfig {
    pub draws: usize,
    pub horizon: usize,
    pub max_d: usize,
    pub max_beta: f64,
    pub seed: u64,
}

impl Default for IdentitySuiteConfig {
    fn default() -> Self {
        Self { draws: 100, horizon: 10_000, max_d: 4, max_beta: 5.0, seed: 0 }
    }
}

/// Largest relative discrepancies seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub draws: usize,
    /// Draws where the martingale view is off (singular or `a_n` undefined).
    pub martingale_skipped: usize,
    pub reconstruction: f64,
    pub trace_sigma: f64,
    pub trace_qv_m: f64,
    pub trace_qv_n: f64,
    pub worst_params: Option<ModelParams>,
}

impl IdentitySuiteReport {
    pub fn max_error(&self) -> f64 {
        self.reconstruction.max(self.trace_sigma).max(self.trace_qv_m).max(self.trace_qv_n)
    }

    pub fn passed(&self) -> bool {
        self.max_error() <= IDENTITY_TOLERANCE
    }
}

fn rel(x: f64, y: f64, scale: f64) -> f64 {
    (x - y).abs() / scale.abs().max(1.0)
}

pub fn random_params(rng: &mut RngStream, max_d: usize, max_beta: f64) -> ModelParams {
    let d = rng.gen_range(1..=max_d);
    let p = rng.gen::<f64>();
    let beta = rng.gen::<f64>() * max_beta;
    ModelParams::new(d, p, beta).expect("draws are admissible")
}

/// Checks along one path, at the checkpoints `10^k` and the horizon:
/// `S_n = N_n - κ (a_n μ_n)^{-1} M_n`, `Tr Σ_n = n μ_{n+1}/(β+1)`, and the
/// matrix and scalar routes to `Tr⟨M⟩_n` and `Tr⟨N⟩_n`.
pub fn check_path(params: &ModelParams, horizon: usize, rng: RngStream) -> marw::Result<PathErrors> {
    let cache = SequenceCache::new(params, horizon + 1)?;
    let mut walk = Walk::new(&cache, rng, WalkOptions { track_martingales: true })?;
    let mut out = PathErrors { martingale: walk.martingale().is_some(), ..Default::default() };
    let mut targets: Vec<usize> = (0..).map(|k| 10usize.pow(k)).take_while(|&t| t < horizon).collect();
    targets.push(horizon);
    for t in targets {
        walk.run_to(t)?;
        let st = walk.state();
        let n = st.n;
        let expected = n as f64 * marw::sequences::mu(n + 1, params.beta)? / (params.beta + 1.0);
        out.trace_sigma = out.trace_sigma.max(rel(st.trace_sigma(), expected, expected));
        if let Some(view) = walk.martingale() {
            let a_mu = cache.a_mu(n)?;
            let rebuilt = view.reconstruct_position(a_mu);
            for (i, r) in rebuilt.iter().enumerate() {
                let scale = view.n[i].abs().max((view.kappa * view.m[i] / a_mu).abs());
                out.reconstruction = out.reconstruction.max(rel(*r, st.position[i] as f64, scale));
            }
            let scalar_m = view.trace_qv_m_scalar(n, &cache)?;
            out.trace_qv_m = out.trace_qv_m.max(rel(view.trace_qv_m(), scalar_m, cache.w(n)?));
            let scalar_n = view.trace_qv_n_scalar(n);
            let scale_n = view.kappa_n * view.kappa_n * n as f64;
            out.trace_qv_n = out.trace_qv_n.max(rel(view.trace_qv_n(), scalar_n, scale_n));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathErrors {
    pub martingale: bool,
    pub reconstruction: f64,
    pub trace_sigma: f64,
    pub trace_qv_m: f64,
    pub trace_qv_n: f64,
}

pub fn identity_suite(cfg: &IdentitySuiteConfig) -> marw::Result<IdentitySuiteReport> {
    let mut draws = RngStream::new(cfg.seed, DRAW_STREAM);
    let mut report = IdentitySuiteReport {
        draws: cfg.draws,
        martingale_skipped: 0,
        reconstruction: 0.0,
        trace_sigma: 0.0,
        trace_qv_m: 0.0,
        trace_qv_n: 0.0,
        worst_params: None,
    };
    let mut worst = 0.0;
    for i in 0..cfg.draws {
        let params = random_params(&mut draws, cfg.max_d, cfg.max_beta);
        let e = check_path(&params, cfg.horizon, RngStream::new(cfg.seed, i as u64))?;
        if !e.martingale {
            report.martingale_skipped += 1;
        }
        report.reconstruction = report.reconstruction.max(e.reconstruction);
        report.trace_sigma = report.trace_sigma.max(e.trace_sigma);
        report.trace_qv_m = report.trace_qv_m.max(e.trace_qv_m);
        report.trace_qv_n = report.trace_qv_n.max(e.trace_qv_n);
        let m = e.reconstruction.max(e.trace_sigma).max(e.trace_qv_m).max(e.trace_qv_n);
        if m > worst {
            worst = m;
            report.worst_params = Some(params);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSuiteConfig {
    pub histories: usize,
    pub max_n: usize,
    pub max_d: usize,
    pub max_beta: f64,
    pub seed: u64,
}

impl Default for OracleSuiteConfig {
    fn default() -> Self {
        Self { histories: 500, max_n: 50, max_d: 3, max_beta: 5.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSuiteReport {
    pub histories: usize,
    /// `E[X_{n+1} | F_n]`: closed form against enumeration, relative to `max(1, |entries|)`.
    pub mean: f64,
    /// `E[ε ε^T | F_n]`: closed form against enumeration, relative to `max(1, |entries|)`.
    pub second_moment: f64,
    /// `|Σ pmf - 1|`
    pub normalisation: f64,
}

impl OracleSuiteReport {
    pub fn passed(&self) -> bool {
        self.mean <= ORACLE_TOLERANCE && self.second_moment <= ORACLE_TOLERANCE && self.normalisation <= ORACLE_TOLERANCE
    }
}

fn max_rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let scale = x.iter().chain(y).fold(1.0f64, |m, v| m.max(v.abs()));
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

pub fn oracle_suite(cfg: &OracleSuiteConfig) -> marw::Result<OracleSuiteReport> {
    let mut draws = RngStream::new(cfg.seed, DRAW_STREAM - 1);
    let mut report = OracleSuiteReport { histories: cfg.histories, mean: 0.0, second_moment: 0.0, normalisation: 0.0 };
    for i in 0..cfg.histories {
        let params = random_params(&mut draws, cfg.max_d, cfg.max_beta);
        let n = draws.gen_range(1..=cfg.max_n);
        let cache = SequenceCache::new(&params, n + 1)?;
        let mut walk = Walk::new(&cache, RngStream::new(cfg.seed ^ 0x5eed, i as u64), WalkOptions::default())?;
        walk.run_to(n)?;
        let st = walk.state();
        let pmf = conditional_step_distribution(st, &params, &cache)?;
        report.normalisation = report.normalisation.max((pmf.iter().sum::<f64>() - 1.0).abs());
        let enumerated = pmf_mean(&pmf, params.d);
        let closed = conditional_mean(st, &params, &cache)?;
        report.mean = report.mean.max(max_rel_diff(&enumerated, &closed));
        let e2 = enumerated_eps_second_moment(st, &params, &cache)?;
        let c2 = conditional_eps_covariance(&params, n, cache.mu(n + 1)?, &st.y, &st.occupation);
        report.second_moment = report.second_moment.max(max_rel_diff(&e2, &c2));
    }
    Ok(report)
}
