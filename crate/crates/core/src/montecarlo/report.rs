//! Ensemble reports and their JSON / CSV forms.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::params::{ModelParams, Regime};
use crate::theory::{self, TheoryPrediction};

use super::config::{EnsembleConfig, Estimators};
use super::ensemble::EnsembleData;
use super::estimators::{median, mdp_estimate, sample_estimate, Estimate, MdpEstimate};

/// Version of the JSON and CSV layouts.
pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub n: usize,
    pub mean_position: Vec<Estimate>,
    /// Row-major `E[S_n S_n^T]`.
    pub second_moment: Vec<Estimate>,
    pub msd: Estimate,
    /// `E‖S_n‖²` over `n`, `n log n` or `n^{2e}` by regime.
    pub msd_scaled: Estimate,
    pub msd_theory: Option<f64>,
    pub msd_z: Option<f64>,
    pub barycenter_second_moment: Vec<Estimate>,
    pub barycenter_msd: Estimate,
    /// `E‖G_n‖²` over `n` (diffusive, critical) or `n^{2e}` (superdiffusive).
    pub barycenter_msd_scaled: Estimate,
    pub barycenter_theory: Option<f64>,
    pub barycenter_z: Option<f64>,
    /// Median over paths of the QSL trace up to `n`.
    pub qsl_median: Option<f64>,
    pub barycenter_qsl_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslSummary {
    /// `"diffusive"` (`1/k²`, `log n`) or `"critical"` (`1/(k log k)²`, `log log n`).
    pub kind: Regime,
    pub median_trace: Option<f64>,
    pub median_diagonal: Vec<Option<f64>>,
    pub theory: Option<f64>,
    pub relative_error: Option<f64>,
    pub barycenter_median_trace: Option<f64>,
    pub barycenter_theory: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LBetaSummary {
    pub samples: u64,
    pub mean: Vec<Estimate>,
    /// `E‖L̂‖²`
    pub second_moment_trace: Estimate,
    pub theory_with_gamma: Option<f64>,
    pub theory_without_gamma: Option<f64>,
    pub z_with_gamma: Option<f64>,
    pub z_without_gamma: Option<f64>,
    /// `E‖(1+e) n^{-e} G_n‖²`
    pub barycenter_second_moment_trace: Estimate,
    /// Per-path `‖(1+e) n^{-e} G_n‖² - ‖n^{-e} S_n‖²`.
    pub paired_difference: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRatioSummary {
    /// `1/(d(β+1))`
    pub target: f64,
    pub median_diagonal: Vec<Option<f64>>,
    /// Share of paths whose every diagonal entry is within 5% of the target.
    pub fraction_within_5pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpSummary {
    pub eta: f64,
    pub n: usize,
    pub theta: f64,
    pub estimates: Vec<MdpEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub schema: u32,
    pub crate_version: String,
    pub params: ModelParams,
    pub regime: Regime,
    pub seed: u64,
    pub num_paths: u64,
    pub horizon: usize,
    pub block_size: usize,
    pub estimators: Estimators,
    pub completed_paths: u64,
    /// True when a time limit stopped the run; statistics cover `completed_paths` only.
    pub partial: bool,
    pub theory: TheoryPrediction,
    pub checkpoints: Vec<CheckpointStats>,
    pub qsl: Option<QslSummary>,
    pub l_beta: Option<LBetaSummary>,
    pub sigma_ratio: Option<SigmaRatioSummary>,
    pub mdp: Option<MdpSummary>,
}

fn estimate(data: &EnsembleData, i: usize) -> Estimate {
    Estimate { mean: data.moments.mean[i], se: data.moments.standard_error(i) }
}

/// `E‖S_n‖²` normaliser.
fn msd_scale(params: &ModelParams, n: usize) -> f64 {
    let nf = n as f64;
    match params.regime() {
        Regime::Diffusive => nf,
        Regime::Critical => nf * nf.ln(),
        Regime::Superdiffusive => nf.powf(2.0 * params.growth_exponent()),
    }
}

fn bary_scale(params: &ModelParams, n: usize) -> f64 {
    let nf = n as f64;
    match params.regime() {
        Regime::Superdiffusive => nf.powf(2.0 * params.growth_exponent()),
        _ => nf,
    }
}

/// Theory value of the scaled mean-square displacement; the superdiffusive
/// value carries the `Γ(β+1)²` factor.
pub fn msd_theory(params: &ModelParams) -> Option<f64> {
    let m = theory::msd_asymptote(1.0, params).ok()?;
    match params.regime() {
        Regime::Superdiffusive => m.constant_with_gamma,
        _ => Some(m.constant),
    }
}

/// Theory value of the scaled barycenter mean-square displacement.
pub fn barycenter_theory(params: &ModelParams) -> Option<f64> {
    let bc = theory::barycenter_constants(params).ok()?;
    match params.regime() {
        Regime::Diffusive => bc.diffusive_kernel_unit,
        Regime::Critical => None,
        Regime::Superdiffusive => bc.superdiffusive_second_moment,
    }
}

fn column_median(values: &[f64], stride: usize, col: usize) -> Option<f64> {
    let v: Vec<f64> = values.iter().skip(col).step_by(stride).copied().collect();
    median(&v)
}

impl EnsembleReport {
    pub fn build(config: &EnsembleConfig, data: &EnsembleData) -> Self {
        let params = config.params;
        let d = params.d;
        let l = data.layout;
        let k = config.checkpoints.len();
        let regime = params.regime();
        let msd_t = msd_theory(&params);
        let bary_t = barycenter_theory(&params);
        let mut checkpoints = Vec::with_capacity(k);
        for (c, &n) in config.checkpoints.iter().enumerate() {
            let mut second = Vec::with_capacity(d * d);
            let mut bary_second = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    second.push(estimate(data, l.outer(c, i, j)));
                    bary_second.push(estimate(data, l.bary_outer(c, i, j)));
                }
            }
            let msd = estimate(data, l.sq_norm(c));
            let msd_scaled = msd.scaled(1.0 / msd_scale(&params, n));
            let bmsd = estimate(data, l.bary_sq_norm(c));
            let bmsd_scaled = bmsd.scaled(1.0 / bary_scale(&params, n));
            checkpoints.push(CheckpointStats {
                n,
                mean_position: (0..d).map(|i| estimate(data, l.position(c, i))).collect(),
                second_moment: second,
                msd,
                msd_scaled,
                msd_theory: msd_t,
                msd_z: msd_t.and_then(|t| msd_scaled.z_score(t)),
                barycenter_second_moment: bary_second,
                barycenter_msd: bmsd,
                barycenter_msd_scaled: bmsd_scaled,
                barycenter_theory: bary_t,
                barycenter_z: bary_t.and_then(|t| bmsd_scaled.z_score(t)),
                qsl_median: (!data.qsl_traces.is_empty()).then(|| column_median(&data.qsl_traces, k, c)).flatten(),
                barycenter_qsl_median: (!data.bary_qsl_traces.is_empty())
                    .then(|| column_median(&data.bary_qsl_traces, k, c))
                    .flatten(),
            });
        }

        let est = &config.estimators;
        let qsl = (est.qsl || est.barycenter_qsl).then(|| qsl_summary(&params, data, k)).flatten();
        let l_beta = (est.l_beta && !data.l_hat.is_empty()).then(|| l_beta_summary(&params, data));
        let sigma_ratio = (est.sigma_ratio && !data.sigma_diag.is_empty()).then(|| {
            let target = 1.0 / (d as f64 * (params.beta + 1.0));
            let paths = data.sigma_diag.len() / d;
            let within = data
                .sigma_diag
                .chunks(d)
                .filter(|row| row.iter().all(|&x| ((x - target) / target).abs() <= 0.05))
                .count();
            SigmaRatioSummary {
                target,
                median_diagonal: (0..d).map(|i| column_median(&data.sigma_diag, d, i)).collect(),
                fraction_within_5pct: within as f64 / paths as f64,
            }
        });
        let mdp = est.mdp.as_ref().map(|m| {
            let n = config.horizon;
            let theta = (n as f64).powf(m.eta);
            MdpSummary {
                eta: m.eta,
                n,
                theta,
                estimates: m
                    .radii
                    .iter()
                    .zip(&data.mdp_hits)
                    .map(|(&r, &h)| mdp_estimate(r, h, data.completed_paths, theta * theta))
                    .collect(),
            }
        });

        Self {
            schema: REPORT_SCHEMA,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            params,
            regime,
            seed: config.seed,
            num_paths: config.num_paths,
            horizon: config.horizon,
            block_size: config.block_size,
            estimators: config.estimators.clone(),
            completed_paths: data.completed_paths,
            partial: data.completed_blocks < data.total_blocks,
            theory: TheoryPrediction::evaluate(&params),
            checkpoints,
            qsl,
            l_beta,
            sigma_ratio,
            mdp,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn final_checkpoint(&self) -> Option<&CheckpointStats> {
        self.checkpoints.last()
    }

    /// One row per checkpoint with the scalar summaries.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "n,msd,msd_se,msd_scaled,msd_scaled_se,msd_theory,msd_z,barycenter_msd,barycenter_msd_se,barycenter_scaled,barycenter_scaled_se,barycenter_theory,barycenter_z,qsl_median,barycenter_qsl_median"
        )?;
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for c in &self.checkpoints {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.n,
                f(Some(c.msd.mean)),
                f(c.msd.se),
                f(Some(c.msd_scaled.mean)),
                f(c.msd_scaled.se),
                f(c.msd_theory),
                f(c.msd_z),
                f(Some(c.barycenter_msd.mean)),
                f(c.barycenter_msd.se),
                f(Some(c.barycenter_msd_scaled.mean)),
                f(c.barycenter_msd_scaled.se),
                f(c.barycenter_theory),
                f(c.barycenter_z),
                f(c.qsl_median),
                f(c.barycenter_qsl_median),
            )?;
        }
        Ok(())
    }
}

fn qsl_summary(params: &ModelParams, data: &EnsembleData, k: usize) -> Option<QslSummary> {
    let d = params.d;
    let regime = params.regime();
    let (theory_value, bary_theory) = match regime {
        Regime::Diffusive => (
            theory::qsl_constant_diffusive(params).ok(),
            theory::barycenter_constants(params).ok().and_then(|b| b.diffusive_kernel_unit),
        ),
        Regime::Critical => (
            theory::critical_limit(params).ok().map(|c| c.qsl),
            theory::barycenter_constants(params).ok().and_then(|b| b.critical_qsl),
        ),
        Regime::Superdiffusive => return None,
    };
    let median_trace = (!data.qsl_traces.is_empty()).then(|| column_median(&data.qsl_traces, k, k - 1)).flatten();
    Some(QslSummary {
        kind: regime,
        median_trace,
        median_diagonal: if data.qsl_diag.is_empty() {
            Vec::new()
        } else {
            (0..d).map(|i| column_median(&data.qsl_diag, d, i)).collect()
        },
        theory: theory_value,
        relative_error: match (median_trace, theory_value) {
            (Some(m), Some(t)) => Some(((m - t) / t).abs()),
            _ => None,
        },
        barycenter_median_trace: (!data.bary_qsl_traces.is_empty())
            .then(|| column_median(&data.bary_qsl_traces, k, k - 1))
            .flatten(),
        barycenter_theory: bary_theory,
    })
}

fn l_beta_summary(params: &ModelParams, data: &EnsembleData) -> LBetaSummary {
    let d = params.d;
    let paths = data.l_hat.len() / d;
    let mean = (0..d)
        .map(|i| {
            let col: Vec<f64> = data.l_hat.iter().skip(i).step_by(d).copied().collect();
            sample_estimate(&col).unwrap()
        })
        .collect();
    let sq: Vec<f64> = data.l_hat.chunks(d).map(|r| r.iter().map(|x| x * x).sum()).collect();
    let gsq: Vec<f64> = data.g_hat.chunks(d).map(|r| r.iter().map(|x| x * x).sum()).collect();
    let diff: Vec<f64> = gsq.iter().zip(&sq).map(|(g, s)| g - s).collect();
    let second = sample_estimate(&sq).unwrap();
    let lm = theory::l_beta_moments(params).ok();
    let with = lm.as_ref().map(|l| l.second_moment.scalar);
    let without = lm.as_ref().map(|l| l.second_moment_without_gamma);
    LBetaSummary {
        samples: paths as u64,
        mean,
        second_moment_trace: second,
        theory_with_gamma: with,
        theory_without_gamma: without,
        z_with_gamma: with.and_then(|t| second.z_score(t)),
        z_without_gamma: without.and_then(|t| second.z_score(t)),
        barycenter_second_moment_trace: sample_estimate(&gsq).unwrap(),
        paired_difference: sample_estimate(&diff).unwrap(),
    }
}
