//! The ensemble runner.
//!
//! Paths are grouped into fixed blocks of consecutive indices. Each block is
//! accumulated in path order, and blocks are merged by a pairwise tree over
//! block order, so the result does not depend on how blocks were scheduled.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::params::{ModelParams, Regime};
use crate::rng::RngStream;
use crate::sequences::SequenceCache;
use crate::walk::{Walk, WalkOptions};

use super::config::EnsembleConfig;
use super::moments::{merge_tree, RunningMoments};

/// Offsets of the per-checkpoint features inside the flat feature vector.
///
/// Per checkpoint: `S` (d), upper triangle of `S S^T`, `‖S‖²`, `G` (d),
/// upper triangle of `G G^T`, `‖G‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub d: usize,
    pub checkpoints: usize,
}

impl FeatureLayout {
    pub fn tri(&self) -> usize {
        self.d * (self.d + 1) / 2
    }

    pub fn per_checkpoint(&self) -> usize {
        2 * (self.d + self.tri() + 1)
    }

    pub fn len(&self) -> usize {
        self.checkpoints * self.per_checkpoint()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, c: usize, i: usize) -> usize {
        c * self.per_checkpoint() + i
    }

    /// Entry `(i, j)` with `i ≤ j` of the upper triangle.
    pub fn outer(&self, c: usize, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        c * self.per_checkpoint() + self.d + tri_index(self.d, i, j)
    }

    pub fn sq_norm(&self, c: usize) -> usize {
        c * self.per_checkpoint() + self.d + self.tri()
    }

    pub fn barycenter_offset(&self) -> usize {
        self.d + self.tri() + 1
    }

    pub fn bary_position(&self, c: usize, i: usize) -> usize {
        self.position(c, i) + self.barycenter_offset()
    }

    pub fn bary_outer(&self, c: usize, i: usize, j: usize) -> usize {
        self.outer(c, i, j) + self.barycenter_offset()
    }

    pub fn bary_sq_norm(&self, c: usize) -> usize {
        self.sq_norm(c) + self.barycenter_offset()
    }
}

fn tri_index(d: usize, i: usize, j: usize) -> usize {
    // rows 0..i hold d + (d-1) + ... + (d-i+1) entries
    i * d - i * i.saturating_sub(1) / 2 + (j - i)
}

/// How blocks are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Everything accumulated over the finished paths, in path order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleData {
    pub layout: FeatureLayout,
    pub moments: RunningMoments,
    pub completed_paths: u64,
    pub completed_blocks: usize,
    pub total_blocks: usize,
    /// Per path, per checkpoint QSL trace (`NaN` where the normaliser is not positive).
    pub qsl_traces: Vec<f64>,
    /// Per path, diagonal of the QSL matrix at the horizon.
    pub qsl_diag: Vec<f64>,
    pub bary_qsl_traces: Vec<f64>,
    /// Per path `n^{-e} S_n` at the horizon.
    pub l_hat: Vec<f64>,
    /// Per path `(1+e) n^{-e} G_n` at the horizon.
    pub g_hat: Vec<f64>,
    /// Per path diagonal of `Σ_n / (n μ_{n+1})` at the horizon.
    pub sigma_diag: Vec<f64>,
    pub mdp_hits: Vec<u64>,
}

/// Per-step normalisation of the quadratic strong law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QslKind {
    /// weight `1/k²`, normaliser `log n`
    Diffusive,
    /// weight `1/(k log k)²` for `k ≥ 2`, normaliser `log log n`
    Critical,
}

impl QslKind {
    fn for_regime(regime: Regime) -> Option<Self> {
        match regime {
            Regime::Diffusive => Some(QslKind::Diffusive),
            Regime::Critical => Some(QslKind::Critical),
            Regime::Superdiffusive => None,
        }
    }

    #[inline]
    fn weight(self, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            QslKind::Diffusive => 1.0 / (kf * kf),
            QslKind::Critical => {
                if k < 2 {
                    0.0
                } else {
                    let x = kf * kf.ln();
                    1.0 / (x * x)
                }
            }
        }
    }

    fn normaliser(self, n: usize) -> Option<f64> {
        let v = match self {
            QslKind::Diffusive => (n as f64).ln(),
            QslKind::Critical => (n as f64).ln().ln(),
        };
        (v > 0.0 && v.is_finite()).then_some(v)
    }
}

struct Context<'a> {
    config: &'a EnsembleConfig,
    cache: &'a SequenceCache,
    layout: FeatureLayout,
    qsl: Option<QslKind>,
    growth_exponent: f64,
    /// `a_n μ_n / (ϑ_n √w_n)` at the horizon.
    mdp_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct BlockResult {
    moments: RunningMoments,
    paths: u64,
    qsl_traces: Vec<f64>,
    qsl_diag: Vec<f64>,
    bary_qsl_traces: Vec<f64>,
    l_hat: Vec<f64>,
    g_hat: Vec<f64>,
    sigma_diag: Vec<f64>,
    mdp_hits: Vec<u64>,
}

impl<'a> Context<'a> {
    fn new(config: &'a EnsembleConfig, cache: &'a SequenceCache) -> Result<Self> {
        let params: &ModelParams = &config.params;
        let regime = params.regime();
        let est = &config.estimators;
        let qsl = if est.qsl || est.barycenter_qsl { QslKind::for_regime(regime) } else { None };
        let mdp_factor = match &est.mdp {
            Some(mdp) => {
                if regime == Regime::Superdiffusive {
                    return Err(Error::WrongRegime {
                        quantity: "moderate deviation tail",
                        expected: "diffusive or critical",
                        actual: regime,
                    });
                }
                let n = config.horizon;
                let theta = (n as f64).powf(mdp.eta);
                Some(cache.a_mu(n)?.abs() / (theta * cache.w(n)?.sqrt()))
            }
            None => None,
        };
        if est.l_beta && regime != Regime::Superdiffusive {
            return Err(Error::WrongRegime { quantity: "L_beta estimator", expected: "superdiffusive", actual: regime });
        }
        Ok(Self {
            config,
            cache,
            layout: FeatureLayout { d: params.d, checkpoints: config.checkpoints.len() },
            qsl,
            growth_exponent: params.growth_exponent(),
            mdp_factor,
        })
    }

    fn run_block(&self, block: usize) -> Result<BlockResult> {
        let cfg = self.config;
        let first = block as u64 * cfg.block_size as u64;
        let last = (first + cfg.block_size as u64).min(cfg.num_paths);
        let d = self.layout.d;
        let k = cfg.checkpoints.len();
        let est = &cfg.estimators;
        let count = (last - first) as usize;
        let mut out = BlockResult {
            moments: RunningMoments::new(self.layout.len()),
            paths: 0,
            qsl_traces: Vec::with_capacity(if est.qsl { count * k } else { 0 }),
            qsl_diag: Vec::with_capacity(if est.qsl { count * d } else { 0 }),
            bary_qsl_traces: Vec::with_capacity(if est.barycenter_qsl { count * k } else { 0 }),
            l_hat: Vec::new(),
            g_hat: Vec::new(),
            sigma_diag: Vec::new(),
            mdp_hits: vec![0; est.mdp.as_ref().map_or(0, |m| m.radii.len())],
        };
        let mut features = vec![0.0; self.layout.len()];
        for path in first..last {
            self.run_path(path, &mut features, &mut out)?;
            out.moments.push(&features);
            out.paths += 1;
        }
        Ok(out)
    }

    fn run_path(&self, path: u64, features: &mut [f64], out: &mut BlockResult) -> Result<()> {
        let cfg = self.config;
        let est = &cfg.estimators;
        let layout = self.layout;
        let d = layout.d;
        let mut walk = Walk::new(self.cache, RngStream::new(cfg.seed, path), WalkOptions::default())?;
        let track_qsl = est.qsl && self.qsl.is_some();
        let track_bary = est.barycenter_qsl && self.qsl.is_some();
        let mut qsl_diag = vec![0.0; d];
        let mut bary_sum = 0.0;
        if let Some(kind) = self.qsl {
            let w = kind.weight(1);
            let st = walk.state();
            for i in 0..d {
                qsl_diag[i] += w * (st.position[i] * st.position[i]) as f64;
            }
            bary_sum += w * st.sq_norm as f64;
        }
        for (c, &target) in cfg.checkpoints.iter().enumerate() {
            if track_qsl || track_bary {
                let kind = self.qsl.unwrap();
                while walk.time() < target {
                    walk.step()?;
                    let st = walk.state();
                    let n = st.n;
                    let w = kind.weight(n);
                    if track_qsl {
                        for i in 0..d {
                            let s = st.position[i] as f64;
                            qsl_diag[i] += w * s * s;
                        }
                    }
                    if track_bary {
                        let t2: f64 = st.position_sum.iter().map(|&t| (t as f64) * (t as f64)).sum();
                        let inv = 1.0 / n as f64;
                        bary_sum += w * t2 * inv * inv;
                    }
                }
            } else {
                walk.run_to(target)?;
            }
            self.write_features(c, walk.state(), features);
            if let Some(kind) = self.qsl {
                let norm = kind.normaliser(target);
                if track_qsl {
                    out.qsl_traces.push(norm.map_or(f64::NAN, |z| qsl_diag.iter().sum::<f64>() / z));
                }
                if track_bary {
                    out.bary_qsl_traces.push(norm.map_or(f64::NAN, |z| bary_sum / z));
                }
            }
        }
        walk.run_to(cfg.horizon)?;
        let st = walk.state();
        let n = st.n;
        if track_qsl {
            let z = self.qsl.unwrap().normaliser(n).unwrap_or(f64::NAN);
            out.qsl_diag.extend(qsl_diag.iter().map(|q| q / z));
        }
        if est.l_beta {
            let scale = (n as f64).powf(-self.growth_exponent);
            let g_scale = scale * (1.0 + self.growth_exponent) / n as f64;
            out.l_hat.extend(st.position.iter().map(|&s| s as f64 * scale));
            out.g_hat.extend(st.position_sum.iter().map(|&t| t as f64 * g_scale));
        }
        if est.sigma_ratio {
            // n μ_{n+1} = (β+1) C_n
            let denom = (cfg.params.beta + 1.0) * self.cache.cum_mu(n)?;
            out.sigma_diag.extend(st.occupation.iter().map(|o| o / denom));
        }
        if let (Some(mdp), Some(f)) = (&est.mdp, self.mdp_factor) {
            let stat = f * (st.sq_norm as f64).sqrt();
            for (h, &r) in out.mdp_hits.iter_mut().zip(&mdp.radii) {
                if stat >= r {
                    *h += 1;
                }
            }
        }
        Ok(())
    }

    fn write_features(&self, c: usize, st: &crate::walk::WalkState, features: &mut [f64]) {
        let l = self.layout;
        let d = l.d;
        let inv_n = 1.0 / st.n as f64;
        for i in 0..d {
            let si = st.position[i] as f64;
            let gi = st.position_sum[i] as f64 * inv_n;
            features[l.position(c, i)] = si;
            features[l.bary_position(c, i)] = gi;
            for j in i..d {
                let sj = st.position[j] as f64;
                let gj = st.position_sum[j] as f64 * inv_n;
                features[l.outer(c, i, j)] = si * sj;
                features[l.bary_outer(c, i, j)] = gi * gj;
            }
        }
        features[l.sq_norm(c)] = st.sq_norm as f64;
        let g2: f64 = st.position_sum.iter().map(|&t| (t as f64 * inv_n).powi(2)).sum();
        features[l.bary_sq_norm(c)] = g2;
    }
}

/// Run the ensemble with the default execution mode.
pub fn run_ensemble_data(config: &EnsembleConfig) -> Result<EnsembleData> {
    run_ensemble_data_with(config, Execution::default())
}

pub fn run_ensemble_data_with(config: &EnsembleConfig, execution: Execution) -> Result<EnsembleData> {
    config.validate()?;
    let cache = SequenceCache::new(&config.params, config.horizon)?;
    let ctx = Context::new(config, &cache)?;
    let total_blocks = config.num_paths.div_ceil(config.block_size as u64) as usize;
    let deadline = config.time_limit.map(|t| Instant::now() + t);
    let job = |b: usize| -> Result<Option<BlockResult>> {
        if deadline.map_or(false, |dl| Instant::now() >= dl) {
            return Ok(None);
        }
        ctx.run_block(b).map(Some)
    };
    let results: Vec<Result<Option<BlockResult>>> = match execution {
        Execution::Sequential => (0..total_blocks).map(job).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            match config.workers {
                Some(w) => {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(w)
                        .build()
                        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
                    pool.install(|| (0..total_blocks).into_par_iter().map(job).collect())
                }
                None => (0..total_blocks).into_par_iter().map(job).collect(),
            }
        }
    };
    let mut blocks = Vec::with_capacity(total_blocks);
    for r in results {
        if let Some(b) = r? {
            blocks.push(b);
        }
    }
    Ok(aggregate(ctx.layout, blocks, total_blocks, config))
}

fn aggregate(layout: FeatureLayout, blocks: Vec<BlockResult>, total_blocks: usize, config: &EnsembleConfig) -> EnsembleData {
    let n_radii = config.estimators.mdp.as_ref().map_or(0, |m| m.radii.len());
    let mut data = EnsembleData {
        layout,
        moments: RunningMoments::new(layout.len()),
        completed_paths: 0,
        completed_blocks: blocks.len(),
        total_blocks,
        qsl_traces: Vec::new(),
        qsl_diag: Vec::new(),
        bary_qsl_traces: Vec::new(),
        l_hat: Vec::new(),
        g_hat: Vec::new(),
        sigma_diag: Vec::new(),
        mdp_hits: vec![0; n_radii],
    };
    let mut parts = Vec::with_capacity(blocks.len());
    for b in blocks {
        data.completed_paths += b.paths;
        data.qsl_traces.extend(b.qsl_traces);
        data.qsl_diag.extend(b.qsl_diag);
        data.bary_qsl_traces.extend(b.bary_qsl_traces);
        data.l_hat.extend(b.l_hat);
        data.g_hat.extend(b.g_hat);
        data.sigma_diag.extend(b.sigma_diag);
        for (t, h) in data.mdp_hits.iter_mut().zip(b.mdp_hits) {
            *t += h;
        }
        parts.push(b.moments);
    }
    data.moments = merge_tree(parts, layout.len());
    data
}
