//! Checkpointed single-path runs and the path CSV format.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::RngStream;
use crate::sequences::SequenceCache;

use super::{Walk, WalkOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSnapshot {
    pub m: Vec<f64>,
    pub n: Vec<f64>,
    pub eps_last: Vec<f64>,
    /// `S_n` rebuilt from `M_n` and `N_n`.
    pub reconstructed: Vec<f64>,
    pub trace_qv_m: f64,
    pub trace_qv_m_scalar: f64,
    pub trace_qv_n: f64,
    pub trace_qv_n_scalar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: usize,
    pub position: Vec<i64>,
    pub y: Vec<f64>,
    pub position_sum: Vec<i64>,
    pub trace_sigma: f64,
    pub cum_mu: f64,
    pub martingale: Option<MartingaleSnapshot>,
}

impl Snapshot {
    pub fn capture(walk: &Walk<'_>) -> Result<Self> {
        let st = walk.state();
        let n = st.n;
        let cache = walk.cache();
        let martingale = match walk.martingale() {
            Some(view) => Some(MartingaleSnapshot {
                m: view.m.clone(),
                n: view.n.clone(),
                eps_last: view.eps_last.clone(),
                reconstructed: view.reconstruct_position(cache.a_mu(n)?),
                trace_qv_m: view.trace_qv_m(),
                trace_qv_m_scalar: view.trace_qv_m_scalar(n, cache)?,
                trace_qv_n: view.trace_qv_n(),
                trace_qv_n_scalar: view.trace_qv_n_scalar(n),
            }),
            None => None,
        };
        Ok(Self {
            n,
            position: st.position.clone(),
            y: st.y.clone(),
            position_sum: st.position_sum.clone(),
            trace_sigma: st.trace_sigma(),
            cum_mu: cache.cum_mu(n)?,
            martingale,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PathOptions {
    pub track_martingales: bool,
}

/// Checks that checkpoints are strictly increasing and inside `1..=horizon`.
pub fn validate_checkpoints(horizon: usize, checkpoints: &[usize]) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be >= 1".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("checkpoints must be strictly increasing".into()));
    }
    if let (Some(&first), Some(&last)) = (checkpoints.first(), checkpoints.last()) {
        if first == 0 || last > horizon {
            return Err(Error::InvalidConfig(format!("checkpoints must lie in 1..={horizon}")));
        }
    }
    Ok(())
}

/// Run path `stream_id` of `seed` to `horizon` and snapshot it at each checkpoint.
pub fn simulate_path(
    params: &ModelParams,
    horizon: usize,
    checkpoints: &[usize],
    seed: u64,
    stream_id: u64,
    options: PathOptions,
) -> Result<Vec<Snapshot>> {
    validate_checkpoints(horizon, checkpoints)?;
    let cache = SequenceCache::new(params, horizon)?;
    simulate_path_with_cache(&cache, horizon, checkpoints, RngStream::new(seed, stream_id), options)
}

pub fn simulate_path_with_cache(
    cache: &SequenceCache,
    horizon: usize,
    checkpoints: &[usize],
    rng: RngStream,
    options: PathOptions,
) -> Result<Vec<Snapshot>> {
    validate_checkpoints(horizon, checkpoints)?;
    if cache.horizon() < horizon {
        return Err(Error::OutOfRange { n: horizon, horizon: cache.horizon() });
    }
    let mut walk = Walk::new(cache, rng, WalkOptions { track_martingales: options.track_martingales })?;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        walk.run_to(c)?;
        out.push(Snapshot::capture(&walk)?);
    }
    Ok(out)
}

/// Header `n,S_1..S_d,Y_1..Y_d,M_1..M_d,N_1..N_d`; martingale columns are `nan` when unavailable.
/// Shortest round-trip form, with `-0` printed as `0`.
fn fmt_float(v: f64) -> String {
    (v + 0.0).to_string()
}

pub fn write_path_csv<W: Write>(mut out: W, d: usize, snapshots: &[Snapshot]) -> io::Result<()> {
    let mut header = vec!["n".to_string()];
    for name in ["S", "Y", "M", "N"] {
        header.extend((1..=d).map(|i| format!("{name}_{i}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for s in snapshots {
        let mut row = vec![s.n.to_string()];
        row.extend(s.position.iter().map(|v| v.to_string()));
        row.extend(s.y.iter().map(|v| fmt_float(*v)));
        match &s.martingale {
            Some(m) => {
                row.extend(m.m.iter().map(|v| fmt_float(*v)));
                row.extend(m.n.iter().map(|v| fmt_float(*v)));
            }
            None => row.extend(std::iter::repeat("nan".to_string()).take(2 * d)),
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_checkpoints() {
        let p = ModelParams::new(1, 0.5, 0.0).unwrap();
        assert!(simulate_path(&p, 0, &[], 1, 0, PathOptions::default()).is_err());
        assert!(simulate_path(&p, 10, &[5, 5], 1, 0, PathOptions::default()).is_err());
        assert!(simulate_path(&p, 10, &[0], 1, 0, PathOptions::default()).is_err());
        assert!(simulate_path(&p, 10, &[11], 1, 0, PathOptions::default()).is_err());
    }

    #[test]
    fn trace_sigma_matches_closed_form() {
        let p = ModelParams::new(2, 0.7, 1.0).unwrap();
        let snaps = simulate_path(&p, 3, &[1, 2, 3], 4, 0, PathOptions::default()).unwrap();
        // n = 3, beta = 1: 3 * mu_4 / 2 = 3 * 4 / 2
        assert!((snaps[2].trace_sigma - 6.0).abs() < 1e-12);
        assert!((snaps[2].cum_mu - 6.0).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams::new(2, 0.6, 0.5).unwrap();
        let snaps = simulate_path(&p, 20, &[10, 20], 1, 2, PathOptions { track_martingales: true }).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, 2, &snaps).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,S_1,S_2,Y_1,Y_2,M_1,M_2,N_1,N_2");
        assert_eq!(lines.count(), 2);
    }
}
