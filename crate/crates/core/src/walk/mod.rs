//! Exact simulation of single paths.
//!
//! At time `n ≥ 1` the walker draws `β_{n+1} = k` with probability `μ_k / C_n`,
//! draws a matrix `A_{n+1}`, and steps `X_{n+1} = A_{n+1} X_k`. The first step
//! is uniform over the `2d` neighbours.

pub mod codes;
pub mod martingale;
pub mod oracle;
pub mod path;
pub mod sampler;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::RngStream;
use crate::sequences::SequenceCache;

pub use codes::{Direction, MatrixCode};
pub use martingale::MartingaleView;
pub use path::{simulate_path, write_path_csv, PathOptions, Snapshot};
pub use sampler::{sample_step_matrix, MemorySampler};

/// Per-path state at time `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkState {
    pub n: usize,
    pub position: Vec<i64>,
    /// `Y_n = Σ_{k≤n} μ_k X_k`
    pub y: Vec<f64>,
    /// Step codes `X_1..X_n`; empty once the history has been dropped.
    pub steps: Vec<u8>,
    /// `N^X_n(j) = Σ_{k≤n} μ_k 1{X_k^j ≠ 0}`, the diagonal of `Σ_n`.
    pub occupation: Vec<f64>,
    /// `Σ_{k≤n} S_k`
    pub position_sum: Vec<i64>,
    /// `‖S_n‖²`
    pub sq_norm: i64,
}

impl WalkState {
    fn start(d: usize, first: Direction, capacity: usize) -> Self {
        let mut position = vec![0i64; d];
        position[first.axis()] = first.sign();
        let mut occupation = vec![0.0; d];
        occupation[first.axis()] = 1.0;
        Self {
            n: 1,
            y: position.iter().map(|&x| x as f64).collect(),
            position_sum: position.clone(),
            position,
            steps: {
                let mut v = Vec::with_capacity(capacity.max(1));
                v.push(first.0);
                v
            },
            occupation,
            sq_norm: 1,
        }
    }

    pub fn has_history(&self) -> bool {
        self.steps.len() == self.n
    }

    pub fn step_at(&self, k: usize) -> Direction {
        Direction(self.steps[k - 1])
    }

    /// `Tr Σ_n`
    pub fn trace_sigma(&self) -> f64 {
        self.occupation.iter().sum()
    }

    /// `G_n = S_1 + … + S_n` over `n`.
    pub fn barycenter(&self) -> Vec<f64> {
        self.position_sum.iter().map(|&s| s as f64 / self.n as f64).collect()
    }

    /// `Y_n` rebuilt from the stored history.
    pub fn y_from_history(&self, mu: &[f64]) -> Result<Vec<f64>> {
        if !self.has_history() {
            return Err(Error::HistoryUnavailable);
        }
        let mut y = vec![0.0; self.position.len()];
        for (i, &code) in self.steps.iter().enumerate() {
            let dir = Direction(code);
            y[dir.axis()] += dir.sign() as f64 * mu[i + 1];
        }
        Ok(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WalkOptions {
    pub track_martingales: bool,
}

/// One path. Runs up to time `cache.horizon()`.
#[derive(Debug, Clone)]
pub struct Walk<'a> {
    params: ModelParams,
    cache: &'a SequenceCache,
    mu: &'a [f64],
    cum: &'a [f64],
    sampler: MemorySampler,
    table: Vec<u8>,
    rng: RngStream,
    state: WalkState,
    martingale: Option<MartingaleView>,
    martingale_error: Option<Error>,
}

impl<'a> Walk<'a> {
    pub fn new(cache: &'a SequenceCache, mut rng: RngStream, options: WalkOptions) -> Result<Self> {
        let params = *cache.params();
        let mu = cache.mu_table().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "mu_n overflows f64 before n = {} at beta = {}; shorten the horizon",
                cache.horizon(),
                params.beta
            ))
        })?;
        let d = params.d;
        let first = Direction(rng.below(2 * d as u64) as u8);
        let state = WalkState::start(d, first, cache.horizon());
        let (martingale, martingale_error) = if options.track_martingales {
            let x1: Vec<f64> = state.y.clone();
            match MartingaleView::start(&params, &x1) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e)),
            }
        } else {
            (None, None)
        };
        Ok(Self {
            params,
            cache,
            mu,
            cum: cache.cum_mu_table(),
            sampler: MemorySampler::for_beta(params.beta),
            table: codes::transform_table(d),
            rng,
            state,
            martingale,
            martingale_error,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn cache(&self) -> &'a SequenceCache {
        self.cache
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn into_state(self) -> WalkState {
        self.state
    }

    pub fn time(&self) -> usize {
        self.state.n
    }

    pub fn martingale(&self) -> Option<&MartingaleView> {
        self.martingale.as_ref()
    }

    /// Why the martingale view is off, if it was requested and is off.
    pub fn martingale_error(&self) -> Option<&Error> {
        self.martingale_error.as_ref()
    }

    /// Advance one step and return `X_{n+1}`.
    #[inline]
    pub fn step(&mut self) -> Result<Direction> {
        let n = self.state.n;
        if n >= self.cache.horizon() {
            return Err(Error::OutOfRange { n: n + 1, horizon: self.cache.horizon() });
        }
        let d = self.params.d;
        let k = self.sampler.sample(n, self.cum, &mut self.rng);
        let recalled = self.state.steps[k - 1] as usize;
        let code = sampler::sample_matrix_index(self.params.p, d, &mut self.rng);
        let next = Direction(self.table[code * 2 * d + recalled]);
        if self.martingale.is_some() {
            self.advance_martingale(n, next);
        }
        self.apply(n, next);
        Ok(next)
    }

    #[inline]
    fn apply(&mut self, n: usize, dir: Direction) {
        let st = &mut self.state;
        let axis = dir.axis();
        let sign = dir.sign();
        let old = st.position[axis];
        st.position[axis] = old + sign;
        st.sq_norm += 2 * sign * old + 1;
        let mu_next = self.mu[n + 1];
        st.y[axis] += sign as f64 * mu_next;
        st.occupation[axis] += mu_next;
        st.steps.push(dir.0);
        st.n = n + 1;
        for (acc, &s) in st.position_sum.iter_mut().zip(&st.position) {
            *acc += s;
        }
    }

    fn advance_martingale(&mut self, n: usize, next: Direction) {
        let a_next = match self.cache.a(n + 1) {
            Ok(v) => v,
            Err(e) => {
                self.martingale = None;
                self.martingale_error = Some(e);
                return;
            }
        };
        let x: Vec<f64> = next.to_vector(self.params.d).into_iter().map(|v| v as f64).collect();
        let st = &self.state;
        if let Some(view) = self.martingale.as_mut() {
            view.advance(&self.params, n, a_next, self.mu[n + 1], &st.y, &st.occupation, &x);
        }
    }

    /// Run until time `n`.
    pub fn run_to(&mut self, n: usize) -> Result<()> {
        if n > self.cache.horizon() || self.martingale.is_some() {
            while self.state.n < n {
                self.step()?;
            }
        } else {
            self.run_plain(n);
        }
        Ok(())
    }

    /// `step` without the martingale view, in a loop with the state borrowed once.
    /// Draws the same variates in the same order.
    fn run_plain(&mut self, target: usize) {
        let d = self.params.d;
        let p = self.params.p;
        let width = 2 * d;
        let (mu, cum, table, sampler) = (self.mu, self.cum, &self.table[..], self.sampler);
        let rng = &mut self.rng;
        let st = &mut self.state;
        let mut n = st.n;
        let mut sq = st.sq_norm;
        while n < target {
            let k = sampler.sample(n, cum, rng);
            let recalled = st.steps[k - 1] as usize;
            let code = sampler::sample_matrix_index(p, d, rng);
            let dir = Direction(table[code * width + recalled]);
            let axis = dir.axis();
            let sign = dir.sign();
            let old = st.position[axis];
            st.position[axis] = old + sign;
            sq += 2 * sign * old + 1;
            let mu_next = mu[n + 1];
            st.y[axis] += sign as f64 * mu_next;
            st.occupation[axis] += mu_next;
            st.steps.push(dir.0);
            n += 1;
            for (acc, &s) in st.position_sum.iter_mut().zip(&st.position) {
                *acc += s;
            }
        }
        st.n = n;
        st.sq_norm = sq;
    }
}
