//! Exact first and second moments of `S_n`, `Y_n` and `T_n = S_1 + … + S_n`,
//! iterated from the conditional mean `E[X_{n+1} | F_n] = g_n Y_n` with
//! `g_n = a(β+1)/(n μ_{n+1})`. Everything is a scalar because the law is
//! isotropic: `E[S_n S_n^T] = (ss/d) I`.

#![allow(dead_code)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMoments {
    pub n: usize,
    /// `E‖S_n‖²`
    pub ss: f64,
    /// `E⟨S_n, Y_n⟩`
    pub sy: f64,
    /// `E‖Y_n‖²`
    pub yy: f64,
    /// `E‖T_n‖²`
    pub tt: f64,
    pub ts: f64,
    pub ty: f64,
    pub mu: f64,
}

impl ExactMoments {
    /// `E‖G_n‖²` with `G_n = T_n / n`.
    pub fn barycenter(&self) -> f64 {
        self.tt / (self.n as f64 * self.n as f64)
    }
}

/// Iterate to every `n` in `at` (sorted) and return the moments there.
/// `a` is the drift `(2dp-1)/(2d-1)`.
pub fn exact_moments(a: f64, beta: f64, at: &[usize]) -> Vec<ExactMoments> {
    let c = a * (beta + 1.0);
    let mut m = ExactMoments { n: 1, ss: 1.0, sy: 1.0, yy: 1.0, tt: 1.0, ts: 1.0, ty: 1.0, mu: 1.0 };
    let mut out = Vec::with_capacity(at.len());
    let mut idx = 0;
    while idx < at.len() && at[idx] == 1 {
        out.push(m);
        idx += 1;
    }
    let last = at.last().copied().unwrap_or(1);
    while m.n < last {
        let n = m.n as f64;
        // μ_{n+1} = μ_n (β+n)/n
        let mu1 = m.mu * (beta + n) / n;
        let g = c / (n * mu1);
        let ss1 = m.ss + 2.0 * g * m.sy + 1.0;
        let sy1 = m.sy + mu1 * g * m.sy + g * m.yy + mu1;
        let yy1 = m.yy + 2.0 * mu1 * g * m.yy + mu1 * mu1;
        let ts_t = m.ts + g * m.ty;
        let ts1 = ts_t + ss1;
        let tt1 = m.tt + 2.0 * ts_t + ss1;
        let ty1 = m.ty * (1.0 + mu1 * g) + sy1;
        m = ExactMoments { n: m.n + 1, ss: ss1, sy: sy1, yy: yy1, tt: tt1, ts: ts1, ty: ty1, mu: mu1 };
        while idx < at.len() && at[idx] == m.n {
            out.push(m);
            idx += 1;
        }
    }
    out
}
