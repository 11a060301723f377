//! Model parameters and the regime classifier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the band around the critical memory parameter treated as
/// critical when the inputs are not exact rationals.
pub const CRITICAL_TOLERANCE: f64 = 1e-12;

/// Below this `|β - a(β+1)|` the correlated martingale decomposition is singular.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// A non-negative rational `num / den`, used to pin `p` and `β` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::InvalidParams(format!("rational {num}/{den} needs a positive denominator")));
        }
        let g = gcd(num.unsigned_abs(), den as u64).max(1) as i64;
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `a/b`, integers and plain decimals (`0.75` becomes `3/4`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParams(format!("cannot read {s:?} as an exact rational"));
        if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            return Rational::new(n, d);
        }
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) || frac_part.len() > 15 {
            return Err(bad());
        }
        let den = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(bad)?;
        let digits = format!("{int_part}{frac_part}");
        let mut num: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
        if neg {
            num = -num;
        }
        Rational::new(num, den)
    }
}

/// Exact inputs retained next to the floating values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactInputs {
    pub p: Rational,
    pub beta: Rational,
}

/// `(d, p, β)` with the derived drift `a = (2dp - 1)/(2d - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub p: f64,
    pub beta: f64,
    pub a: f64,
    pub exact: Option<ExactInputs>,
}

impl ModelParams {
    pub fn new(d: usize, p: f64, beta: f64) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParams(format!("dimension d must be >= 1, got {d}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("memory parameter p must lie in [0, 1], got {p}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!("amnesia parameter beta must be finite and >= 0, got {beta}")));
        }
        let df = d as f64;
        let a = (2.0 * df * p - 1.0) / (2.0 * df - 1.0);
        Ok(Self { d, p, beta, a, exact: None })
    }

    pub fn from_rationals(d: usize, p: Rational, beta: Rational) -> Result<Self> {
        let mut params = Self::new(d, p.to_f64(), beta.to_f64())?;
        params.exact = Some(ExactInputs { p, beta });
        Ok(params)
    }

    /// `a(β+1)`, the growth rate of `E[Y_n]`.
    pub fn memory_drift(&self) -> f64 {
        self.a * (self.beta + 1.0)
    }

    /// `a(β+1) - β`, the superdiffusive scaling exponent.
    pub fn growth_exponent(&self) -> f64 {
        self.memory_drift() - self.beta
    }

    /// `p_c = (4dβ + 2d + 1) / (4d(β+1))`.
    pub fn critical_p(&self) -> f64 {
        let df = self.d as f64;
        (4.0 * df * self.beta + 2.0 * df + 1.0) / (4.0 * df * (self.beta + 1.0))
    }

    pub fn is_singular(&self) -> bool {
        (self.beta - self.memory_drift()).abs() < SINGULAR_TOLERANCE
    }

    /// `a(β+1) / (β - a(β+1))`, the weight of `M_n` in `S_n = N_n - κ (a_n μ_n)^{-1} M_n`.
    pub fn decomposition_coefficient(&self) -> Result<f64> {
        if self.is_singular() {
            return Err(Error::SingularDecomposition);
        }
        Ok(self.memory_drift() / (self.beta - self.memory_drift()))
    }

    /// `β / (β - a(β+1))`, the factor in front of the `N_n` increment.
    pub fn n_increment_factor(&self) -> Result<f64> {
        if self.is_singular() {
            return Err(Error::SingularDecomposition);
        }
        Ok(self.beta / (self.beta - self.memory_drift()))
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self).regime
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Diffusive,
    Critical,
    Superdiffusive,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Diffusive => "diffusive",
            Regime::Critical => "critical",
            Regime::Superdiffusive => "superdiffusive",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub regime: Regime,
    pub critical_p: f64,
    /// True when the tag came from exact rational arithmetic.
    pub exact: bool,
}

/// Classify by the sign of `p - p_c`.
pub fn classify_regime(params: &ModelParams) -> RegimeInfo {
    let critical_p = params.critical_p();
    if let Some(exact) = params.exact {
        if let Some(ord) = exact_cmp_to_critical(params.d, exact) {
            let regime = match ord {
                std::cmp::Ordering::Less => Regime::Diffusive,
                std::cmp::Ordering::Equal => Regime::Critical,
                std::cmp::Ordering::Greater => Regime::Superdiffusive,
            };
            return RegimeInfo { regime, critical_p, exact: true };
        }
    }
    let gap = params.p - critical_p;
    let regime = if gap.abs() <= CRITICAL_TOLERANCE {
        Regime::Critical
    } else if gap < 0.0 {
        Regime::Diffusive
    } else {
        Regime::Superdiffusive
    };
    RegimeInfo { regime, critical_p, exact: false }
}

/// Classify by comparing `a` with `1 - 1/(2(β+1))`; agrees with [`classify_regime`].
pub fn classify_regime_by_drift(params: &ModelParams) -> Regime {
    if let Some(exact) = params.exact {
        // a - a_c = 2d/(2d-1) (p - p_c), so the exact sign is shared.
        if let Some(ord) = exact_cmp_to_critical(params.d, exact) {
            return match ord {
                std::cmp::Ordering::Less => Regime::Diffusive,
                std::cmp::Ordering::Equal => Regime::Critical,
                std::cmp::Ordering::Greater => Regime::Superdiffusive,
            };
        }
    }
    let df = params.d as f64;
    let a_c = 1.0 - 1.0 / (2.0 * (params.beta + 1.0));
    let tol = CRITICAL_TOLERANCE * 2.0 * df / (2.0 * df - 1.0);
    let gap = params.a - a_c;
    if gap.abs() <= tol * (1.0 + 4.0 * f64::EPSILON) {
        Regime::Critical
    } else if gap < 0.0 {
        Regime::Diffusive
    } else {
        Regime::Superdiffusive
    }
}

/// `p` against `(4dβ + 2d + 1)/(4d(β+1))` in integer arithmetic; `None` on overflow.
fn exact_cmp_to_critical(d: usize, exact: ExactInputs) -> Option<std::cmp::Ordering> {
    let d = i128::try_from(d).ok()?;
    let (pn, pd) = (exact.p.num as i128, exact.p.den as i128);
    let (bn, bd) = (exact.beta.num as i128, exact.beta.den as i128);
    // p_c = (4d bn + (2d+1) bd) / (4d (bn + bd))
    let crit_num = (4 * d).checked_mul(bn)?.checked_add((2 * d + 1).checked_mul(bd)?)?;
    let crit_den = (4 * d).checked_mul(bn.checked_add(bd)?)?;
    let lhs = pn.checked_mul(crit_den)?;
    let rhs = crit_num.checked_mul(pd)?;
    Some(lhs.cmp(&rhs))
}
