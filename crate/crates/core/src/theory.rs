//! Closed-form limit constants.
//!
//! Every matrix limit of the model is a scalar multiple of `(1/d) I_d`, so
//! constants are returned as that scalar, which is also the trace. Each
//! function checks the regime it is valid in and returns
//! [`Error::WrongRegime`] elsewhere.
//!
//! Notation: `c = a(β+1)`, `e = c - β` (also `a - β(1-a)`), `κ = c/(β - c)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{gamma, ln_gamma};
use crate::params::{classify_regime, ModelParams, Regime};

/// `scalar · (1/d) I_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicMatrix {
    pub dim: usize,
    pub scalar: f64,
}

impl IsotropicMatrix {
    pub fn new(dim: usize, scalar: f64) -> Self {
        Self { dim, scalar }
    }

    pub fn trace(&self) -> f64 {
        self.scalar
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.scalar / self.dim as f64
        } else {
            0.0
        }
    }

    /// Row-major dense form.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim;
        (0..d * d).map(|k| self.entry(k / d, k % d)).collect()
    }
}

fn require(params: &ModelParams, expected: Regime, quantity: &'static str) -> Result<()> {
    let actual = classify_regime(params).regime;
    if actual == expected {
        Ok(())
    } else {
        Err(Error::WrongRegime { quantity, expected: expected.as_str(), actual })
    }
}

fn require_nonsingular(params: &ModelParams) -> Result<()> {
    if params.is_singular() {
        Err(Error::SingularDecomposition)
    } else {
        Ok(())
    }
}

/// Diffusive quadratic strong law constant `(2β+1-a) / ((1-a)(1-2e))`.
///
/// The formula is finite on the singular set `β = a(β+1)` as well, where it
/// is the continuous extension of the mean-square constant.
pub fn qsl_constant_diffusive(params: &ModelParams) -> Result<f64> {
    require(params, Regime::Diffusive, "diffusive QSL constant")?;
    let (a, b, e) = (params.a, params.beta, params.growth_exponent());
    Ok((2.0 * b + 1.0 - a) / ((1.0 - a) * (1.0 - 2.0 * e)))
}

/// Coefficients `(A, B)` of `E[W_s W_t^T] = (A s (t/s)^e + B s) (1/d) I_d`.
fn w_kernel_coefficients(params: &ModelParams) -> (f64, f64, f64) {
    let (a, b) = (params.a, params.beta);
    let c = params.memory_drift();
    let e = a - b * (1.0 - a);
    let big_a = (c * (1.0 - a) + a * b) / ((2.0 * (b + 1.0) * (1.0 - a) - 1.0) * e * (1.0 - a));
    let big_b = b / ((b * (1.0 - a) - a) * (1.0 - a));
    (big_a, big_b, e)
}

/// Covariance `E[W_s W_t^T]` of the diffusive scaling limit. Arguments with
/// `s > t` are swapped, because the kernel is written for `s ≤ t`.
pub fn w_covariance(s: f64, t: f64, params: &ModelParams) -> Result<IsotropicMatrix> {
    require(params, Regime::Diffusive, "diffusive covariance kernel")?;
    require_nonsingular(params)?;
    check_times(s, t)?;
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    if s == 0.0 {
        return Ok(IsotropicMatrix::new(params.d, 0.0));
    }
    let (big_a, big_b, e) = w_kernel_coefficients(params);
    Ok(IsotropicMatrix::new(params.d, big_a * s * (t / s).powf(e) + big_b * s))
}

fn check_times(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::InvalidParams(format!("times must be >= 0, got s = {s}, t = {t}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    /// Limit of `E‖S_n‖² / (n log n)`.
    pub diffusion_scale: f64,
    /// Limit of `(1 / log log n) Σ_{k≥2} ‖S_k‖² / (k log k)²`.
    pub qsl: f64,
}

pub fn critical_limit(params: &ModelParams) -> Result<CriticalConstants> {
    require(params, Regime::Critical, "critical constants")?;
    let v = (2.0 * params.beta + 1.0).powi(2);
    Ok(CriticalConstants { diffusion_scale: v, qsl: v })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LBetaMoments {
    pub mean: Vec<f64>,
    pub second_moment: IsotropicMatrix,
    /// The same scalar without the `Γ(β+1)²` factor.
    pub second_moment_without_gamma: f64,
}

/// `ln[κ² Γ(2(a-1)(β+1)+1) / Γ((2a-1)(β+1)+1)²]`.
fn ln_l_beta_core(params: &ModelParams) -> Result<f64> {
    let (a, b) = (params.a, params.beta);
    let kappa = params.decomposition_coefficient()?;
    let top = 2.0 * (a - 1.0) * (b + 1.0) + 1.0;
    let bot = (2.0 * a - 1.0) * (b + 1.0) + 1.0;
    if top <= 0.0 || bot <= 0.0 {
        return Err(Error::InvalidParams(format!("Gamma arguments {top}, {bot} must be positive")));
    }
    Ok(2.0 * kappa.abs().ln() + ln_gamma(top) - 2.0 * ln_gamma(bot))
}

/// Mean and second moment of `L_β = lim n^{-e} S_n`.
pub fn l_beta_moments(params: &ModelParams) -> Result<LBetaMoments> {
    require(params, Regime::Superdiffusive, "L_beta moments")?;
    let core = ln_l_beta_core(params)?;
    let with = (core + 2.0 * ln_gamma(params.beta + 1.0)).exp();
    Ok(LBetaMoments {
        mean: vec![0.0; params.d],
        second_moment: IsotropicMatrix::new(params.d, with),
        second_moment_without_gamma: core.exp(),
    })
}

/// Basis function of a correction term in the mean-square displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorrectionTerm {
    /// `n^{-exponent}`
    Power { exponent: f64 },
    /// `1 / log n`
    InverseLog,
}

impl CorrectionTerm {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            CorrectionTerm::Power { exponent } => n.powf(-exponent),
            CorrectionTerm::InverseLog => 1.0 / n.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsdAsymptote {
    pub regime: Regime,
    /// `n`, `n log n` or `n^{2e}`.
    pub scale: f64,
    /// Limit of `E‖S_n‖² / scale`.
    pub constant: f64,
    /// Superdiffusive only: the constant with the `Γ(β+1)²` factor of the `L_β` second moment.
    pub constant_with_gamma: Option<f64>,
    pub matrix: IsotropicMatrix,
    pub corrections: [CorrectionTerm; 2],
}

/// Leading term of `E[S_n S_n^T]` and the two correction shapes.
///
/// In the superdiffusive regime `constant` is the scalar of the mean-square
/// table as printed, without `Γ(β+1)²`; `constant_with_gamma` carries the factor.
pub fn msd_asymptote(n: f64, params: &ModelParams) -> Result<MsdAsymptote> {
    require_nonsingular(params)?;
    let regime = params.regime();
    let (a, b) = (params.a, params.beta);
    let e = params.growth_exponent();
    let (scale, constant, with_gamma, corrections) = match regime {
        Regime::Diffusive => {
            let num = (a - 2.0 * b) * (1.0 - a) * (b + 1.0) + b * (a + 1.0);
            let den = (2.0 * (b + 1.0) * (1.0 - a) - 1.0) * (a - b * (1.0 - a)) * (1.0 - a);
            (
                n,
                num / den,
                None,
                [CorrectionTerm::Power { exponent: 2.0 * (1.0 - a) * (b + 1.0) }, CorrectionTerm::Power { exponent: 1.0 }],
            )
        }
        Regime::Critical => (
            n * n.ln(),
            (2.0 * b + 1.0).powi(2),
            None,
            [CorrectionTerm::InverseLog, CorrectionTerm::Power { exponent: 1.0 }],
        ),
        Regime::Superdiffusive => {
            let core = ln_l_beta_core(params)?;
            (
                n.powf(2.0 * e),
                core.exp(),
                Some((core + 2.0 * ln_gamma(b + 1.0)).exp()),
                [CorrectionTerm::Power { exponent: 4.0 * e - 1.0 }, CorrectionTerm::Power { exponent: 2.0 * e }],
            )
        }
    };
    Ok(MsdAsymptote {
        regime,
        scale,
        constant,
        constant_with_gamma: with_gamma,
        matrix: IsotropicMatrix::new(params.d, scale * constant),
        corrections,
    })
}

/// Proof form of `I(a,β)`: `(1/(1-2e)) · a²(1-a)(β+1)³ / ((β-c)²(1-c+β))`.
pub fn barycenter_i_proof(params: &ModelParams) -> f64 {
    let (a, b, c, e) = (params.a, params.beta, params.memory_drift(), params.growth_exponent());
    a * a * (1.0 - a) * (b + 1.0).powi(3) / ((1.0 - 2.0 * e) * (b - c).powi(2) * (1.0 - c + b))
}

/// Statement form of `I(a,β)`:
/// `1/(Γ(c+1)²Γ(β+1)²) · 2a²(1-a)(β+1)³ / (3(β-c)²(1-c+β))`.
pub fn barycenter_i_statement(params: &ModelParams) -> f64 {
    let (a, b, c) = (params.a, params.beta, params.memory_drift());
    let g = (gamma(c + 1.0) * gamma(b + 1.0)).powi(2);
    2.0 * a * a * (1.0 - a) * (b + 1.0).powi(3) / (3.0 * g * (b - c).powi(2) * (1.0 - c + b))
}

/// Covariance of `∫_0^1 W_{sv} dv` and `∫_0^1 W_{tu} du` for `s ≤ t` (swapped otherwise).
pub fn barycenter_kernel(s: f64, t: f64, params: &ModelParams) -> Result<IsotropicMatrix> {
    require(params, Regime::Diffusive, "barycenter covariance kernel")?;
    require_nonsingular(params)?;
    check_times(s, t)?;
    let (s, t) = if s <= t { (s, t) } else { (t, s) };
    let (a, b, c) = (params.a, params.beta, params.memory_drift());
    let e = a - b * (1.0 - a);
    let first = b / (3.0 * (b * (1.0 - a) - a) * (1.0 - a)) * s;
    let second = 2.0 * (c * (1.0 - a) + a * b)
        / (3.0 * (2.0 * (b + 1.0) * (1.0 - a) - 1.0) * e * (1.0 - a) * (1.0 + (1.0 - a) * (b + 1.0)))
        * t.powf(e)
        * s.powf(1.0 - a + b * (1.0 - a));
    Ok(IsotropicMatrix::new(params.d, first + second))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BarycenterConstants {
    /// `4 I(a,β)` with `I` in proof form.
    pub diffusive_qsl: Option<f64>,
    /// `4 I(a,β)` with `I` in statement form.
    pub diffusive_qsl_statement: Option<f64>,
    /// Limit of `E‖G_n‖²/n` from the barycenter kernel at `s = t = 1`.
    pub diffusive_kernel_unit: Option<f64>,
    /// `4(2β+1)²/9`
    pub critical_qsl: Option<f64>,
    /// `1/(1+e)`, the factor in `n^{-e} G_n → L_β/(1+e)`.
    pub superdiffusive_factor: Option<f64>,
    /// `E[L_β L_β^T]/(1+e)²` trace, with `Γ(β+1)²`.
    pub superdiffusive_second_moment: Option<f64>,
    /// The same without `Γ(β+1)²`.
    pub superdiffusive_second_moment_without_gamma: Option<f64>,
}

pub fn barycenter_constants(params: &ModelParams) -> Result<BarycenterConstants> {
    let mut out = BarycenterConstants::default();
    match params.regime() {
        Regime::Diffusive => {
            require_nonsingular(params)?;
            out.diffusive_qsl = Some(4.0 * barycenter_i_proof(params));
            out.diffusive_qsl_statement = Some(4.0 * barycenter_i_statement(params));
            out.diffusive_kernel_unit = Some(barycenter_kernel(1.0, 1.0, params)?.scalar);
        }
        Regime::Critical => {
            out.critical_qsl = Some(4.0 * (2.0 * params.beta + 1.0).powi(2) / 9.0);
        }
        Regime::Superdiffusive => {
            let f = 1.0 / (1.0 + params.growth_exponent());
            let l = l_beta_moments(params)?;
            out.superdiffusive_factor = Some(f);
            out.superdiffusive_second_moment = Some(f * f * l.second_moment.scalar);
            out.superdiffusive_second_moment_without_gamma = Some(f * f * l.second_moment_without_gamma);
        }
    }
    Ok(out)
}

/// `inf_{‖x‖ ≥ r} ‖x‖²/2 = r²/2`.
pub fn mdp_rate(params: &ModelParams, r: f64) -> Result<f64> {
    if params.regime() == Regime::Superdiffusive {
        return Err(Error::WrongRegime {
            quantity: "moderate deviation rate",
            expected: "diffusive or critical",
            actual: Regime::Superdiffusive,
        });
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("radius must be finite and >= 0, got {r}")));
    }
    Ok(r * r / 2.0)
}

fn keep<T>(unavailable: &mut Vec<(String, String)>, name: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(Error::WrongRegime { .. }) => None,
        Err(e) => {
            unavailable.push((name.to_string(), e.to_string()));
            None
        }
    }
}

/// The constants applicable to one parameter point, as emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryPrediction {
    pub d: usize,
    pub p: f64,
    pub beta: f64,
    pub a: f64,
    pub regime: Regime,
    pub critical_p: f64,
    /// Exponent of `n` in the displacement scale; the critical scale is `√(n log n)`.
    pub scaling_exponent: f64,
    pub singular: bool,
    pub qsl_diffusive: Option<f64>,
    pub w_covariance_unit: Option<f64>,
    pub critical: Option<CriticalConstants>,
    pub l_beta: Option<LBetaMoments>,
    pub msd_constant: Option<f64>,
    pub msd_constant_with_gamma: Option<f64>,
    pub msd_corrections: Option<[CorrectionTerm; 2]>,
    pub barycenter: Option<BarycenterConstants>,
    pub mdp_rate_unit_ball: Option<f64>,
    /// Constants that were not produced, with the reason.
    pub unavailable: Vec<(String, String)>,
}

impl TheoryPrediction {
    pub fn evaluate(params: &ModelParams) -> Self {
        let info = classify_regime(params);
        let mut unavailable = Vec::new();
        let scaling_exponent = match info.regime {
            Regime::Diffusive | Regime::Critical => 0.5,
            Regime::Superdiffusive => params.growth_exponent(),
        };
        let qsl_diffusive = keep(&mut unavailable, "qsl_diffusive", qsl_constant_diffusive(params));
        let w_covariance_unit = keep(&mut unavailable, "w_covariance_unit", w_covariance(1.0, 1.0, params).map(|m| m.scalar));
        let critical = keep(&mut unavailable, "critical", critical_limit(params));
        let l_beta = keep(&mut unavailable, "l_beta", l_beta_moments(params));
        let msd = keep(&mut unavailable, "msd", msd_asymptote(1.0, params));
        let barycenter = keep(&mut unavailable, "barycenter", barycenter_constants(params));
        let mdp = keep(&mut unavailable, "mdp_rate_unit_ball", mdp_rate(params, 1.0));
        Self {
            d: params.d,
            p: params.p,
            beta: params.beta,
            a: params.a,
            regime: info.regime,
            critical_p: info.critical_p,
            scaling_exponent,
            singular: params.is_singular(),
            qsl_diffusive,
            w_covariance_unit,
            critical,
            l_beta,
            msd_constant: msd.as_ref().map(|m| m.constant),
            msd_constant_with_gamma: msd.as_ref().and_then(|m| m.constant_with_gamma),
            msd_corrections: msd.map(|m| m.corrections),
            barycenter,
            mdp_rate_unit_ball: mdp,
            unavailable,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn qsl_examples() {
        let p = ModelParams::new(2, 0.5, 1.0).unwrap();
        assert!(close(qsl_constant_diffusive(&p).unwrap(), 2.4, 1e-14));
        // a = 0 at p = 1/(2d)
        for d in 1..=3 {
            for &b in &[0.0, 0.5, 2.0] {
                let p = ModelParams::new(d, 1.0 / (2.0 * d as f64), b).unwrap();
                assert!(close(qsl_constant_diffusive(&p).unwrap(), 1.0, 1e-14));
            }
        }
        let erw = ModelParams::new(1, 0.6, 0.0).unwrap();
        assert!(close(qsl_constant_diffusive(&erw).unwrap(), 1.0 / (3.0 - 4.0 * 0.6), 1e-14));
        assert!(matches!(
            qsl_constant_diffusive(&ModelParams::new(2, 0.9, 1.0).unwrap()),
            Err(Error::WrongRegime { .. })
        ));
    }

    #[test]
    fn kernel_examples() {
        let p = ModelParams::new(2, 0.5, 1.0).unwrap();
        assert_eq!(w_covariance(0.0, 3.0, &p).unwrap().scalar, 0.0);
        let unit = w_covariance(1.0, 1.0, &p).unwrap().scalar;
        assert!(close(unit, msd_asymptote(1.0, &p).unwrap().constant, 1e-12));
        assert_eq!(w_covariance(2.0, 0.5, &p).unwrap(), w_covariance(0.5, 2.0, &p).unwrap());
        let erw = ModelParams::new(3, 0.3, 0.0).unwrap();
        assert!(close(w_covariance(1.0, 1.0, &erw).unwrap().scalar, 1.0 / (1.0 - 2.0 * erw.a), 1e-12));
    }

    #[test]
    fn critical_examples() {
        let p = ModelParams::new(1, 0.75, 0.0).unwrap();
        assert_eq!(critical_limit(&p).unwrap().diffusion_scale, 1.0);
        let b1 = ModelParams::new(2, 13.0 / 16.0, 1.0).unwrap();
        assert_eq!(critical_limit(&b1).unwrap().qsl, 9.0);
        assert!(close(barycenter_constants(&p).unwrap().critical_qsl.unwrap(), 4.0 / 9.0, 1e-15));
    }

    #[test]
    fn straight_line_l_beta() {
        for d in 1..=3 {
            for &b in &[0.0, 1.0, 2.5] {
                let p = ModelParams::new(d, 1.0, b).unwrap();
                let l = l_beta_moments(&p).unwrap();
                assert!(close(l.second_moment.scalar, 1.0, 1e-12), "d={d} b={b}");
                assert!(l.mean.iter().all(|&m| m == 0.0));
            }
        }
        let line = ModelParams::new(2, 1.0, 0.0).unwrap();
        assert!(close(barycenter_constants(&line).unwrap().superdiffusive_factor.unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn barycenter_superdiffusive_second_moment() {
        let p = ModelParams::new(2, 0.9, 1.0).unwrap();
        let bc = barycenter_constants(&p).unwrap();
        let f = bc.superdiffusive_factor.unwrap();
        let l = l_beta_moments(&p).unwrap().second_moment.scalar;
        assert!(close(bc.superdiffusive_second_moment.unwrap(), f * f * l, 1e-15));
    }

    #[test]
    fn mdp_examples() {
        let p = ModelParams::new(1, 0.5, 0.0).unwrap();
        assert_eq!(mdp_rate(&p, 1.0).unwrap(), 0.5);
        assert_eq!(mdp_rate(&p, 2.0).unwrap(), 2.0);
        assert!(mdp_rate(&p, 1e-9).unwrap() < 1e-17);
        assert!(mdp_rate(&ModelParams::new(1, 0.9, 0.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn singular_guard_on_msd() {
        let p = ModelParams::new(1, 0.5, 0.0).unwrap();
        assert_eq!(msd_asymptote(10.0, &p).unwrap_err(), Error::SingularDecomposition);
        assert!(qsl_constant_diffusive(&p).is_ok());
    }

    #[test]
    fn prediction_record_is_regime_specific() {
        let t = TheoryPrediction::evaluate(&ModelParams::new(2, 0.9, 1.0).unwrap());
        assert!(t.l_beta.is_some() && t.qsl_diffusive.is_none() && t.mdp_rate_unit_ball.is_none());
        let t = TheoryPrediction::evaluate(&ModelParams::new(1, 0.5, 0.0).unwrap());
        assert!(t.singular && t.qsl_diffusive == Some(1.0));
        assert!(t.unavailable.iter().any(|(k, _)| k == "msd"));
    }
}
