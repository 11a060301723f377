//! Log-Gamma helpers.
//!
//! `libm` supplies the signed `lgamma_r`. Differences `ln Γ(x+h) - ln Γ(x)` at
//! large `x` are evaluated from the Stirling series term by term, because
//! subtracting two values of size `x ln x` throws away about `log10(x ln x)`
//! digits.

/// Below this argument the ratio falls back to plain `lgamma` subtraction.
const STIRLING_THRESHOLD: f64 = 16.0;

/// B_{2k} / (2k (2k-1)) for k = 1..=8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// `(ln |Γ(x)|, sign Γ(x))`. The sign is `+1.0` at poles, where the log is `+inf`.
pub fn ln_gamma_signed(x: f64) -> (f64, f64) {
    let (value, sign) = libm::lgamma_r(x);
    (value, if sign < 0 { -1.0 } else { 1.0 })
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma needs a positive argument, got {x}");
    libm::lgamma_r(x).0
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `ln Γ(x + h) - ln Γ(x)` for `x > 0` and `x + h > 0`.
pub fn ln_gamma_ratio(x: f64, h: f64) -> f64 {
    debug_assert!(x > 0.0 && x + h > 0.0);
    if h == 0.0 {
        return 0.0;
    }
    let y = x + h;
    if x.min(y) < STIRLING_THRESHOLD {
        return ln_gamma(y) - ln_gamma(x);
    }
    // (y - 1/2) ln y - (x - 1/2) ln x - h, rearranged so nothing large cancels.
    let main = (x - 0.5) * (h / x).ln_1p() + h * y.ln() - h;
    let (inv_x, inv_y) = (x.recip(), y.recip());
    let (inv_x2, inv_y2) = (inv_x * inv_x, inv_y * inv_y);
    let (mut px, mut py) = (inv_x, inv_y);
    let mut series = 0.0;
    for c in STIRLING_COEFFS {
        series += c * (py - px);
        px *= inv_x2;
        py *= inv_y2;
    }
    main + series
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn small_integer_values() {
        assert!(rel(ln_gamma(5.0).exp(), 24.0) < 1e-14);
        assert!(rel(gamma(7.0), 720.0) < 1e-14);
        assert!(rel(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln()) < 1e-14);
    }

    #[test]
    fn signed_values_on_the_negative_axis() {
        let (v, s) = ln_gamma_signed(-0.5);
        assert_eq!(s, -1.0);
        assert!(rel(v.exp(), 2.0 * std::f64::consts::PI.sqrt()) < 1e-14);
        let (_, s) = ln_gamma_signed(-1.5);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn ratio_matches_rising_product() {
        // Γ(x+h)/Γ(x) = x (x+1) ... (x+h-1) for integer h
        for &x in &[1.0, 3.5, 17.0, 250.0, 1.0e6] {
            for h in 1..6 {
                let prod: f64 = (0..h).map(|i| (x + i as f64).ln()).sum();
                let r = ln_gamma_ratio(x, h as f64);
                assert!((r - prod).abs() < 1e-12 * prod.abs().max(1.0), "x={x} h={h}");
            }
        }
    }

    #[test]
    fn ratio_is_continuous_across_threshold() {
        for &h in &[0.3, 1.7, -0.4] {
            let below = ln_gamma(STIRLING_THRESHOLD - 1e-9 + h) - ln_gamma(STIRLING_THRESHOLD - 1e-9);
            let above = ln_gamma_ratio(STIRLING_THRESHOLD + 1e-9, h);
            assert!((below - above).abs() < 1e-8);
        }
    }
}
