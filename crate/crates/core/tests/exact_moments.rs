mod support {
    pub mod exact_moments;
}

use marw::montecarlo::{run_ensemble, EnsembleConfig};
use marw::theory::{barycenter_constants, barycenter_kernel, l_beta_moments, msd_asymptote};
use marw::{ModelParams, Rational};
use support::exact_moments::exact_moments;

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

#[test]
fn classical_critical_second_moment_is_n_harmonic() {
    let at: Vec<usize> = vec![1, 2, 10, 1000, 100_000];
    for m in exact_moments(0.5, 0.0, &at) {
        let h: f64 = (1..=m.n).map(|k| 1.0 / k as f64).sum();
        assert!(rel(m.ss, m.n as f64 * h) < 1e-12, "n = {}", m.n);
    }
}

#[test]
fn diffusive_limits() {
    let params = ModelParams::new(2, 0.5, 1.0).unwrap();
    let m = exact_moments(params.a, params.beta, &[1_000_000])[0];
    let n = m.n as f64;
    let msd = msd_asymptote(1.0, &params).unwrap().constant;
    assert!(rel(m.ss / n, msd) < 1e-3, "{} vs {msd}", m.ss / n);
    let kernel = barycenter_kernel(1.0, 1.0, &params).unwrap().trace();
    assert!(rel(m.barycenter() / n, kernel) < 1e-3, "{} vs {kernel}", m.barycenter() / n);
}

#[test]
fn superdiffusive_limit_carries_the_gamma_factor() {
    // Γ(β+1)² = 4 at β = 2
    let params = ModelParams::new(1, 0.99, 2.0).unwrap();
    let e = params.growth_exponent();
    let m = exact_moments(params.a, params.beta, &[1_000_000])[0];
    let scaled = m.ss / (m.n as f64).powf(2.0 * e);
    let l = l_beta_moments(&params).unwrap();
    assert!(rel(scaled, l.second_moment.trace()) < 1e-2, "{scaled} vs {}", l.second_moment.trace());
    assert!(rel(scaled, l.second_moment_without_gamma) > 0.5);

    let b = barycenter_constants(&params).unwrap();
    let g = m.barycenter() / (m.n as f64).powf(2.0 * e);
    assert!(rel(g, b.superdiffusive_second_moment.unwrap()) < 1e-2, "{g} vs {:?}", b.superdiffusive_second_moment);
}

#[test]
fn monte_carlo_matches_exact_moments_at_small_n() {
    let cases = [
        ModelParams::new(2, 0.5, 1.0).unwrap(),
        ModelParams::new(1, 0.9, 0.0).unwrap(),
        ModelParams::new(3, 0.7, 2.5).unwrap(),
        ModelParams::from_rationals(1, Rational::new(3, 4).unwrap(), Rational::new(0, 1).unwrap()).unwrap(),
    ];
    for (i, params) in cases.into_iter().enumerate() {
        let mut cfg = EnsembleConfig::new(params, 20_000, 60, 100 + i as u64);
        cfg.checkpoints = vec![1, 2, 5, 20, 60];
        let report = run_ensemble(&cfg).unwrap();
        let exact = exact_moments(params.a, params.beta, &cfg.checkpoints);
        for (cp, m) in report.checkpoints.iter().zip(&exact) {
            assert_eq!(cp.n, m.n);
            if m.n == 1 {
                assert_eq!(cp.msd.mean, 1.0);
                continue;
            }
            assert!(cp.msd.within_se(m.ss, 4.0), "{params:?} n={}: msd {:?} vs {}", m.n, cp.msd, m.ss);
            assert!(
                cp.barycenter_msd.within_se(m.barycenter(), 4.0),
                "{params:?} n={}: barycenter {:?} vs {}",
                m.n,
                cp.barycenter_msd,
                m.barycenter()
            );
        }
    }
}
