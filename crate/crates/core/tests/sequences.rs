use marw::sequences::{asymptotics, mu, SequenceCache};
use marw::{ModelParams, Rational, Regime};
use proptest::prelude::*;

const N: usize = 1_000_000;

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn rational(num: i64, den: i64) -> Rational {
    Rational::new(num, den).unwrap()
}

#[test]
fn normalised_a_and_mu_converge() {
    for &(d, p, beta) in &[(1, 0.5, 0.0), (2, 0.5, 1.0), (2, 0.9, 1.0), (3, 0.3, 2.5), (4, 0.8, 5.0), (1, 0.95, 0.0)] {
        let params = ModelParams::new(d, p, beta).unwrap();
        let cache = SequenceCache::new(&params, N).unwrap();
        let n = N as f64;
        let c = params.memory_drift();
        let a_ratio = n.powf(c) * cache.a(N).unwrap();
        assert!(rel(a_ratio, asymptotics::a_scaling_limit(&params)) < 1e-4, "a_n at {params:?}: {a_ratio}");
        let mu_ratio = n.powf(-beta) * cache.mu(N).unwrap();
        assert!(rel(mu_ratio, asymptotics::mu_scaling_limit(beta)) < 1e-4, "mu_n at {params:?}: {mu_ratio}");
    }
}

#[test]
fn diffusive_w_rate() {
    for &(d, p, beta) in &[(2, 0.5, 1.0), (3, 0.4, 2.0), (1, 0.6, 0.0), (4, 0.5, 0.5)] {
        let params = ModelParams::new(d, p, beta).unwrap();
        assert_eq!(params.regime(), Regime::Diffusive);
        let cache = SequenceCache::new(&params, N).unwrap();
        let ratio = cache.w(N).unwrap() / (N as f64).powf(1.0 - 2.0 * params.growth_exponent());
        let limit = asymptotics::diffusive_w_limit(&params).unwrap();
        assert!(rel(ratio, limit) < 1e-3, "{params:?}: {ratio} vs {limit}");
    }
}

#[test]
fn critical_w_rate() {
    // p_c = (4dβ+2d+1)/(4d(β+1)) at d = 2
    for (beta, pc) in [(rational(1, 2), rational(3, 4)), (rational(1, 1), rational(13, 16))] {
        let params = ModelParams::from_rationals(2, pc, beta).unwrap();
        assert_eq!(params.regime(), Regime::Critical);
        let cache = SequenceCache::new(&params, N).unwrap();
        let ratio = cache.w(N).unwrap() / (N as f64).ln();
        let limit = asymptotics::critical_w_limit(&params).unwrap();
        assert!(rel(ratio, limit) < 2e-2, "beta {beta}: {ratio} vs {limit}");
    }
}

#[test]
fn classical_critical_line_d1() {
    for (beta, pc) in [(0, rational(3, 4)), (1, rational(7, 8)), (3, rational(15, 16))] {
        let b = rational(beta, 1);
        let params = ModelParams::from_rationals(1, pc, b).unwrap();
        assert_eq!(params.regime(), Regime::Critical);
        assert!((params.critical_p() - (4.0 * beta as f64 + 3.0) / (4.0 * (beta as f64 + 1.0))).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mu_recurrence(beta in 0.0f64..5.0, n in 1usize..5000) {
        let lhs = mu(n + 1, beta).unwrap();
        let rhs = mu(n, beta).unwrap() * (beta + n as f64) / n as f64;
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn prefix_sum_closed_form(d in 1usize..5, p in 0.0f64..1.0, beta in 0.0f64..5.0, n in 1usize..2000) {
        let params = ModelParams::new(d, p, beta).unwrap();
        let cache = SequenceCache::new(&params, n + 1).unwrap();
        let closed = n as f64 * cache.mu(n + 1).unwrap() / (beta + 1.0);
        prop_assert!(rel(cache.cum_mu(n).unwrap(), closed) < 1e-12);
    }

    #[test]
    fn critical_p_moves_with_d_and_beta(d in 1usize..8, beta in 0.0f64..10.0) {
        let pc = |d: usize, b: f64| ModelParams::new(d, 0.5, b).unwrap().critical_p();
        prop_assert!(pc(d + 1, beta) < pc(d, beta));
        prop_assert!(pc(d, beta + 0.5) > pc(d, beta));
        prop_assert!(pc(d, beta) > (2.0 * beta + 1.0) / (2.0 * (beta + 1.0)));
        prop_assert!(pc(d, beta) < 1.0);
    }

    #[test]
    fn regime_follows_critical_p(d in 1usize..5, p in 0.0f64..1.0, beta in 0.0f64..5.0) {
        let params = ModelParams::new(d, p, beta).unwrap();
        let pc = params.critical_p();
        prop_assume!((p - pc).abs() > 1e-9);
        let expected = if p < pc { Regime::Diffusive } else { Regime::Superdiffusive };
        prop_assert_eq!(params.regime(), expected);
    }
}
