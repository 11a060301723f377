//! One PASS/FAIL line per acceptance criterion. Criteria listed in
//! `KNOWN_RED` fail at the prescribed sizes because of finite-n bias that the
//! exact recurrences quantify; the run exits non-zero only if something else fails.

#[path = "../../core/tests/support/exact_moments.rs"]
mod exact_moments;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use exact_moments::exact_moments;
use marw::sequences::{asymptotics, SequenceCache};
use marw::theory::{l_beta_moments, msd_asymptote, qsl_constant_diffusive, w_covariance};
use marw::{ModelParams, Rational, Regime, RngStream};
use marw_harness::checks::{CheckOutcome, Status, SE_BAND};
use marw_harness::identities::{identity_suite, oracle_suite, IdentitySuiteConfig, OracleSuiteConfig, IDENTITY_TOLERANCE, ORACLE_TOLERANCE};
use marw_harness::runner::{bundled, bundled_names, RunOutput};
use marw_harness::spec::Checkpoints;
use marw_harness::{run_spec, CheckKind, ExperimentSpec, RunOptions};
use rand::Rng;

const SEED: u64 = 20240610;

/// Criteria that cannot pass at their prescribed sizes; see each line's note.
const KNOWN_RED: [u8; 4] = [6, 7, 9, 10];

struct Verdict {
    id: u8,
    pass: bool,
    /// For known-red criteria: the part that is attainable passed.
    attainable_pass: bool,
    text: String,
}

impl Verdict {
    fn new(id: u8, pass: bool, text: String) -> Self {
        Self { id, pass, attainable_pass: pass, text }
    }

    fn partial(id: u8, pass: bool, attainable_pass: bool, text: String) -> Self {
        Self { id, pass, attainable_pass, text }
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

fn rational(n: i64, d: i64) -> Rational {
    Rational::new(n, d).unwrap()
}

fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_bundled(name: &str) -> (RunOutput, Duration) {
    let spec = bundled(name).unwrap();
    let start = Instant::now();
    let out = run_spec(&spec, &RunOptions::default()).unwrap();
    (out, start.elapsed())
}

fn outcome(out: &RunOutput, kind: CheckKind) -> &CheckOutcome {
    out.verification.outcomes.iter().find(|o| o.check == kind).unwrap()
}

fn passed(o: &CheckOutcome) -> bool {
    o.status == Status::Pass
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn timing(elapsed: Duration, budget_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s <= budget_s, format!("{s:.1} s on {} core(s), budget {budget_s} s", cores()))
}

fn identities() -> Verdict {
    let start = Instant::now();
    let r = identity_suite(&IdentitySuiteConfig { seed: SEED, ..Default::default() }).unwrap();
    Verdict::new(
        1,
        r.passed(),
        format!(
            "exact identities over {} draws x 10^4 steps: reconstruction {:.1e}, Tr Sigma {:.1e}, Tr<M> {:.1e}, Tr<N> {:.1e} (tol {IDENTITY_TOLERANCE:e}; {} draws without a martingale view); {:.1} s",
            r.draws,
            r.reconstruction,
            r.trace_sigma,
            r.trace_qv_m,
            r.trace_qv_n,
            r.martingale_skipped,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn oracles() -> Verdict {
    let start = Instant::now();
    let r = oracle_suite(&OracleSuiteConfig { seed: SEED, ..Default::default() }).unwrap();
    Verdict::new(
        2,
        r.passed(),
        format!(
            "enumeration oracle over {} histories (n <= 50, d <= 3): mean {:.1e}, second moment {:.1e}, normalisation {:.1e} (tol {ORACLE_TOLERANCE:e}); {:.2} s",
            r.histories,
            r.mean,
            r.second_moment,
            r.normalisation,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn sequence_asymptotics() -> Verdict {
    const N: usize = 1_000_000;
    let n = N as f64;
    let start = Instant::now();
    let mut ratio_err: f64 = 0.0;
    for &(d, p, beta) in &[(1, 0.5, 0.0), (2, 0.5, 1.0), (2, 0.9, 1.0), (3, 0.3, 2.5), (4, 0.8, 5.0)] {
        let params = ModelParams::new(d, p, beta).unwrap();
        let cache = SequenceCache::new(&params, N).unwrap();
        ratio_err = ratio_err.max(rel(n.powf(params.memory_drift()) * cache.a(N).unwrap(), asymptotics::a_scaling_limit(&params)));
        ratio_err = ratio_err.max(rel(n.powf(-beta) * cache.mu(N).unwrap(), asymptotics::mu_scaling_limit(beta)));
    }
    let mut diff_err: f64 = 0.0;
    for &(d, p, beta) in &[(2, 0.5, 1.0), (3, 0.4, 2.0), (1, 0.6, 0.0)] {
        let params = ModelParams::new(d, p, beta).unwrap();
        let cache = SequenceCache::new(&params, N).unwrap();
        let ratio = cache.w(N).unwrap() / n.powf(1.0 - 2.0 * params.growth_exponent());
        diff_err = diff_err.max(rel(ratio, asymptotics::diffusive_w_limit(&params).unwrap()));
    }
    let mut crit_err: f64 = 0.0;
    for (beta, pc) in [(rational(1, 2), rational(3, 4)), (rational(1, 1), rational(13, 16))] {
        let params = ModelParams::from_rationals(2, pc, beta).unwrap();
        let cache = SequenceCache::new(&params, N).unwrap();
        crit_err = crit_err.max(rel(cache.w(N).unwrap() / n.ln(), asymptotics::critical_w_limit(&params).unwrap()));
    }
    let pass = ratio_err <= 1e-4 && diff_err <= 1e-3 && crit_err <= 2e-2;
    Verdict::new(
        3,
        pass,
        format!(
            "at n = 10^6: a_n, mu_n scaling ratios {ratio_err:.1e} (tol 1e-4); diffusive w_n limit {diff_err:.1e} (tol 1e-3); critical w_n/log n at d=2, beta in {{1/2, 1}} {crit_err:.1e} (tol 2e-2); {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn theory_consistency() -> Verdict {
    let start = Instant::now();
    let mut rng = RngStream::new(SEED, 0);
    let mut worst: f64 = 0.0;
    let mut draws = 0;
    while draws < 1000 {
        let params = ModelParams::new(rng.gen_range(1..=4), rng.gen::<f64>(), rng.gen::<f64>() * 5.0).unwrap();
        if params.regime() != Regime::Diffusive || params.is_singular() {
            continue;
        }
        draws += 1;
        let kernel = w_covariance(1.0, 1.0, &params).unwrap().trace();
        let table = msd_asymptote(1.0, &params).unwrap().constant;
        worst = worst.max((kernel - table).abs() / table.abs().max(1.0));
    }
    let mut reduction: f64 = 0.0;
    for &(d, p) in &[(1, 0.6), (2, 0.5), (3, 0.2), (4, 0.55)] {
        let params = ModelParams::new(d, p, 0.0).unwrap();
        let target = 1.0 / (1.0 - 2.0 * params.a);
        reduction = reduction.max((msd_asymptote(1.0, &params).unwrap().constant - target).abs());
        reduction = reduction.max((qsl_constant_diffusive(&params).unwrap() - target).abs());
    }
    let critical = ModelParams::from_rationals(1, rational(3, 4), rational(0, 1)).unwrap();
    let crit = msd_asymptote(1.0, &critical).unwrap().constant;
    let pass = worst <= 1e-12 && reduction <= 1e-12 && crit == 1.0;
    Verdict::new(
        4,
        pass,
        format!(
            "kernel trace vs mean-square table over {draws} diffusive draws: max rel diff {worst:.1e} (tol 1e-12); beta=0 reduction to 1/(1-2a) within {reduction:.1e}; critical constant {crit}; {:.1} ms",
            start.elapsed().as_secs_f64() * 1e3
        ),
    )
}

fn diffusive_msd(out: &RunOutput, elapsed: Duration) -> Verdict {
    let msd = outcome(out, CheckKind::Msd);
    let (fast, t) = timing(elapsed, 300.0);
    Verdict::new(5, passed(msd) && fast, format!("d=2 p=1/2 beta=1, 10^5 paths, n=10^4: {}; {t}", msd.summary))
}

fn critical_msd() -> Verdict {
    let (out, elapsed) = run_bundled("critical_d1_beta0");
    let msd = outcome(&out, CheckKind::Msd);
    let (fast, t) = timing(elapsed, 600.0);
    let n = out.spec.horizon;
    let exact = exact_moments(0.5, 0.0, &[n])[0].ss / (n as f64 * (n as f64).ln());
    Verdict::partial(
        6,
        passed(msd) && fast,
        fast,
        format!(
            "d=1 p=3/4 beta=0, 10^5 paths, n=10^5: {}; {t}. Exact E S_n^2 = n H_n gives {exact:.5} at this n, so the band around 1 cannot hold",
            msd.summary
        ),
    )
}

fn gamma_arbitration() -> String {
    let params = ModelParams::new(1, 0.99, 2.0).unwrap();
    let n = 1_000_000;
    let m = exact_moments(params.a, params.beta, &[n])[0];
    let scaled = m.ss / (n as f64).powf(2.0 * params.growth_exponent());
    let l = l_beta_moments(&params).unwrap();
    let with = l.second_moment.trace();
    let without = l.second_moment_without_gamma;
    let verdict = if rel(scaled, with) < rel(scaled, without) { "with Gamma(beta+1)^2" } else { "without Gamma(beta+1)^2" };
    format!("exact recurrence at d=1 p=0.99 beta=2, n=10^6: {scaled:.4} vs with {with:.4} / without {without:.4} -> {verdict}")
}

fn superdiffusive(out: &RunOutput, elapsed: Duration) -> Verdict {
    let mean = outcome(out, CheckKind::LBetaMean);
    let second = outcome(out, CheckKind::LBetaSecondMoment);
    let n = out.spec.horizon;
    let params = out.spec.params().unwrap();
    let exact = exact_moments(params.a, params.beta, &[n])[0];
    let exact_scaled = exact.ss / (n as f64).powf(2.0 * params.growth_exponent());
    Verdict::partial(
        7,
        passed(mean) && passed(second),
        passed(mean),
        format!(
            "d=2 p=9/10 beta=1, 10^5 paths, n=10^5 ({:.0} s): mean {} ({}); second moment {} ({}). Exact E|n^-e S_n|^2 at this n is {exact_scaled:.4}. Gamma factor: {}",
            elapsed.as_secs_f64(),
            status(passed(mean)),
            mean.summary,
            status(passed(second)),
            second.summary,
            gamma_arbitration()
        ),
    )
}

fn qsl() -> Verdict {
    let (out, elapsed) = run_bundled("qsl_a0");
    let q = outcome(&out, CheckKind::Qsl);
    Verdict::new(8, passed(q), format!("d=1 p=1/2 beta=0, 10^3 paths, n=10^6: {}; {:.0} s", q.summary, elapsed.as_secs_f64()))
}

fn barycenter(superdiffusive: &RunOutput, diffusive: &RunOutput) -> Verdict {
    let sup = outcome(superdiffusive, CheckKind::Barycenter);
    let dif = outcome(diffusive, CheckKind::Barycenter);
    let winner = dif.values.get("winner_is_proof_form").map(|&w| if w == 1.0 { "proof form" } else { "statement form" });
    let n = superdiffusive.spec.horizon;
    let params = superdiffusive.spec.params().unwrap();
    let e = params.growth_exponent();
    let m = exact_moments(params.a, params.beta, &[n])[0];
    let exact_paired = ((1.0 + e).powi(2) * m.barycenter() - m.ss) / (n as f64).powf(2.0 * e);
    let l = superdiffusive.report.as_ref().and_then(|r| r.l_beta.as_ref()).unwrap();
    let unpaired_se = l.barycenter_second_moment_trace.se.unwrap().hypot(l.second_moment_trace.se.unwrap());
    let unpaired_z = (l.barycenter_second_moment_trace.mean - l.second_moment_trace.mean) / unpaired_se;
    Verdict::partial(
        9,
        passed(sup) && winner.is_some(),
        winner.is_some(),
        format!(
            "superdiffusive {} ({}; exact paired value at this n {exact_paired:.4}, unpaired z {unpaired_z:+.2}); diffusive {} ({}); recorded winner among the I(a,beta) forms: {}",
            status(passed(sup)),
            sup.summary,
            status(passed(dif)),
            dif.summary,
            winner.unwrap_or("none")
        ),
    )
}

fn moderate_deviations() -> Verdict {
    let (out, elapsed) = run_bundled("mdp_iid");
    let o = outcome(&out, CheckKind::Mdp);
    let (fast, t) = timing(elapsed, 1800.0);
    let mdp = out.report.as_ref().and_then(|r| r.mdp.as_ref()).unwrap();
    let r1 = mdp.estimates.iter().find(|e| e.radius == 1.0).is_some_and(|e| e.brackets_theory);
    Verdict::partial(
        10,
        passed(o) && fast,
        r1,
        format!(
            "d=1 p=1/2 beta=0, eta=1/6, n=10^4, 10^7 paths: {}; {t}. The statistic is a normalised simple random walk, whose exact binomial tail at r=1/2 sits about 46% above -r^2/2",
            o.summary
        ),
    )
}

fn reports(spec: &ExperimentSpec, workers: usize) -> (String, Vec<u8>) {
    let out = run_spec(spec, &RunOptions { workers: Some(workers), ..Default::default() }).unwrap();
    let r = out.report.unwrap();
    let mut csv = Vec::new();
    r.write_csv(&mut csv).unwrap();
    (r.to_json(), csv)
}

fn determinism() -> Verdict {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for name in bundled_names() {
        let mut spec = bundled(name).unwrap();
        spec.checks.retain(|&c| c != CheckKind::Reconstruction);
        if spec.tier != Some(marw_harness::spec::Tier::Smoke) {
            spec.paths = 5000;
            spec.horizon = spec.horizon.min(2000);
            spec.checkpoints = Checkpoints::Geometric(marw::montecarlo::DEFAULT_CHECKPOINTS);
        }
        let reference = reports(&spec, 1);
        for workers in [2, 5] {
            runs += 1;
            if reports(&spec, workers) != reference {
                mismatches.push(format!("{name} at {workers} workers"));
            }
        }
    }
    Verdict::new(
        11,
        mismatches.is_empty(),
        format!(
            "every bundled spec (smoke specs at full size, full specs at 5000 paths and n <= 2000) at 1 vs 2 and 5 workers: {runs} comparisons, mismatches: [{}]; {:.1} s",
            mismatches.join(", "),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn report(v: &Verdict) {
    let note = if KNOWN_RED.contains(&v.id) && !v.pass { " [known unattainable at this size]" } else { "" };
    println!("criterion {:>2} {}{note}: {}", v.id, status(v.pass), v.text);
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--quiet`; nothing here takes arguments.
    let mut verdicts = Vec::new();
    let mut emit = |v: Verdict| {
        report(&v);
        verdicts.push(v);
    };
    emit(identities());
    emit(oracles());
    emit(sequence_asymptotics());
    emit(theory_consistency());
    let (diffusive, diffusive_time) = run_bundled("diffusive_msd");
    emit(diffusive_msd(&diffusive, diffusive_time));
    emit(critical_msd());
    let (sup, sup_time) = run_bundled("superdiffusive_l_beta");
    emit(superdiffusive(&sup, sup_time));
    emit(qsl());
    emit(barycenter(&sup, &diffusive));
    emit(moderate_deviations());
    emit(determinism());

    let green = verdicts.iter().filter(|v| v.pass).count();
    let broken: Vec<u8> = verdicts.iter().filter(|v| !v.attainable_pass || (!v.pass && !KNOWN_RED.contains(&v.id))).map(|v| v.id).collect();
    println!("acceptance: {green}/{} criteria pass; unexpected failures: {broken:?} (band {SE_BAND} SE)", verdicts.len());
    if broken.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
