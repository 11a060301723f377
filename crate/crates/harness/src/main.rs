use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use marw::montecarlo::run_ensemble;
use marw::theory::TheoryPrediction;
use marw::walk::{simulate_path, write_path_csv, PathOptions};
use marw::{classify_regime, ModelParams, Rational};
use marw_harness::error::{HarnessError, Result};
use marw_harness::regime_map::{regime_map, write_regime_csv};
use marw_harness::runner::{self, resolve_out_dir, Manifest, RunOptions, RunOutput};
use marw_harness::spec::{CheckKind, Checkpoints, ExperimentSpec, Format, Number, Tier};

#[derive(Parser)]
#[command(name = "marw", version, about = "Amnesia-reinforced elephant random walk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path (trace CSV) or an ensemble (report).
    Simulate(SimulateArgs),
    /// Run checks from a bundled spec, a spec file or inline flags.
    Verify(VerifyArgs),
    /// Print the closed-form constants for one parameter point.
    Theory(TheoryArgs),
    /// Regime tags over a (p, beta) grid as CSV.
    RegimeMap(RegimeMapArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Dimension.
    #[arg(long)]
    d: usize,
    /// Memory parameter in [0, 1]; fractions such as 3/4 are exact.
    #[arg(long, value_parser = parse_number)]
    p: Number,
    /// Amnesia parameter, >= 0.
    #[arg(long, value_parser = parse_number)]
    beta: Number,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = 1)]
    paths: u64,
    /// Generated from entropy and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated times, `every:K` or `geometric:K`. A single path defaults to about 1000 evenly spaced times.
    #[arg(long, value_parser = parse_checkpoints)]
    checkpoints: Option<Checkpoints>,
    /// Output directory; defaults to $MARW_OUT_DIR, then ./marw-out.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also record the martingales M_n and N_n on a single path.
    #[arg(long)]
    martingales: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Name of a bundled spec.
    name: Option<String>,
    /// Path of a spec file.
    #[arg(long, conflicts_with = "name")]
    spec: Option<PathBuf>,
    /// Run every bundled spec of this tier.
    #[arg(long, value_enum, conflicts_with_all = ["name", "spec"])]
    tier: Option<TierArg>,
    /// Run only these checks (repeatable).
    #[arg(long = "check", value_parser = parse_check)]
    checks: Vec<CheckKind>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_parser = parse_number)]
    p: Option<Number>,
    #[arg(long, value_parser = parse_number)]
    beta: Option<Number>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Stop starting new path blocks after this many seconds; the report is flagged partial.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// List the bundled specs and exit.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct TheoryArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct RegimeMapArgs {
    #[arg(long)]
    d: usize,
    /// Grid points on p are i/p_steps.
    #[arg(long, default_value_t = 100)]
    p_steps: u32,
    #[arg(long, default_value = "5", value_parser = parse_rational)]
    beta_max: Rational,
    #[arg(long, default_value_t = 50)]
    beta_steps: u32,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TierArg {
    Smoke,
    Full,
}

fn parse_number(s: &str) -> std::result::Result<Number, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    s.parse().map_err(|e: marw::Error| e.to_string())
}

fn parse_checkpoints(s: &str) -> std::result::Result<Checkpoints, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_check(s: &str) -> std::result::Result<CheckKind, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, command),
        Command::Verify(a) => verify(a, command),
        Command::Theory(a) => theory(a),
        Command::RegimeMap(a) => regime_map_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn model_spec(name: &str, m: &ModelArgs) -> ExperimentSpec {
    ExperimentSpec::new(name, m.d, m.p, m.beta)
}

fn banner(params: &ModelParams) {
    let info = classify_regime(params);
    println!(
        "regime: {} (d = {}, p = {}, beta = {}, a = {:.6}, p_c = {:.6}{})",
        info.regime,
        params.d,
        params.p,
        params.beta,
        params.a,
        info.critical_p,
        if info.exact { ", exact" } else { "" }
    );
}

fn simulate(args: SimulateArgs, command: Vec<String>) -> Result<bool> {
    let mut spec = model_spec("simulate", &args.model);
    let params = spec.params()?;
    banner(&params);
    let seed = match args.seed {
        Some(s) => s,
        None => {
            let s: u64 = rand::random();
            println!("seed: {s} (generated; pass --seed {s} to reproduce)");
            s
        }
    };
    spec.seed = seed;
    spec.horizon = args.horizon;
    spec.paths = args.paths;
    spec.formats = vec![match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }];
    if args.horizon == 0 {
        return Err(HarnessError::Usage("--horizon must be >= 1".into()));
    }
    let out_dir = resolve_out_dir(args.out.as_deref(), None);
    let mut manifest;
    if args.paths == 1 {
        spec.checkpoints = args.checkpoints.clone().unwrap_or(Checkpoints::Every((args.horizon / 1000).max(1)));
        let checkpoints = spec.checkpoints.resolve(args.horizon);
        let snaps = simulate_path(&params, args.horizon, &checkpoints, seed, 0, PathOptions { track_martingales: args.martingales })?;
        manifest = Manifest::new(command, &spec);
        let name = match args.format {
            FormatArg::Csv => {
                let mut buf = Vec::new();
                write_path_csv(&mut buf, params.d, &snaps).expect("writing to a Vec");
                runner::write_file(&out_dir.join("path.csv"), &buf)?;
                "path.csv"
            }
            FormatArg::Json => {
                let json = serde_json::to_string_pretty(&snaps).expect("snapshots serialise");
                runner::write_json(&out_dir.join("path.json"), &json)?;
                "path.json"
            }
        };
        manifest.outputs.push(name.into());
        let last = snaps.last().expect("horizon is a checkpoint");
        println!("S_{} = {:?}, |S_n|^2 = {}", last.n, last.position, last.position.iter().map(|x| x * x).sum::<i64>());
        println!("wrote {}", out_dir.join(name).display());
    } else {
        if let Some(c) = &args.checkpoints {
            spec.checkpoints = c.clone();
        }
        let mut cfg = spec.ensemble_config()?;
        cfg.workers = args.workers;
        let report = run_ensemble(&cfg)?;
        manifest = Manifest::new(command, &spec);
        let name = match args.format {
            FormatArg::Json => {
                runner::write_json(&out_dir.join("report.json"), &report.to_json())?;
                "report.json"
            }
            FormatArg::Csv => {
                let mut buf = Vec::new();
                report.write_csv(&mut buf).expect("writing to a Vec");
                runner::write_file(&out_dir.join("report.csv"), &buf)?;
                "report.csv"
            }
        };
        manifest.outputs.push(name.into());
        if let Some(c) = report.final_checkpoint() {
            println!(
                "n = {}: E|S_n|^2 = {:.6} +- {:.6}, scaled {:.6} (theory {})",
                c.n,
                c.msd.mean,
                c.msd.se.unwrap_or(f64::NAN),
                c.msd_scaled.mean,
                c.msd_theory.map_or("n/a".into(), |t| format!("{t:.6}"))
            );
        }
        println!("wrote {}", out_dir.join(name).display());
    }
    manifest.outputs.push("manifest.json".into());
    runner::write_json(&out_dir.join("manifest.json"), &manifest.to_json())?;
    Ok(true)
}

fn verify(args: VerifyArgs, command: Vec<String>) -> Result<bool> {
    if args.list {
        for name in runner::bundled_names() {
            let s = runner::bundled(name).expect("bundled");
            println!("{name:24} {:5} d={} p={} beta={} paths={} horizon={}", s.tier.map_or("", |t| t.as_str()), s.d, s.p, s.beta, s.paths, s.horizon);
        }
        return Ok(true);
    }
    let mut specs = if let Some(tier) = args.tier {
        runner::bundled_tier(match tier {
            TierArg::Smoke => Tier::Smoke,
            TierArg::Full => Tier::Full,
        })
    } else if let Some(name) = &args.name {
        let s = runner::bundled(name).ok_or_else(|| {
            let names: Vec<_> = runner::bundled_names().collect();
            HarnessError::Usage(format!("no bundled spec named {name:?}; bundled specs: {}", names.join(", ")))
        })?;
        vec![s]
    } else if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        vec![ExperimentSpec::parse(&text)?]
    } else {
        let half = Number::Exact(Rational { num: 1, den: 2 });
        let one = Number::Exact(Rational { num: 1, den: 1 });
        let mut s = ExperimentSpec::new("inline", args.d.unwrap_or(2), args.p.unwrap_or(half), args.beta.unwrap_or(one));
        s.paths = 1000;
        s.checks = if args.checks.is_empty() { vec![CheckKind::Msd] } else { args.checks.clone() };
        if s.checks.iter().all(|c| *c == CheckKind::Reconstruction) {
            s.name = "reconstruction".into();
        }
        vec![s]
    };
    for s in &mut specs {
        if let Some(d) = args.d {
            s.d = d;
        }
        if let Some(p) = args.p {
            s.p = p;
        }
        if let Some(b) = args.beta {
            s.beta = b;
        }
        if let Some(n) = args.paths {
            s.paths = n;
        }
        if let Some(h) = args.horizon {
            s.horizon = h;
        }
        if let Some(seed) = args.seed {
            s.seed = seed;
        }
    }
    let time_limit = match args.time_limit {
        Some(t) if !(t > 0.0 && t.is_finite()) => return Err(HarnessError::Usage("--time-limit must be a positive number of seconds".into())),
        Some(t) => Some(Duration::from_secs_f64(t)),
        None => None,
    };
    let opts = RunOptions {
        workers: args.workers,
        time_limit,
        only_checks: (!args.checks.is_empty()).then(|| args.checks.clone()),
    };
    let out_root = resolve_out_dir(args.out.as_deref(), None);
    let mut all_passed = true;
    for spec in &specs {
        let params = spec.params()?;
        println!("== {} ==", spec.name);
        banner(&params);
        let output = runner::run_spec(spec, &opts)?;
        report_outcomes(&output);
        let dir = spec.out.clone().filter(|_| args.out.is_none()).unwrap_or_else(|| out_root.join(&spec.name));
        runner::write_run(&dir, &output, command.clone())?;
        println!("wrote {}", dir.display());
        all_passed &= output.verification.passed;
    }
    println!("{}", if all_passed { "all checks passed" } else { "some checks failed" });
    Ok(all_passed)
}

fn report_outcomes(output: &RunOutput) {
    for o in &output.verification.outcomes {
        println!("  {}", o.line());
    }
}

fn theory(args: TheoryArgs) -> Result<bool> {
    let params = model_spec("theory", &args.model).params()?;
    let prediction = TheoryPrediction::evaluate(&params);
    let out = io::stdout();
    let mut out = out.lock();
    let json = serde_json::to_string_pretty(&prediction).expect("prediction serialises");
    writeln!(out, "{json}").map_err(|e| HarnessError::io("<stdout>", e))?;
    Ok(true)
}

fn regime_map_cmd(args: RegimeMapArgs) -> Result<bool> {
    let cells = regime_map(args.d, args.p_steps, args.beta_max, args.beta_steps)?;
    let write = |w: &mut dyn Write, path: &Path| write_regime_csv(w, &cells).map_err(|e| HarnessError::io(path, e));
    match &args.out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            }
            let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
            let mut w = BufWriter::new(f);
            write(&mut w, path)?;
            w.flush().map_err(|e| HarnessError::io(path, e))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock, Path::new("<stdout>"))?;
        }
    }
    Ok(true)
}
