//! Running specs, bundled specs, output files and manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use marw::montecarlo::{run_ensemble, EnsembleReport};
use marw::Regime;
use serde::{Deserialize, Serialize};

use crate::checks::{self, CheckOutcome, Status};
use crate::error::{HarnessError, Result};
use crate::spec::{CheckKind, ExperimentSpec, Format, Tier};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MARW_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "marw-out";

const BUNDLED: [(&str, &str); 9] = [
    ("diffusive_smoke", include_str!("../specs/diffusive_smoke.spec")),
    ("superdiffusive_smoke", include_str!("../specs/superdiffusive_smoke.spec")),
    ("diffusive_msd", include_str!("../specs/diffusive_msd.spec")),
    ("critical_d1_beta0", include_str!("../specs/critical_d1_beta0.spec")),
    ("superdiffusive_l_beta", include_str!("../specs/superdiffusive_l_beta.spec")),
    ("qsl_a0", include_str!("../specs/qsl_a0.spec")),
    ("qsl_critical_beta1", include_str!("../specs/qsl_critical_beta1.spec")),
    ("mdp_iid", include_str!("../specs/mdp_iid.spec")),
    ("mdp_diffusive", include_str!("../specs/mdp_diffusive.spec")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled(name: &str) -> Option<ExperimentSpec> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ExperimentSpec::parse(text).expect("bundled specs parse"))
}

pub fn bundled_tier(tier: Tier) -> Vec<ExperimentSpec> {
    BUNDLED
        .iter()
        .map(|(_, text)| ExperimentSpec::parse(text).expect("bundled specs parse"))
        .filter(|s| s.tier == Some(tier))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Thread count for the ensemble; output does not depend on it.
    pub workers: Option<usize>,
    pub time_limit: Option<Duration>,
    /// Run only these checks instead of the spec's.
    pub only_checks: Option<Vec<CheckKind>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub spec: String,
    pub regime: Regime,
    pub completed_paths: Option<u64>,
    pub partial: bool,
    pub outcomes: Vec<CheckOutcome>,
    /// No check failed. Skipped checks do not count as failures.
    pub passed: bool,
}

impl Verification {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verification serialises")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub spec: ExperimentSpec,
    pub report: Option<EnsembleReport>,
    pub verification: Verification,
}

/// Run the ensemble the checks need, then evaluate the checks.
pub fn run_spec(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunOutput> {
    let mut spec = spec.clone();
    if let Some(only) = &opts.only_checks {
        spec.checks = only.clone();
    }
    let params = spec.params()?;
    let regime = params.regime();
    let report = if spec.needs_ensemble() {
        let mut cfg = spec.ensemble_config()?;
        cfg.workers = opts.workers;
        cfg.time_limit = opts.time_limit;
        Some(run_ensemble(&cfg)?)
    } else {
        None
    };
    let outcomes: Vec<CheckOutcome> = spec
        .checks
        .iter()
        .map(|&k| match (&report, k) {
            (_, CheckKind::Reconstruction) => checks::reconstruction_check(spec.seed, Some(&params)),
            (Some(r), k) => checks::evaluate(k, r),
            (None, _) => unreachable!("ensemble checks always get a report"),
        })
        .collect();
    let passed = outcomes.iter().all(|o| o.status != Status::Fail);
    let verification = Verification {
        spec: spec.name.clone(),
        regime,
        completed_paths: report.as_ref().map(|r| r.completed_paths),
        partial: report.as_ref().is_some_and(|r| r.partial),
        outcomes,
        passed,
    };
    Ok(RunOutput { spec, report, verification })
}

/// `--out`, then the spec's `out`, then `$MARW_OUT_DIR`, then `./marw-out`.
pub fn resolve_out_dir(cli: Option<&Path>, spec: Option<&Path>) -> PathBuf {
    if let Some(p) = cli.or(spec) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

/// What a run needs to be reproduced byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub harness_version: String,
    pub marw_version: String,
    pub features: Vec<String>,
    pub command: Vec<String>,
    pub seed: u64,
    /// The spec in its key-value form.
    pub spec: String,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: Vec<String>, spec: &ExperimentSpec) -> Self {
        let mut features = Vec::new();
        if cfg!(feature = "parallel") {
            features.push("parallel".to_string());
        }
        Self {
            tool: "marw".into(),
            harness_version: env!("CARGO_PKG_VERSION").into(),
            marw_version: marw::VERSION.into(),
            features,
            command,
            seed: spec.seed,
            spec: spec.to_text(),
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }
}

/// Write a JSON document with a trailing newline.
pub fn write_json(path: &Path, json: &str) -> Result<()> {
    write_file(path, format!("{json}\n").as_bytes())
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Write report, verification, spec and manifest into `dir`; returns the file names.
pub fn write_run(dir: &Path, output: &RunOutput, command: Vec<String>) -> Result<Vec<PathBuf>> {
    let mut manifest = Manifest::new(command, &output.spec);
    let mut files = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>, manifest: &mut Manifest| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &bytes)?;
        manifest.outputs.push(name.to_string());
        files.push(path);
        Ok(())
    };
    if let Some(report) = &output.report {
        for f in &output.spec.formats {
            match f {
                Format::Json => put("report.json", format!("{}\n", report.to_json()).into_bytes(), &mut manifest)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf).expect("writing to a Vec");
                    put("report.csv", buf, &mut manifest)?
                }
            }
        }
    }
    put("checks.json", format!("{}\n", output.verification.to_json()).into_bytes(), &mut manifest)?;
    put("spec.txt", output.spec.to_text().into_bytes(), &mut manifest)?;
    manifest.outputs.push("manifest.json".into());
    let path = dir.join("manifest.json");
    write_json(&path, &manifest.to_json())?;
    files.push(path);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_parse_and_validate() {
        for name in bundled_names() {
            let s = bundled(name).unwrap();
            assert_eq!(s.name, name);
            assert!(s.tier.is_some());
            s.ensemble_config().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(bundled_tier(Tier::Smoke).iter().any(|s| s.name == "diffusive_smoke"));
        assert!(bundled("critical_d1_beta0").unwrap().params().unwrap().regime() == Regime::Critical);
    }

    #[test]
    fn out_dir_precedence() {
        assert_eq!(resolve_out_dir(Some(Path::new("a")), Some(Path::new("b"))), PathBuf::from("a"));
        assert_eq!(resolve_out_dir(None, Some(Path::new("b"))), PathBuf::from("b"));
    }
}
