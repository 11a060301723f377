//! Experiment specs and their key-value text form.
//!
//! One `key = value` pair per line; `#` starts a comment. Lists are comma
//! separated. Unknown keys are an error.
//!
//! ```text
//! name = diffusive_smoke
//! tier = smoke
//! d = 2
//! p = 1/2
//! beta = 1
//! paths = 10000
//! horizon = 10000
//! seed = 1
//! checks = msd, barycenter
//! ```

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use marw::montecarlo::{geometric_checkpoints, EnsembleConfig, Estimators, MdpConfig, DEFAULT_BLOCK_SIZE, DEFAULT_CHECKPOINTS};
use marw::{ModelParams, Rational, Regime};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// A parameter as written: an exact rational, or a float given in a form that
/// is not exactly representable (such as `1e-3`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Number {
    Exact(Rational),
    Float(f64),
}

impl Number {
    pub fn to_f64(self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64(),
            Number::Float(x) => x,
        }
    }
}

impl FromStr for Number {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(r) = s.parse::<Rational>() {
            return Ok(Number::Exact(r));
        }
        match s.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Number::Float(x)),
            _ => Err(HarnessError::Spec(format!("{s:?} is not a number"))),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{r}"),
            // exponent form never reads back as a rational
            Number::Float(x) => write!(f, "{x:e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Smoke,
    Full,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Smoke => "smoke",
            Tier::Full => "full",
        }
    }
}

impl FromStr for Tier {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "smoke" => Ok(Tier::Smoke),
            "full" => Ok(Tier::Full),
            other => Err(HarnessError::Spec(format!("tier must be smoke or full, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(HarnessError::Spec(format!("format must be json or csv, got {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Checkpoints {
    /// About this many geometrically spaced points up to the horizon.
    Geometric(usize),
    /// `1, k, 2k, …` and the horizon.
    Every(usize),
    List(Vec<usize>),
}

impl Checkpoints {
    pub fn resolve(&self, horizon: usize) -> Vec<usize> {
        match self {
            Checkpoints::Geometric(k) => geometric_checkpoints(horizon, *k),
            Checkpoints::Every(k) => {
                let k = (*k).max(1);
                let mut v: Vec<usize> = std::iter::once(1).chain((1..=horizon / k).map(|i| i * k)).filter(|&n| n <= horizon).collect();
                v.dedup();
                if v.last() != Some(&horizon) && horizon >= 1 {
                    v.push(horizon);
                }
                v
            }
            Checkpoints::List(v) => v.clone(),
        }
    }
}

impl FromStr for Checkpoints {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("geometric") {
            let k = rest.trim().trim_start_matches(':').trim();
            let k = if k.is_empty() { DEFAULT_CHECKPOINTS } else { parse_int(k, "checkpoints")? };
            return Ok(Checkpoints::Geometric(k));
        }
        if let Some(rest) = s.strip_prefix("every") {
            let k = rest.trim().trim_start_matches(':').trim();
            return Ok(Checkpoints::Every(parse_int(k, "checkpoints")?));
        }
        Ok(Checkpoints::List(split_list(s).map(|x| parse_int(x, "checkpoints")).collect::<Result<_>>()?))
    }
}

impl fmt::Display for Checkpoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Checkpoints::Geometric(k) => write!(f, "geometric:{k}"),
            Checkpoints::Every(k) => write!(f, "every:{k}"),
            Checkpoints::List(v) => f.write_str(&join(v)),
        }
    }
}

/// A pass/fail check run against an ensemble report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Exact identities and enumeration oracles; needs no ensemble.
    Reconstruction,
    Msd,
    LBetaMean,
    LBetaSecondMoment,
    Barycenter,
    Qsl,
    SigmaRatio,
    Mdp,
    MsdRegression,
}

impl CheckKind {
    pub const ALL: [CheckKind; 9] = [
        CheckKind::Reconstruction,
        CheckKind::Msd,
        CheckKind::LBetaMean,
        CheckKind::LBetaSecondMoment,
        CheckKind::Barycenter,
        CheckKind::Qsl,
        CheckKind::SigmaRatio,
        CheckKind::Mdp,
        CheckKind::MsdRegression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Reconstruction => "reconstruction",
            CheckKind::Msd => "msd",
            CheckKind::LBetaMean => "l_beta_mean",
            CheckKind::LBetaSecondMoment => "l_beta_second_moment",
            CheckKind::Barycenter => "barycenter",
            CheckKind::Qsl => "qsl",
            CheckKind::SigmaRatio => "sigma_ratio",
            CheckKind::Mdp => "mdp",
            CheckKind::MsdRegression => "msd_regression",
        }
    }

    pub fn needs_ensemble(self) -> bool {
        self != CheckKind::Reconstruction
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        CheckKind::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = CheckKind::ALL.iter().map(|c| c.as_str()).collect();
                HarnessError::Spec(format!("unknown check {s:?}; known checks: {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    pub eta: Number,
    pub radii: Vec<Number>,
}

impl Default for MdpSpec {
    fn default() -> Self {
        Self {
            eta: Number::Exact(Rational { num: 1, den: 6 }),
            radii: vec![Number::Exact(Rational { num: 1, den: 2 }), Number::Exact(Rational { num: 1, den: 1 })],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub tier: Option<Tier>,
    pub d: usize,
    pub p: Number,
    pub beta: Number,
    pub paths: u64,
    pub horizon: usize,
    pub seed: u64,
    pub checkpoints: Checkpoints,
    pub block_size: usize,
    /// Estimators requested on top of those the checks need.
    pub estimators: Vec<EstimatorKind>,
    pub mdp: Option<MdpSpec>,
    pub checks: Vec<CheckKind>,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Qsl,
    BarycenterQsl,
    LBeta,
    SigmaRatio,
    Mdp,
}

impl EstimatorKind {
    const ALL: [EstimatorKind; 5] =
        [EstimatorKind::Qsl, EstimatorKind::BarycenterQsl, EstimatorKind::LBeta, EstimatorKind::SigmaRatio, EstimatorKind::Mdp];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Qsl => "qsl",
            EstimatorKind::BarycenterQsl => "barycenter_qsl",
            EstimatorKind::LBeta => "l_beta",
            EstimatorKind::SigmaRatio => "sigma_ratio",
            EstimatorKind::Mdp => "mdp",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        EstimatorKind::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| HarnessError::Spec(format!("unknown estimator {s:?}")))
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl ExperimentSpec {
    /// A spec with defaults for everything but the model.
    pub fn new(name: impl Into<String>, d: usize, p: Number, beta: Number) -> Self {
        Self {
            name: name.into(),
            tier: None,
            d,
            p,
            beta,
            paths: 1,
            horizon: 1000,
            seed: 0,
            checkpoints: Checkpoints::Geometric(DEFAULT_CHECKPOINTS),
            block_size: DEFAULT_BLOCK_SIZE,
            estimators: Vec::new(),
            mdp: None,
            checks: Vec::new(),
            out: None,
            formats: vec![Format::Json, Format::Csv],
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        let params = match (self.p, self.beta) {
            (Number::Exact(p), Number::Exact(b)) => ModelParams::from_rationals(self.d, p, b),
            (p, b) => ModelParams::new(self.d, p.to_f64(), b.to_f64()),
        };
        params.map_err(HarnessError::Domain)
    }

    pub fn mdp_config(&self) -> MdpConfig {
        let m = self.mdp.clone().unwrap_or_default();
        MdpConfig { eta: m.eta.to_f64(), radii: m.radii.iter().map(|r| r.to_f64()).collect() }
    }

    /// Estimators the run accumulates: the explicit ones plus those the checks read.
    pub fn effective_estimators(&self, regime: Regime) -> Estimators {
        let has = |e: EstimatorKind| self.estimators.contains(&e);
        let check = |c: CheckKind| self.checks.contains(&c);
        let superdiffusive = regime == Regime::Superdiffusive;
        Estimators {
            qsl: has(EstimatorKind::Qsl) || check(CheckKind::Qsl),
            barycenter_qsl: has(EstimatorKind::BarycenterQsl),
            l_beta: has(EstimatorKind::LBeta)
                || check(CheckKind::LBetaMean)
                || check(CheckKind::LBetaSecondMoment)
                || (check(CheckKind::Barycenter) && superdiffusive),
            sigma_ratio: has(EstimatorKind::SigmaRatio) || check(CheckKind::SigmaRatio),
            mdp: (has(EstimatorKind::Mdp) || check(CheckKind::Mdp)).then(|| self.mdp_config()),
        }
    }

    pub fn ensemble_config(&self) -> Result<EnsembleConfig> {
        let params = self.params()?;
        let mut cfg = EnsembleConfig::new(params, self.paths, self.horizon, self.seed);
        cfg.checkpoints = self.checkpoints.resolve(self.horizon);
        cfg.block_size = self.block_size;
        cfg.estimators = self.effective_estimators(params.regime());
        cfg.validate().map_err(HarnessError::Domain)?;
        Ok(cfg)
    }

    pub fn needs_ensemble(&self) -> bool {
        self.checks.iter().any(|c| c.needs_ensemble()) || self.checks.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut d = None;
        let mut p = None;
        let mut beta = None;
        let mut spec = ExperimentSpec::new("", 1, Number::Float(0.0), Number::Float(0.0));
        let mut mdp_eta = None;
        let mut mdp_radii = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| HarnessError::Spec(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let wrap = |e: HarnessError| err(e.to_string());
            match key {
                "name" => name = Some(value.to_string()),
                "tier" => spec.tier = Some(value.parse().map_err(wrap)?),
                "d" => d = Some(parse_int(value, "d").map_err(wrap)?),
                "p" => p = Some(value.parse().map_err(wrap)?),
                "beta" => beta = Some(value.parse().map_err(wrap)?),
                "paths" => spec.paths = parse_int(value, "paths").map_err(wrap)?,
                "horizon" => spec.horizon = parse_int(value, "horizon").map_err(wrap)?,
                "seed" => spec.seed = parse_int(value, "seed").map_err(wrap)?,
                "checkpoints" => spec.checkpoints = value.parse().map_err(wrap)?,
                "block_size" => spec.block_size = parse_int(value, "block_size").map_err(wrap)?,
                "estimators" => spec.estimators = parse_list(value).map_err(wrap)?,
                "mdp_eta" => mdp_eta = Some(value.parse().map_err(wrap)?),
                "mdp_radii" => mdp_radii = Some(parse_list(value).map_err(wrap)?),
                "checks" => spec.checks = parse_list(value).map_err(wrap)?,
                "out" => spec.out = (!value.is_empty()).then(|| PathBuf::from(value)),
                "format" => spec.formats = parse_list(value).map_err(wrap)?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| HarnessError::Spec(format!("missing required key {k:?}"));
        spec.name = name.ok_or_else(|| missing("name"))?;
        spec.d = d.ok_or_else(|| missing("d"))?;
        spec.p = p.ok_or_else(|| missing("p"))?;
        spec.beta = beta.ok_or_else(|| missing("beta"))?;
        if mdp_eta.is_some() || mdp_radii.is_some() {
            let def = MdpSpec::default();
            spec.mdp = Some(MdpSpec { eta: mdp_eta.unwrap_or(def.eta), radii: mdp_radii.unwrap_or(def.radii) });
        }
        if spec.name.is_empty() || spec.name.contains(char::is_whitespace) || spec.name.contains('/') {
            return Err(HarnessError::Spec(format!("name must be a non-empty word without '/', got {:?}", spec.name)));
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        if let Some(t) = self.tier {
            let _ = writeln!(s, "tier = {}", t.as_str());
        }
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "beta = {}", self.beta);
        let _ = writeln!(s, "paths = {}", self.paths);
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "checkpoints = {}", self.checkpoints);
        let _ = writeln!(s, "block_size = {}", self.block_size);
        let _ = writeln!(s, "estimators = {}", join(&self.estimators));
        if let Some(m) = &self.mdp {
            let _ = writeln!(s, "mdp_eta = {}", m.eta);
            let _ = writeln!(s, "mdp_radii = {}", join(&m.radii));
        }
        let _ = writeln!(s, "checks = {}", join(&self.checks));
        if let Some(o) = &self.out {
            let _ = writeln!(s, "out = {}", o.display());
        }
        let _ = writeln!(s, "format = {}", join(&self.formats));
        s
    }
}

impl FromStr for ExperimentSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentSpec::parse(s)
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_list<T: FromStr<Err = HarnessError>>(s: &str) -> Result<Vec<T>> {
    split_list(s).map(str::parse).collect()
}

fn parse_int<T: FromStr>(s: &str, key: &str) -> Result<T> {
    let cleaned: String = s.trim().chars().filter(|&c| c != '_').collect();
    cleaned.parse().map_err(|_| HarnessError::Spec(format!("{key} must be a non-negative integer, got {s:?}")))
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}
