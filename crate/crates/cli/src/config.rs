//! Experiment configuration: file format, flag merging, and value parsing.
//!
//! Config files are TOML with one section per concern (`[model]`,
//! `[simulate]`, ...); every value can also be set by a command-line flag,
//! which wins over the file. The fully resolved configuration is echoed into
//! every output's metadata as JSON, and `--config` accepts that JSON back,
//! so any emitted result can be reproduced byte for byte.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use detsched::cost_model::{ComplexityPreset, CostModel, DeadlockSizeModel, ResolutionCostModel};
use detsched::IntervalDistribution;

use crate::CmdError;

/// Parse a float that may be written as a rational like `1/30`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let parse_part = |p: &str| -> Result<f64, String> {
        p.trim()
            .parse::<f64>()
            .map_err(|_| format!("invalid number `{p}`"))
    };
    let v = if let Some((num, den)) = s.split_once('/') {
        let d = parse_part(den)?;
        if d == 0.0 {
            return Err(format!("zero denominator in `{s}`"));
        }
        parse_part(num)? / d
    } else {
        parse_part(s)?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a finite number"))
    }
}

/// Comma-separated list of rational-friendly numbers.
pub fn parse_number_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(parse_number)
        .collect()
}

/// Deserialize a float that may appear as a TOML/JSON string like `"1/30"`.
fn de_rational<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(de)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => parse_number(&s).map_err(D::Error::custom),
    }
}

fn de_rational_opt<'de, D: Deserializer<'de>>(de: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Option::<Raw>::deserialize(de)? {
        None => Ok(None),
        Some(Raw::Num(v)) => Ok(Some(v)),
        Some(Raw::Text(s)) => parse_number(&s).map(Some).map_err(D::Error::custom),
    }
}

/// Log-spaced evaluation grid, written `lo:hi:points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` must be lo:hi:points"));
        }
        let lo = parse_number(parts[0])?;
        let hi = parse_number(parts[1])?;
        let points: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("invalid point count `{}`", parts[2]))?;
        let grid = Self { lo, hi, points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.lo > 0.0 && self.lo.is_finite()) {
            return Err(format!("grid lower bound must be positive, got {}", self.lo));
        }
        if !(self.hi > self.lo && self.hi.is_finite()) {
            return Err(format!(
                "grid upper bound must exceed {}, got {}",
                self.lo, self.hi
            ));
        }
        if self.points < 2 {
            return Err(format!("grid needs at least 2 points, got {}", self.points));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let ratio = self.hi / self.lo;
        (0..self.points)
            .map(|i| self.lo * ratio.powf(i as f64 / (self.points - 1) as f64))
            .collect()
    }
}

/// Which parameter a cost-curve family sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values", rename_all = "kebab-case")]
pub enum FamilyAxis {
    N(Vec<u64>),
    Lambda(Vec<f64>),
}

impl FamilyAxis {
    pub fn parse(s: &str) -> Result<Self, String> {
        let (axis, list) = s
            .split_once('=')
            .ok_or_else(|| format!("family `{s}` must be n=... or lambda=..."))?;
        match axis.trim() {
            "n" => {
                let values = list
                    .split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| {
                        p.trim()
                            .parse::<u64>()
                            .map_err(|_| format!("invalid process count `{p}`"))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if values.is_empty() {
                    return Err("family needs at least one n value".into());
                }
                Ok(Self::N(values))
            }
            "lambda" => {
                let values = parse_number_list(list)?;
                if values.is_empty() {
                    return Err("family needs at least one lambda value".into());
                }
                Ok(Self::Lambda(values))
            }
            other => Err(format!("unknown family axis `{other}` (use n or lambda)")),
        }
    }
}

/// Size/resolution family selector for the model section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    /// Built-in example: `C_R(t) = n³(1 − e^{−t})`, `C_D = n²`.
    Example,
    /// `n_D(t) = n(1 − e^{−rate·t})`, `C_R = c·n·n_D²`.
    Saturating,
    /// `n_D(t) = n(1 − e^{−rate·t})^{1/2}`, `C_R = c·n·n_D²`.
    SqrtSaturating,
    /// `n_D(t) = min(n, Σ coeffs[i]·t^{i+1})`, `C_R = c·n·n_D²`.
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    BrachaToueg,
    Wang,
    KshemkalyaniSinghal94,
    KshemkalyaniSinghal99,
    WorstCase,
}

impl From<PresetName> for ComplexityPreset {
    fn from(p: PresetName) -> Self {
        match p {
            PresetName::BrachaToueg => Self::BrachaToueg,
            PresetName::Wang => Self::Wang,
            PresetName::KshemkalyaniSinghal94 => Self::KshemkalyaniSinghal94,
            PresetName::KshemkalyaniSinghal99 => Self::KshemkalyaniSinghal99,
            PresetName::WorstCase => Self::WorstCase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub family: ModelFamily,
    pub n: u64,
    #[serde(deserialize_with = "de_rational")]
    pub lambda: f64,
    pub rate: f64,
    pub coeffs: Vec<f64>,
    pub c: f64,
    pub preset: Option<PresetName>,
    pub detection_cost: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            family: ModelFamily::Example,
            n: 100,
            lambda: 1.0,
            rate: 1.0,
            coeffs: vec![1.0],
            c: 1.0,
            preset: None,
            detection_cost: None,
        }
    }
}

impl ModelSection {
    /// Instantiate the cost model, with detection cost resolved as
    /// explicit override > preset > family default.
    pub fn build(&self) -> Result<CostModel, CmdError> {
        self.build_with(self.n, self.lambda)
    }

    pub fn build_with(&self, n: u64, lambda: f64) -> Result<CostModel, CmdError> {
        let usage = |e: detsched::Error| CmdError::Usage(e.to_string());
        let preset: Option<ComplexityPreset> = self.preset.map(Into::into);
        let nf = n as f64;
        let (resolution, default_detection) = match self.family {
            ModelFamily::Example => (ResolutionCostModel::saturating_cubic(n), nf * nf),
            ModelFamily::Saturating => {
                let size = DeadlockSizeModel::saturating(n, self.rate).map_err(usage)?;
                self.sized(size, preset, n)?
            }
            ModelFamily::SqrtSaturating => {
                let size = DeadlockSizeModel::sqrt_saturating(n, self.rate).map_err(usage)?;
                self.sized(size, preset, n)?
            }
            ModelFamily::Polynomial => {
                let size =
                    DeadlockSizeModel::polynomial(n, self.coeffs.clone()).map_err(usage)?;
                self.sized(size, preset, n)?
            }
        };
        let detection = self
            .detection_cost
            .or_else(|| preset.map(|p| p.detection_messages(n)))
            .unwrap_or(default_detection);
        CostModel::new(detection, lambda, resolution, n).map_err(usage)
    }

    fn sized(
        &self,
        size: DeadlockSizeModel,
        preset: Option<ComplexityPreset>,
        n: u64,
    ) -> Result<(ResolutionCostModel, f64), CmdError> {
        let preset = preset.unwrap_or(ComplexityPreset::WorstCase);
        let resolution = ResolutionCostModel::from_size(size, preset, self.c)
            .map_err(|e| CmdError::Usage(e.to_string()))?;
        Ok((resolution, preset.detection_messages(n)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub grid: GridSpec,
    pub family: Option<FamilyAxis>,
}

impl Default for CostSection {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                lo: 0.01,
                hi: 10.0,
                points: 50,
            },
            family: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub t_max: f64,
    pub rel_tol: f64,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            t_max: detsched::optimizer::DEFAULT_T_MAX,
            rel_tol: detsched::optimizer::DEFAULT_REL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TableSection {
    #[serde(deserialize_with = "de_rational_opt")]
    pub lambda_only: Option<f64>,
    pub check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Fixed detection intervals to simulate.
    pub t: Vec<f64>,
    /// Renewal interarrival distribution; absent means the fixed policy.
    pub dist: Option<String>,
    pub cycles: u64,
    pub seed: u64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            t: vec![1.0],
            dist: None,
            cycles: 100_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    #[serde(deserialize_with = "de_rational")]
    pub t: f64,
    /// Comma-separated distribution names, means matched to `t`.
    pub dists: String,
    pub cycles: u64,
    pub seed: u64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            t: 1.0,
            dists: "deterministic,exponential,uniform,gamma".into(),
            cycles: 100_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticSection {
    pub n_values: Vec<u64>,
    #[serde(deserialize_with = "de_rational")]
    pub lambda: f64,
    pub c1: f64,
    pub c: f64,
}

impl Default for AsymptoticSection {
    fn default() -> Self {
        Self {
            n_values: vec![10_000, 100_000, 1_000_000, 10_000_000, 100_000_000],
            lambda: 1.0,
            c1: 1.0,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    pub path: Option<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: OutputFormat::Csv,
            path: None,
        }
    }
}

/// The full experiment configuration; sections unused by a command are
/// carried along so a config echo reproduces any run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub cost: CostSection,
    pub optimize: OptimizeSection,
    pub table: TableSection,
    pub simulate: SimulateSection,
    pub compare: CompareSection,
    pub asymptotic: AsymptoticSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Load from TOML or JSON (the emitted config echo is JSON).
    pub fn load(path: &str) -> Result<Self, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Usage(format!("cannot read config `{path}`: {e}")))?;
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            serde_json::from_str(&text)
                .map_err(|e| CmdError::Usage(format!("invalid JSON config `{path}`: {e}")))
        } else {
            toml::from_str(&text)
                .map_err(|e| CmdError::Usage(format!("invalid TOML config `{path}`: {e}")))
        }
    }
}

/// Distribution token for `--dist`/`--dists`: `deterministic`, `exponential`,
/// `uniform`, `gamma` (shape 2), or `gamma:<shape>`; means are matched to `t`.
pub fn parse_distribution(token: &str, t: f64) -> Result<IntervalDistribution, CmdError> {
    let token = token.trim();
    let dist = match token {
        "deterministic" => IntervalDistribution::Deterministic { value: t },
        "exponential" => IntervalDistribution::Exponential { mean: t },
        "uniform" => IntervalDistribution::Uniform { lo: 0.0, hi: 2.0 * t },
        "gamma" => IntervalDistribution::Gamma {
            shape: 2.0,
            scale: t / 2.0,
        },
        other => {
            if let Some(shape_str) = other.strip_prefix("gamma:") {
                let shape = parse_number(shape_str).map_err(CmdError::Usage)?;
                if shape <= 0.0 {
                    return Err(CmdError::Usage(format!(
                        "gamma shape must be positive, got {shape}"
                    )));
                }
                IntervalDistribution::Gamma {
                    shape,
                    scale: t / shape,
                }
            } else {
                return Err(CmdError::Usage(format!(
                    "unknown distribution `{other}` \
                     (use deterministic, exponential, uniform, gamma, gamma:<shape>)"
                )));
            }
        }
    };
    Ok(dist)
}
