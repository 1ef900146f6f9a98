use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::distcore::PParam;
use crate::error::{Error, Result};
use crate::pball::{ShapeRule, WSpec};
use crate::ratefn::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LpConvergence,
    GaussianLimit,
    MomentAudit,
    XiDecay,
    MpBound,
    RateEval,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::LpConvergence,
        ExperimentKind::GaussianLimit,
        ExperimentKind::MomentAudit,
        ExperimentKind::XiDecay,
        ExperimentKind::MpBound,
        ExperimentKind::RateEval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::LpConvergence => "lp-convergence",
            ExperimentKind::GaussianLimit => "gaussian-limit",
            ExperimentKind::MomentAudit => "moment-audit",
            ExperimentKind::XiDecay => "xi-decay",
            ExperimentKind::MpBound => "mp-bound",
            ExperimentKind::RateEval => "rate-eval",
        }
    }

    /// Empirical sample size used when the config leaves it out.
    pub fn default_samples(self) -> usize {
        match self {
            ExperimentKind::LpConvergence => 2000,
            _ => 100_000,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

fn default_k() -> usize {
    1
}

fn default_regime() -> Regime {
    Regime::Alpha { alpha: 0.0 }
}

fn default_wspec() -> WSpec {
    WSpec::Exponential
}

fn default_grid() -> Vec<usize> {
    vec![16, 64, 256, 1024]
}

fn default_replicates() -> usize {
    10
}

/// Field names accepted in config files and as command-line overrides.
pub const FIELDS: [&str; 12] = [
    "experiment",
    "p",
    "k",
    "regime",
    "wspec",
    "n_grid",
    "samples_per_measure",
    "frame_replicates",
    "seed",
    "output",
    "format",
    "rate_matrix",
];

const STRING_FIELDS: [&str; 4] = ["experiment", "output", "format", "rate_matrix"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub p: PParam,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(default = "default_wspec")]
    pub wspec: WSpec,
    #[serde(default = "default_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub samples_per_measure: Option<usize>,
    #[serde(default = "default_replicates")]
    pub frame_replicates: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
    /// Matrix file for `rate-eval`.
    #[serde(default)]
    pub rate_matrix: Option<PathBuf>,
}

/// Parses a TOML value given inline, e.g. `{kind = "alpha", alpha = 0.5}`.
pub fn parse_inline<T: DeserializeOwned>(text: &str) -> Result<T> {
    #[derive(Deserialize)]
    struct Wrap<T> {
        v: T,
    }
    toml::from_str::<Wrap<T>>(&format!("v = {text}"))
        .map(|w| w.v)
        .map_err(|e| Error::Config(format!("cannot parse {text:?}: {}", e.message())))
}

/// Config assembled from an optional file plus `name = value` overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    table: toml::Table,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Ok(ConfigBuilder { table })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: path.to_owned(),
            message: e.message().to_string(),
        })?;
        Ok(ConfigBuilder { table })
    }

    /// Sets `name` from its textual value. The value is read as TOML; path and
    /// enum fields may also be given bare.
    pub fn set(&mut self, name: &str, value: &str) -> Result<&mut Self> {
        if !FIELDS.contains(&name) {
            return Err(Error::Config(format!("unknown config field {name:?}")));
        }
        let parsed = match parse_inline::<toml::Value>(value) {
            Ok(v) => v,
            Err(_) if STRING_FIELDS.contains(&name) => toml::Value::String(value.to_string()),
            Err(e) => return Err(e),
        };
        self.table.insert(name.to_string(), parsed);
        Ok(self)
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::Value::Table(self.table.clone())
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        ConfigBuilder::from_toml(text)?.build()
    }

    pub fn samples(&self) -> usize {
        self.samples_per_measure
            .unwrap_or_else(|| self.experiment.default_samples())
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required".into()))
    }

    pub fn output_format(&self) -> OutputFormat {
        self.format
            .or_else(|| self.output.as_deref().map(OutputFormat::from_path))
            .unwrap_or(OutputFormat::Csv)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.k < 1 {
            return cfg_err("k must be >= 1".into());
        }
        if self.n_grid.is_empty() {
            return cfg_err("n_grid must not be empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return cfg_err(format!("n_grid must be strictly increasing, got {:?}", self.n_grid));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < self.k) {
            return cfg_err(format!("n = {n} in n_grid is below k = {}", self.k));
        }
        if self.samples() < 100 {
            return cfg_err(format!("samples_per_measure must be >= 100, got {}", self.samples()));
        }
        if self.frame_replicates < 1 {
            return cfg_err("frame_replicates must be >= 1".into());
        }
        self.regime
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Regime::Beta { kappa, .. } = self.regime {
            if kappa <= 1.0 {
                return cfg_err(format!("the beta regime needs kappa > 1, got {kappa}"));
            }
        }
        self.wspec
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.experiment == ExperimentKind::RateEval && self.rate_matrix.is_none() {
            return cfg_err("rate-eval needs rate_matrix".into());
        }
        if self.experiment != ExperimentKind::MpBound {
            self.check_regime_consistency()?;
        }
        Ok(())
    }

    /// The regime constant must equal `lim E[W_n] / n^κ`.
    fn check_regime_consistency(&self) -> Result<()> {
        let (target, kappa) = match self.regime {
            Regime::Alpha { alpha } => (alpha, 1.0),
            Regime::Beta { beta, kappa } => (beta, kappa),
        };
        let limit = growth_limit(&self.wspec, self.p, kappa);
        if (limit - target).abs() > 1e-9 * target.max(1.0) {
            return Err(Error::Config(format!(
                "regime {:?} is inconsistent with wspec: E[W_n]/n^{kappa} tends to {limit}",
                self.regime
            )));
        }
        Ok(())
    }
}

/// `lim_n E[W_n] / n^κ`.
pub fn growth_limit(w: &WSpec, p: PParam, kappa: f64) -> f64 {
    match *w {
        WSpec::Gamma {
            shape: ShapeRule::Growing { lambda, kappa: kr, .. },
            rate,
        } => {
            if (kr - kappa).abs() < 1e-12 {
                lambda / (p.get() * rate.value(p))
            } else if kr > kappa {
                f64::INFINITY
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}
