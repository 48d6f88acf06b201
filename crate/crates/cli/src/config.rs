//! TOML experiment configuration. Unknown keys are rejected everywhere.

use std::path::Path;

use oedcss::models::{HeatSpec, PriorSpec, TomoSpec};
use oedcss::selection::{Method, PivotRule};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemConfig {
    Heat(HeatSpec),
    Tomo(TomoSpec),
    Synthetic(SyntheticSpec),
}

impl ProblemConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemConfig::Heat(_) => "heat",
            ProblemConfig::Tomo(_) => "tomo",
            ProblemConfig::Synthetic(_) => "synthetic",
        }
    }
}

/// `A = U diag(spectrum) Vᵀ` with `n` rows and `m` candidate sensors.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub spectrum: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvdConfig {
    pub p: usize,
    pub q: usize,
    /// Dense SVD instead of the randomized range finder.
    pub exact: bool,
}

impl Default for SvdConfig {
    fn default() -> Self {
        Self { p: 20, q: 1, exact: false }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSection {
    pub samples: Option<usize>,
    pub beta: f64,
}

impl Default for HybridSection {
    fn default() -> Self {
        Self { samples: None, beta: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    /// Single target size.
    pub k: Option<usize>,
    /// Inclusive `[start, end, step]` sweep.
    pub k_range: Option<[usize; 3]>,
    pub seeds: Option<Vec<u64>>,
    pub seed_count: Option<u64>,
    #[serde(default = "default_designs")]
    pub random_designs: u64,
}

fn default_designs() -> u64 {
    100
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub prior: PriorSpec,
    #[serde(default = "default_noise")]
    pub noise_pct: f64,
    #[serde(default)]
    pub data_seed: u64,
    pub run: RunConfig,
    #[serde(default)]
    pub svd: SvdConfig,
    #[serde(default)]
    pub hybrid: HybridSection,
    #[serde(default)]
    pub pivot: PivotRule,
}

fn default_noise() -> f64 {
    0.02
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        match &self.problem {
            ProblemConfig::Heat(h) => {
                if h.n_side < 3 || h.steps == 0 || !(h.final_time > 0.0) || h.sensors_per_side == 0 {
                    return bad("heat needs n_side >= 3, steps >= 1, final_time > 0, sensors_per_side >= 1".into());
                }
                if h.sensors_per_side > h.n_side {
                    return bad("heat: sensors_per_side exceeds n_side".into());
                }
            }
            ProblemConfig::Tomo(t) => {
                if t.n_side < 3 || t.receivers == 0 {
                    return bad("tomo needs n_side >= 3 and receivers >= 1".into());
                }
                if t.zone_width.is_some_and(|w| !(w > 0.0)) {
                    return bad("tomo: zone_width must be positive".into());
                }
            }
            ProblemConfig::Synthetic(s) => {
                if s.spectrum.is_empty() || s.spectrum.len() > s.n.min(s.m) {
                    return bad(format!("synthetic: spectrum length must lie in 1..={}", s.n.min(s.m)));
                }
                if s.spectrum.iter().any(|x| !(*x > 0.0)) || s.spectrum.windows(2).any(|w| w[1] > w[0]) {
                    return bad("synthetic: spectrum must be positive and nonincreasing".into());
                }
            }
        }
        if !(self.prior.kappa2 > 0.0) || !(self.prior.alpha > 0.0) {
            return bad("prior: kappa2 and alpha must be positive".into());
        }
        if !(self.noise_pct > 0.0) || !self.noise_pct.is_finite() {
            return bad(format!("noise_pct must be positive, got {}", self.noise_pct));
        }
        if self.run.methods.is_empty() {
            return bad("run.methods is empty".into());
        }
        match (self.run.k, self.run.k_range) {
            (Some(_), Some(_)) => return bad("set either run.k or run.k_range, not both".into()),
            (None, None) => return bad("run.k or run.k_range is required".into()),
            (Some(0), _) => return bad("run.k must be >= 1".into()),
            (_, Some([start, end, step])) if start == 0 || step == 0 || end < start => {
                return bad("run.k_range must be [start >= 1, end >= start, step >= 1]".into())
            }
            _ => {}
        }
        if self.run.seeds.is_some() && self.run.seed_count.is_some() {
            return bad("set either run.seeds or run.seed_count, not both".into());
        }
        if self.run.seed_count == Some(0) || self.run.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return bad("at least one seed is required".into());
        }
        if self.run.random_designs == 0 {
            return bad("run.random_designs must be >= 1".into());
        }
        if self.svd.q > 10 {
            return bad("svd.q above 10 is not supported".into());
        }
        if !(0.0..=1.0).contains(&self.hybrid.beta) {
            return bad(format!("hybrid.beta must lie in [0, 1], got {}", self.hybrid.beta));
        }
        if let PivotRule::Srrqr { f } = self.pivot {
            if !(f >= 1.0) {
                return bad(format!("pivot.f must be >= 1, got {f}"));
            }
        }
        Ok(())
    }

    pub fn ks(&self) -> Vec<usize> {
        match (self.run.k, self.run.k_range) {
            (Some(k), _) => vec![k],
            (_, Some([start, end, step])) => (start..=end).step_by(step).collect(),
            _ => Vec::new(),
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        match (&self.run.seeds, self.run.seed_count) {
            (Some(s), _) => s.clone(),
            (_, Some(n)) => (0..n).collect(),
            _ => vec![0],
        }
    }
}
