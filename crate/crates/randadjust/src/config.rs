//! Experiment configuration (JSON, unknown keys rejected).

use std::path::{Path, PathBuf};

use randadjust_core::dgp::{DesignDist, DgpSpec, NoiseDist};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Overrides `dgp.seed` when set.
pub const SEED_ENV: &str = "RANDADJUST_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignDistName {
    Normal,
    T2,
    T1,
    Dataset,
}

impl From<DesignDistName> for DesignDist {
    fn from(d: DesignDistName) -> Self {
        match d {
            DesignDistName::Normal => DesignDist::Normal,
            DesignDistName::T2 => DesignDist::T2,
            DesignDistName::T1 => DesignDist::T1,
            DesignDistName::Dataset => DesignDist::Dataset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistName {
    Normal,
    T2,
    T1,
    WorstCase,
}

impl From<NoiseDistName> for NoiseDist {
    fn from(d: NoiseDistName) -> Self {
        match d {
            NoiseDistName::Normal => NoiseDist::Normal,
            NoiseDistName::T2 => NoiseDist::T2,
            NoiseDistName::T1 => NoiseDist::T1,
            NoiseDistName::WorstCase => NoiseDist::WorstCase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Unadj,
    Adj,
    AdjDe,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Unadj => "unadj",
            Estimator::Adj => "adj",
            Estimator::AdjDe => "adj_de",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Estimator::Unadj, Estimator::Adj, Estimator::AdjDe].into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarEstimator {
    Theoretical,
    Hc0,
    Hc1,
    Hc2,
    Hc3,
}

impl VarEstimator {
    pub const ALL: [VarEstimator; 5] =
        [VarEstimator::Theoretical, VarEstimator::Hc0, VarEstimator::Hc1, VarEstimator::Hc2, VarEstimator::Hc3];

    pub fn name(self) -> &'static str {
        match self {
            VarEstimator::Theoretical => "theoretical",
            VarEstimator::Hc0 => "hc0",
            VarEstimator::Hc1 => "hc1",
            VarEstimator::Hc2 => "hc2",
            VarEstimator::Hc3 => "hc3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub outcome: String,
    pub treat: String,
    /// Covariate columns; every other column when absent.
    #[serde(default)]
    pub covariates: Option<Vec<String>>,
    /// Append all pairwise products of the covariates.
    #[serde(default)]
    pub interactions: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub design_dist: DesignDistName,
    pub noise_dist: NoiseDistName,
    #[serde(default = "default_pi1")]
    pub pi1: f64,
    #[serde(default = "one")]
    pub sigma1: f64,
    #[serde(default = "one")]
    pub sigma0: f64,
    #[serde(default)]
    pub beta1_star: Vec<f64>,
    #[serde(default)]
    pub beta0_star: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
}

fn default_n() -> usize {
    500
}

fn default_pi1() -> f64 {
    0.2
}

fn default_gammas() -> Vec<f64> {
    (0..=15).map(|k| k as f64 * 0.05).collect()
}

fn default_replicates() -> usize {
    2000
}

fn default_outer_seeds() -> usize {
    10
}

fn default_estimators() -> Vec<Estimator> {
    vec![Estimator::Adj, Estimator::AdjDe]
}

fn default_var_estimators() -> Vec<VarEstimator> {
    VarEstimator::ALL.to_vec()
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dgp: DgpConfig,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    /// Explicit dimensions; replaces `gammas` when present.
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_outer_seeds")]
    pub outer_seeds: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default = "default_var_estimators")]
    pub variance_estimators: Vec<VarEstimator>,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Per-column quantile clipping `[lower_q, upper_q]`.
    #[serde(default)]
    pub trim: Option<[f64; 2]>,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub hc1_arm_level: bool,
}

/// Scale presets. `Desk` keeps the config as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Desk,
    /// n = 2000, 5000 replicates, 50 outer seeds.
    Full,
}

impl ExperimentConfig {
    pub fn new(dgp: DgpConfig) -> Self {
        Self {
            dgp,
            gammas: default_gammas(),
            dims: None,
            replicates: default_replicates(),
            outer_seeds: default_outer_seeds(),
            estimators: default_estimators(),
            variance_estimators: default_var_estimators(),
            level: default_level(),
            trim: None,
            workers: 0,
            hc1_arm_level: false,
        }
    }

    pub fn from_json(text: &str) -> AppResult<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, applies the seed override from the environment, validates.
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text)?;
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> AppResult<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.dgp.seed = v
                .trim()
                .parse()
                .map_err(|_| AppError::Config(format!("{SEED_ENV}=`{v}` is not a 64-bit unsigned integer")))?;
        }
        Ok(())
    }

    pub fn apply_profile(&mut self, profile: Profile) {
        if profile == Profile::Full {
            self.dgp.n = 2000;
            self.replicates = 5000;
            self.outer_seeds = 50;
        }
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: &str| Err(AppError::Config(m.into()));
        if self.replicates < 1 {
            return bad("replicates must be at least 1");
        }
        if self.outer_seeds < 1 {
            return bad("outer_seeds must be at least 1");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level must be in (0, 1)");
        }
        if self.estimators.is_empty() || self.variance_estimators.is_empty() {
            return bad("estimators and variance_estimators must be non-empty");
        }
        match &self.dims {
            Some(d) if d.is_empty() => return bad("dims must be non-empty"),
            None if self.gammas.is_empty() => return bad("gammas must be non-empty"),
            None if self.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) => {
                return bad("gammas must be finite and non-negative")
            }
            _ => {}
        }
        if let Some([l, u]) = self.trim {
            if !(0.0 <= l && l < u && u <= 1.0) {
                return bad("trim must satisfy 0 <= lower < upper <= 1");
            }
        }
        let dataset = self.dgp.design_dist == DesignDistName::Dataset;
        if dataset != self.dgp.dataset.is_some() {
            return bad("`dataset` must be given exactly when design_dist is \"dataset\"");
        }
        if !dataset {
            if self.dims.is_none() {
                for &g in &self.gammas {
                    self.spec(g, self.dgp.seed).validate()?;
                }
            }
        } else if !(self.dgp.beta1_star.is_empty() && self.dgp.beta0_star.is_empty()) {
            return bad("beta*_star are fitted from the dataset and cannot be set");
        }
        Ok(())
    }

    /// Seed of outer repetition `k`.
    pub fn outer_seed(&self, k: usize) -> u64 {
        self.dgp.seed.wrapping_add(k as u64)
    }

    pub fn spec(&self, gamma: f64, seed: u64) -> DgpSpec {
        let mut s = DgpSpec::new(
            self.dgp.n,
            gamma,
            self.dgp.design_dist.into(),
            self.dgp.noise_dist.into(),
            self.dgp.pi1,
            seed,
        );
        s.sigma1 = self.dgp.sigma1;
        s.sigma0 = self.dgp.sigma0;
        s.beta1_star = self.dgp.beta1_star.clone();
        s.beta0_star = self.dgp.beta0_star.clone();
        s
    }

    /// Critical value of the Wald interval: the conventional 1.96 at level
    /// 0.95, the normal quantile otherwise.
    pub fn critical(&self) -> f64 {
        if self.level == 0.95 {
            1.96
        } else {
            randadjust_core::stats::normal_quantile(0.5 * (1.0 + self.level))
        }
    }
}
