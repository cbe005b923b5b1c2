use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::broadcast::Disclosure;
use crate::env::WorldConfig;
use crate::error::{Error, Result};
use crate::policies::{Algorithm, PolicyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Uniform,
    Diverse,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Uniform => "uniform",
            Scenario::Diverse => "diverse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { base, count } => (*base..base + count).collect(),
        }
    }
}

/// Steps at which metrics are recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    /// `"all"` or `"log"` (every step up to 10, then 20 points per decade).
    Named(String),
    Every { every: u64 },
    Points(Vec<u64>),
}

impl Default for Grid {
    fn default() -> Self {
        Grid::Named("log".into())
    }
}

impl Grid {
    /// Sorted, deduplicated steps in `[1, horizon]`, always ending at `horizon`
    /// when it is positive.
    pub fn steps(&self, horizon: u64) -> Result<Vec<u64>> {
        let mut out: Vec<u64> = match self {
            Grid::Named(name) if name == "all" => (1..=horizon).collect(),
            Grid::Named(name) if name == "log" => {
                let mut v: Vec<u64> = (1..=horizon.min(10)).collect();
                let mut e = 21;
                loop {
                    let t = 10f64.powf(e as f64 / 20.0).round() as u64;
                    if t > horizon {
                        break;
                    }
                    v.push(t);
                    e += 1;
                }
                v
            }
            Grid::Named(name) => {
                return Err(Error::config("grid", format!("unknown grid `{name}` (expected all or log)")))
            }
            Grid::Every { every: 0 } => return Err(Error::config("grid.every", "must be positive")),
            Grid::Every { every } => (1..=horizon).filter(|t| t % every == 0).collect(),
            Grid::Points(p) => p.iter().copied().filter(|&t| t >= 1 && t <= horizon).collect(),
        };
        if horizon > 0 {
            out.push(horizon);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    /// Power applied to the gaps in the bound: 1 or 2.
    #[serde(default = "default_exponent")]
    pub exponent: u8,
    /// Slack in the `6 + ε` constant.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_exponent() -> u8 {
    2
}

fn default_epsilon() -> f64 {
    0.01
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            exponent: default_exponent(),
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub scenario: Scenario,
    pub disclosure: Disclosure,
    pub algorithms: Vec<Algorithm>,
    pub horizon: u64,
    pub seeds: Seeds,
    /// Draw one world from this seed for every replication. When absent each
    /// replication draws its world from its own seed.
    #[serde(default)]
    pub world_seed: Option<u64>,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub bound: BoundConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::config("<document>", e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.disclosure.validate()?;
        self.policy.validate()?;
        match self.scenario {
            Scenario::Uniform if self.world.groups() != 1 => {
                return Err(Error::config("scenario", "uniform scenario needs exactly one group"))
            }
            Scenario::Diverse if self.world.groups() < 2 => {
                return Err(Error::config("scenario", "diverse scenario needs at least two groups"))
            }
            _ => {}
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms", "at least one algorithm is required"));
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return Err(Error::config("algorithms", format!("{a} listed twice")));
            }
            a.check_disclosure(self.disclosure)?;
        }
        let seeds = self.seeds.expand();
        if seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        if !matches!(self.bound.exponent, 1 | 2) {
            return Err(Error::config("bound.exponent", "must be 1 or 2"));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
        if !(self.bound.epsilon > 0.0) {
            return Err(Error::config("bound.epsilon", "must be positive"));
        }
        self.grid.steps(self.horizon)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Short identifier used in the `run_id` column.
    pub fn run_id(&self) -> String {
        self.hash()[..16].to_string()
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    OmegaCross,
    Period,
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "omega_cross" => Ok(SweepParam::OmegaCross),
            "L" | "l" | "period" => Ok(SweepParam::Period),
            other => Err(Error::config(
                "param",
                format!("unknown sweep parameter `{other}` (expected alpha, omega_cross or L)"),
            )),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::OmegaCross => "omega_cross",
            SweepParam::Period => "L",
        }
    }

    /// A copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::Alpha => {
                if !cfg.algorithms.iter().any(|a| a.is_part()) {
                    return Err(Error::config("param", "alpha sweep needs u_part or d_part"));
                }
                cfg.policy.alpha = value;
            }
            SweepParam::OmegaCross => {
                if !cfg.algorithms.contains(&Algorithm::DPart) {
                    return Err(Error::config("param", "omega_cross sweep needs d_part"));
                }
                cfg.policy.omega_cross = value;
            }
            SweepParam::Period => {
                if !cfg.algorithms.iter().any(|a| a.is_full()) {
                    return Err(Error::config("param", "L sweep needs u_full or d_full"));
                }
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::config("values", format!("L must be a positive integer, got {value}")));
                }
                cfg.disclosure = Disclosure::FullPeriodic { period: value as u64 };
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
