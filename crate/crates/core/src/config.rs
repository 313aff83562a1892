//! Experiment configuration (TOML).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::UpdateBase;
use crate::metrics::SummaryOptions;
use crate::model::SystemConfig;
use crate::optimizer::OptimizerOptions;
use crate::sim::{BudgetReference, DacbMode, DbcaParams, BudgetRule};
use crate::traffic::{ArrivalShape, BurstScenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub replications: usize,
    /// Upper bound when replications are raised to meet `ci_target`.
    pub max_replications: usize,
    /// Largest acceptable CI half-width relative to the mean.
    pub ci_target: f64,
    pub round_cap: usize,
    #[serde(default)]
    pub trace: bool,
    pub output_dir: String,
    pub system: SystemConfig<f64>,
    pub scenarios: ScenarioSet,
    pub protocols: ProtocolSet,
    pub dbca: DbcaSettings,
    #[serde(default)]
    pub metrics: SummaryOptions,
    pub analyze: AnalyzeSettings,
    pub validate: ValidateSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSet {
    pub shapes: Vec<ArrivalShape>,
    pub ues: Vec<u64>,
    /// Activation window of the beta and uniform shapes (ms).
    pub window_ms: f64,
}

impl ScenarioSet {
    pub fn scenarios(&self, round_duration_ms: f64) -> Vec<BurstScenario> {
        let mut out = Vec::new();
        for shape in &self.shapes {
            for &ues in &self.ues {
                let window_ms = match shape {
                    ArrivalShape::Delta => round_duration_ms,
                    _ => self.window_ms,
                };
                out.push(BurstScenario { ues, shape: *shape, window_ms });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSet {
    pub dbca_c: Vec<f64>,
    pub dacb: Vec<DacbMode>,
    pub qtra_q: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbcaSettings {
    #[serde(flatten)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub estimator_base: UpdateBase,
    #[serde(default)]
    pub budget_reference: BudgetReference,
}

impl DbcaSettings {
    pub fn params(&self, c: f64) -> DbcaParams<f64> {
        DbcaParams {
            budget: BudgetRule::Proportional { c },
            optimizer: self.optimizer,
            estimator_base: self.estimator_base,
            reference: self.budget_reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeSettings {
    /// Backlogs for the throughput-versus-p curves.
    pub curve_n: Vec<f64>,
    pub curve_k: Vec<u32>,
    pub curve_p_resolution: f64,
    pub frontier_n: f64,
    pub frontier_p_resolution: f64,
    pub drift_epsilon: f64,
    pub drift_round_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSettings {
    pub checks: Vec<String>,
    pub bridge_rounds: usize,
    pub drift_replications: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            replications: 30,
            max_replications: 240,
            ci_target: 0.011,
            round_cap: crate::sim::DEFAULT_ROUND_CAP,
            trace: false,
            output_dir: "out".into(),
            system: SystemConfig::default(),
            scenarios: ScenarioSet {
                shapes: vec![ArrivalShape::Beta { alpha: 3.0, beta: 4.0 }, ArrivalShape::Uniform, ArrivalShape::Delta],
                ues: vec![500, 1000, 2000, 4000, 6000, 8000, 10000],
                window_ms: 1000.0,
            },
            protocols: ProtocolSet {
                dbca_c: vec![1.0, 1.2, 1.4, 1.6, 1.8],
                dacb: vec![DacbMode::Estimated, DacbMode::Genie],
                qtra_q: vec![2, 8],
            },
            dbca: DbcaSettings::default(),
            metrics: SummaryOptions::default(),
            analyze: AnalyzeSettings {
                curve_n: vec![1000.0],
                curve_k: vec![0, 1, 2, 3, 4],
                curve_p_resolution: 0.01,
                frontier_n: 1000.0,
                frontier_p_resolution: 0.001,
                drift_epsilon: crate::analytics::DEFAULT_DRIFT_EPSILON,
                drift_round_cap: crate::analytics::DEFAULT_DRIFT_ROUND_CAP,
            },
            validate: ValidateSettings {
                checks: ["bridge", "solver", "root_finder", "drift"].iter().map(|s| s.to_string()).collect(),
                bridge_rounds: 10_000,
                drift_replications: 10,
            },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the serialized config.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        self.system.validate().map_err(|e| Error::Config(format!("system: {e}")))?;
        if self.master_seed > i64::MAX as u64 {
            return bad("master_seed", "must fit a TOML integer (at most 2^63 - 1)");
        }
        if self.replications == 0 {
            return bad("replications", "must be at least 1");
        }
        if self.max_replications < self.replications {
            return bad("max_replications", "must not be below replications");
        }
        if !(self.ci_target > 0.0) {
            return bad("ci_target", "must be positive");
        }
        if self.round_cap == 0 {
            return bad("round_cap", "must be positive");
        }
        if !(self.scenarios.window_ms > 0.0) {
            return bad("scenarios.window_ms", "must be positive");
        }
        for (i, s) in self.scenarios.scenarios(self.system.round_duration_ms).iter().enumerate() {
            s.validate().map_err(|e| Error::Config(format!("scenarios[{i}]: {e}")))?;
        }
        if let Some(c) = self.protocols.dbca_c.iter().find(|c| !(**c >= 1.0)) {
            return bad("protocols.dbca_c", &format!("{c} is below 1"));
        }
        if let Some(q) = self.protocols.qtra_q.iter().find(|q| **q < 2 || **q > self.system.preambles) {
            return bad("protocols.qtra_q", &format!("{q} outside [2, M]"));
        }
        let a = &self.analyze;
        if a.curve_k.is_empty() {
            return bad("analyze.curve_k", "empty k list");
        }
        if let Some(k) = a.curve_k.iter().find(|k| **k > 30) {
            return bad("analyze.curve_k", &format!("{k} exceeds 30"));
        }
        if a.curve_n.iter().any(|n| !(*n >= 0.0)) {
            return bad("analyze.curve_n", "backlogs must be non-negative");
        }
        for (field, r) in [("analyze.curve_p_resolution", a.curve_p_resolution), ("analyze.frontier_p_resolution", a.frontier_p_resolution)] {
            if !(r > 0.0 && r <= 1.0) {
                return bad(field, "must lie in (0, 1]");
            }
        }
        if !(a.frontier_n >= 1.0) {
            return bad("analyze.frontier_n", "must be at least 1");
        }
        if !(a.drift_epsilon > 0.0) {
            return bad("analyze.drift_epsilon", "must be positive");
        }
        Ok(())
    }
}
