//! Serialized run outputs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineMethod;
use crate::diversity::DiversityKind;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::greedy::{ObjectiveBreakdown, RoundRecord, SelectionMode};
use crate::probe::{AccuracyReport, EvalConfig, GapTable};
use crate::propagation::PropagationConfig;

/// Bumped on every schema-breaking change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Greedy diversified influence maximization with ball coverage.
    DimBall,
    /// Greedy diversified influence maximization with NN diversity.
    DimNn,
    Random,
    Degree,
    Kcenter,
}

impl Method {
    pub fn greedy(kind: DiversityKind) -> Self {
        match kind {
            DiversityKind::Ball => Method::DimBall,
            DiversityKind::Nn => Method::DimNn,
        }
    }

    pub fn baseline(method: BaselineMethod) -> Self {
        match method {
            BaselineMethod::Random => Method::Random,
            BaselineMethod::Degree => Method::Degree,
            BaselineMethod::Kcenter => Method::Kcenter,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::DimBall => "dim-ball",
            Method::DimNn => "dim-nn",
            Method::Random => "random",
            Method::Degree => "degree",
            Method::Kcenter => "kcenter",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub graph: String,
    pub features: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<String>,
    pub directed: bool,
}

/// Everything needed to repeat a selection run on the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub propagation: PropagationConfig,
    pub theta: f64,
    pub prune_floor: f64,
    pub diversity: DiversityKind,
    pub radius: f64,
    pub gamma: f64,
    pub mode: SelectionMode,
    pub budget: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_degree: Option<f64>,
    pub exact_dmax_limit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmaxReport {
    pub value: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub sigma_hat: f64,
    pub d_hat: f64,
    /// Diversity weight actually applied.
    pub gamma: f64,
    #[serde(flatten)]
    pub breakdown: ObjectiveBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceSummary {
    pub stored_entries: usize,
    /// True when the prune floor exceeds theta.
    pub lossy: bool,
    pub zero_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputEcho>,
    pub config: RunConfig,
    pub pool_size: usize,
    pub seeds: Vec<NodeId>,
    /// Per-round greedy records; empty for baselines.
    pub rounds: Vec<RoundRecord>,
    /// `F(S)` of the final seeds under `config`.
    pub objective: ObjectiveReport,
    pub d_max: DmaxReport,
    pub influence: InfluenceSummary,
    pub warnings: Vec<String>,
}

impl SelectionReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: Self = serde_json::from_str(&text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }
}

/// One probe evaluation of a seed prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetAccuracy {
    pub method: Method,
    pub budget: usize,
    pub accuracy: AccuracyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub method: Method,
    pub selection: RunConfig,
    pub probe: EvalConfig,
    pub results: Vec<BudgetAccuracy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coreset: Option<GapTable>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
