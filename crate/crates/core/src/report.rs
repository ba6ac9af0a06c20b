//! Machine-readable result document shared by the CLI and the HTTP service.

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::planner::PlanResult;
use crate::simulator::{ComparisonReport, SimMetrics};
use crate::solver::SolveResult;
use crate::travel::{LegTimes, Policy};

pub const TOOL: &str = "mtsr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub travel_seed: u64,
    pub simulation_seed: u64,
    pub policy: Policy,
    pub storage_policy: Policy,
    /// Unix seconds; only filled in on request so documents stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
}

impl Provenance {
    pub fn for_config(cfg: &ScenarioConfig) -> Self {
        Provenance {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            travel_seed: cfg.seeds.travel,
            simulation_seed: cfg.seeds.simulation,
            policy: cfg.policy.retrieval,
            storage_policy: cfg.policy.storage_policy(),
            generated_at_unix: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub command: String,
    pub provenance: Provenance,
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel: Option<LegTimes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytical: Option<SolveResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanResult>,
}

impl ResultDocument {
    pub fn new(command: &str, cfg: &ScenarioConfig) -> Self {
        ResultDocument {
            command: command.to_string(),
            provenance: Provenance::for_config(cfg),
            scenario: cfg.clone(),
            travel: None,
            analytical: None,
            simulation: None,
            comparison: None,
            plan: None,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result document serializes");
        s.push('\n');
        s
    }
}
