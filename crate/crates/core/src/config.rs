//! Scenario configuration: one strict schema shared by TOML files and JSON
//! request bodies. Physics parameters have no defaults; run controls
//! (simulation length, solver mode, sampling limits, planner bounds) do.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::Side;
use crate::mva::MvaMode;
use crate::travel::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{}", display_list(.0))]
    Invalid(Vec<FieldError>),
}

impl ConfigError {
    pub fn fields(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(v) => v,
        }
    }

    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid(vec![FieldError {
            path: path.into(),
            message: message.into(),
        }])
    }
}

fn display_list(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub layout: LayoutConfig,
    pub kinematics: KinematicsSection,
    pub orders: OrdersConfig,
    pub robots: RobotsConfig,
    pub handling: HandlingConfig,
    pub charging: ChargingConfig,
    pub energy: EnergySection,
    pub policy: PolicyConfig,
    pub seeds: SeedsConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub travel: TravelConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub shelf_rows: usize,
    pub block_width: usize,
    pub cell_pitch_m: f64,
    pub workstations: Vec<WorkstationConfig>,
    pub charger: ChargerConfig,
}

/// Exactly one of `side` and `cell` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkstationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[i64; 2]>,
    pub workers: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[i64; 2]>,
    pub chargers: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicsSection {
    pub speed_m_per_s: f64,
    pub pick_time_s: f64,
}

/// Either `total_rate_per_min` with `probabilities`, or `rates_per_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdersConfig {
    pub lines: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_rate_per_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates_per_min: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsConfig {
    pub count: u32,
    pub buffer_positions: u32,
}

/// Per-tote handling time, uniform on `[min_s, max_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandlingConfig {
    pub min_s: f64,
    pub max_s: f64,
}

/// Charging duration, uniform on `[min_minutes, max_minutes]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargingConfig {
    pub min_minutes: f64,
    pub max_minutes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    pub threshold_pct: f64,
    pub depletion_pct_per_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub retrieval: Policy,
    /// Put-back sequencing; follows `retrieval` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<Policy>,
}

impl PolicyConfig {
    pub fn storage_policy(&self) -> Policy {
        self.storage.unwrap_or(self.retrieval)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsConfig {
    pub travel: u64,
    pub simulation: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub replications: u32,
    pub horizon_h: f64,
    /// Defaults to a tenth of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_h: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            replications: 5,
            horizon_h: 200.0,
            warmup_h: None,
        }
    }
}

impl SimulationConfig {
    pub fn warmup_hours(&self) -> f64 {
        self.warmup_h.unwrap_or(self.horizon_h / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: MvaMode,
    pub scv_correction: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: MvaMode::Exact,
            scv_correction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelConfig {
    pub min_samples: usize,
    pub max_samples: usize,
    pub rel_precision: f64,
    pub dwell_samples: usize,
}

impl Default for TravelConfig {
    fn default() -> Self {
        TravelConfig {
            min_samples: 1000,
            max_samples: 5_000_000,
            rel_precision: 0.01,
            dwell_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub max_utilization_pct: f64,
    pub max_robots: u32,
    pub max_chargers: u32,
    pub max_workers: u32,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            max_utilization_pct: 90.0,
            max_robots: 64,
            max_chargers: 16,
            max_workers: 12,
        }
    }
}

pub fn parse_toml(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| ConfigError::single("", e.message().to_string()))?;
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::single(
            if path == "." { String::new() } else { path },
            e.inner().message().to_string(),
        )
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_json(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::single(
            if path == "." { String::new() } else { path },
            e.inner().to_string(),
        )
    })?;
    cfg.validate()?;
    Ok(cfg)
}

struct Checker(Vec<FieldError>);

impl Checker {
    fn require(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.0.push(FieldError {
                path: path.into(),
                message: message.into(),
            });
        }
    }

    fn positive(&mut self, v: f64, path: &str) {
        self.require(
            v > 0.0 && v.is_finite(),
            path,
            format!("must be a positive number, got {v}"),
        );
    }

    fn non_negative(&mut self, v: f64, path: &str) {
        self.require(
            v >= 0.0 && v.is_finite(),
            path,
            format!("must be a non-negative number, got {v}"),
        );
    }
}

fn check_placement(c: &mut Checker, path: &str, side: &Option<Side>, cell: &Option<[i64; 2]>) {
    c.require(
        side.is_some() != cell.is_some(),
        path,
        "give exactly one of `side` and `cell`",
    );
}

impl ScenarioConfig {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes to TOML")
    }

    /// Order classes as `(lines, rate per second)`.
    pub fn class_rates(&self) -> Vec<(u32, f64)> {
        let o = &self.orders;
        match (&o.rates_per_min, o.total_rate_per_min, &o.probabilities) {
            (Some(rates), _, _) => o
                .lines
                .iter()
                .zip(rates)
                .map(|(&l, r)| (l, r / 60.0))
                .collect(),
            (None, Some(total), Some(p)) => o
                .lines
                .iter()
                .zip(p)
                .map(|(&l, q)| (l, total * q / 60.0))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut c = Checker(Vec::new());
        let l = &self.layout;
        for (v, name) in [
            (l.blocks_x, "blocks_x"),
            (l.blocks_y, "blocks_y"),
            (l.shelf_rows, "shelf_rows"),
            (l.block_width, "block_width"),
        ] {
            c.require(v >= 1, format!("layout.{name}"), "must be at least 1");
        }
        c.positive(l.cell_pitch_m, "layout.cell_pitch_m");
        c.require(
            !l.workstations.is_empty(),
            "layout.workstations",
            "at least one workstation is required",
        );
        for (i, w) in l.workstations.iter().enumerate() {
            check_placement(
                &mut c,
                &format!("layout.workstations[{i}]"),
                &w.side,
                &w.cell,
            );
            c.require(
                w.workers >= 1,
                format!("layout.workstations[{i}].workers"),
                "must be at least 1",
            );
        }
        check_placement(&mut c, "layout.charger", &l.charger.side, &l.charger.cell);
        c.require(
            l.charger.chargers >= 1,
            "layout.charger.chargers",
            "must be at least 1",
        );

        c.positive(self.kinematics.speed_m_per_s, "kinematics.speed_m_per_s");
        c.non_negative(self.kinematics.pick_time_s, "kinematics.pick_time_s");

        let o = &self.orders;
        c.require(
            !o.lines.is_empty(),
            "orders.lines",
            "at least one order class is required",
        );
        for (i, &n) in o.lines.iter().enumerate() {
            c.require(n >= 1, format!("orders.lines[{i}]"), "must be at least 1");
        }
        let mut sorted = o.lines.clone();
        sorted.sort_unstable();
        sorted.dedup();
        c.require(
            sorted.len() == o.lines.len(),
            "orders.lines",
            "line counts must be distinct",
        );
        match (&o.rates_per_min, o.total_rate_per_min, &o.probabilities) {
            (Some(rates), None, None) => {
                c.require(
                    rates.len() == o.lines.len(),
                    "orders.rates_per_min",
                    "needs one rate per order class",
                );
                for (i, &r) in rates.iter().enumerate() {
                    c.non_negative(r, &format!("orders.rates_per_min[{i}]"));
                }
                c.require(
                    rates.iter().sum::<f64>() > 0.0,
                    "orders.rates_per_min",
                    "total rate must be positive",
                );
            }
            (None, Some(total), Some(p)) => {
                c.non_negative(total, "orders.total_rate_per_min");
                c.require(
                    p.len() == o.lines.len(),
                    "orders.probabilities",
                    "needs one probability per order class",
                );
                for (i, &q) in p.iter().enumerate() {
                    c.non_negative(q, &format!("orders.probabilities[{i}]"));
                }
                let sum: f64 = p.iter().sum();
                c.require(
                    (sum - 1.0).abs() <= 1e-9,
                    "orders.probabilities",
                    format!("must sum to 1, got {sum}"),
                );
            }
            _ => c.require(
                false,
                "orders",
                "give either `rates_per_min`, or `total_rate_per_min` with `probabilities`",
            ),
        }

        c.require(self.robots.count >= 1, "robots.count", "must be at least 1");
        c.require(
            self.robots.buffer_positions >= 1,
            "robots.buffer_positions",
            "must be at least 1",
        );

        let h = &self.handling;
        c.non_negative(h.min_s, "handling.min_s");
        c.positive(h.max_s, "handling.max_s");
        c.require(
            h.min_s <= h.max_s,
            "handling",
            "min_s must not exceed max_s",
        );
        let ch = &self.charging;
        c.positive(ch.min_minutes, "charging.min_minutes");
        c.positive(ch.max_minutes, "charging.max_minutes");
        c.require(
            ch.min_minutes <= ch.max_minutes,
            "charging",
            "min_minutes must not exceed max_minutes",
        );

        let e = &self.energy;
        c.require(
            (0.0..100.0).contains(&e.threshold_pct),
            "energy.threshold_pct",
            format!("must lie in [0, 100), got {}", e.threshold_pct),
        );
        c.non_negative(e.depletion_pct_per_min, "energy.depletion_pct_per_min");

        let s = &self.simulation;
        c.require(
            s.replications >= 1,
            "simulation.replications",
            "must be at least 1",
        );
        c.positive(s.horizon_h, "simulation.horizon_h");
        let warm = s.warmup_hours();
        c.require(
            warm >= 0.0 && warm < s.horizon_h,
            "simulation.warmup_h",
            "must be non-negative and shorter than the horizon",
        );

        let t = &self.travel;
        c.require(
            t.min_samples >= 2,
            "travel.min_samples",
            "must be at least 2",
        );
        c.require(
            t.max_samples >= t.min_samples,
            "travel.max_samples",
            "must not be below min_samples",
        );
        c.require(
            t.rel_precision > 0.0 && t.rel_precision < 1.0,
            "travel.rel_precision",
            "must lie in (0, 1)",
        );
        c.require(
            t.dwell_samples >= 1,
            "travel.dwell_samples",
            "must be at least 1",
        );

        let p = &self.planner;
        c.require(
            p.max_utilization_pct > 0.0 && p.max_utilization_pct < 100.0,
            "planner.max_utilization_pct",
            "must lie in (0, 100)",
        );
        for (v, name) in [
            (p.max_robots, "max_robots"),
            (p.max_chargers, "max_chargers"),
            (p.max_workers, "max_workers"),
        ] {
            c.require(v >= 1, format!("planner.{name}"), "must be at least 1");
        }

        if c.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(c.0))
        }
    }
}
