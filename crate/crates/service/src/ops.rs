//! Operations shared by the CLI and the HTTP service. Both front ends call
//! these and serialize the same `ResultDocument`, so their outputs match.

use mtsr_core::config::{ConfigError, ScenarioConfig};
use mtsr_core::planner::{PlanBounds, PlanError, Planner};
use mtsr_core::report::ResultDocument;
use mtsr_core::scenario::{Scenario, ScenarioError};
use mtsr_core::simulator::{compare, simulate, SimConfig, SimError, SimInputs};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpError {
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("simulation: {0}")]
    Simulation(#[from] SimError),
    #[error("planner: {0}")]
    Plan(#[from] PlanError),
    #[error(
        "unstable: arrival rate {:.4} orders/min is not below the maximum throughput {:.4} orders/min",
        .lambda * 60.0,
        .max_throughput * 60.0
    )]
    Unstable { lambda: f64, max_throughput: f64 },
}

pub fn sim_config(cfg: &ScenarioConfig) -> SimConfig {
    let s = &cfg.simulation;
    SimConfig {
        replications: s.replications,
        horizon: s.horizon_h * 3600.0,
        warmup: s.warmup_hours() * 3600.0,
        master_seed: cfg.seeds.simulation,
    }
}

/// Analytical solve. The document is returned even when unstable; callers
/// decide how to report it.
pub fn run_solve(cfg: &ScenarioConfig) -> Result<ResultDocument, OpError> {
    let scenario = Scenario::from_config(cfg)?;
    let analysis = scenario.analyze()?;
    let mut doc = ResultDocument::new("solve", cfg);
    doc.travel = Some(analysis.legs);
    doc.analytical = Some(analysis.result);
    Ok(doc)
}

pub fn unstable_error(doc: &ResultDocument) -> Option<OpError> {
    let a = doc.analytical.as_ref()?;
    (!a.stable).then_some(OpError::Unstable {
        lambda: a.lambda,
        max_throughput: a.max_throughput,
    })
}

pub fn run_simulate(cfg: &ScenarioConfig) -> Result<ResultDocument, OpError> {
    let scenario = Scenario::from_config(cfg)?;
    let res = scenario.resources();
    let inputs = SimInputs::from_scenario(&scenario, &scenario.classes, &res);
    let metrics = simulate(&inputs, &sim_config(cfg))?;
    let mut doc = ResultDocument::new("simulate", cfg);
    doc.simulation = Some(metrics);
    Ok(doc)
}

/// Analytical solve, simulation and their comparison.
pub fn run_validate(cfg: &ScenarioConfig) -> Result<ResultDocument, OpError> {
    let scenario = Scenario::from_config(cfg)?;
    let analysis = scenario.analyze()?;
    if !analysis.result.stable {
        return Err(OpError::Unstable {
            lambda: analysis.result.lambda,
            max_throughput: analysis.result.max_throughput,
        });
    }
    let res = scenario.resources();
    let inputs = SimInputs::from_scenario(&scenario, &scenario.classes, &res);
    let metrics = simulate(&inputs, &sim_config(cfg))?;
    let comparison = compare(analysis.result.metrics.as_ref(), &metrics)?;
    let mut doc = ResultDocument::new("validate", cfg);
    doc.travel = Some(analysis.legs);
    doc.analytical = Some(analysis.result);
    doc.simulation = Some(metrics);
    doc.comparison = Some(comparison);
    Ok(doc)
}

pub fn run_traveltime(cfg: &ScenarioConfig) -> Result<ResultDocument, OpError> {
    let scenario = Scenario::from_config(cfg)?;
    let legs = scenario.leg_times(&scenario.resources().workers)?;
    let mut doc = ResultDocument::new("traveltime", cfg);
    doc.travel = Some(legs);
    Ok(doc)
}

/// Minimum-robot plan at each rate (orders/min); the scenario's own rate
/// when `rates_per_min` is empty.
pub fn run_optimize(
    cfg: &ScenarioConfig,
    rates_per_min: &[f64],
) -> Result<Vec<ResultDocument>, OpError> {
    let scenario = Scenario::from_config(cfg)?;
    let planner = Planner::new(&scenario, PlanBounds::from_scenario(&scenario))?;
    let rates: Vec<f64> = if rates_per_min.is_empty() {
        vec![scenario.lambda()]
    } else {
        rates_per_min.iter().map(|r| r / 60.0).collect()
    };
    rates
        .into_iter()
        .map(|lambda| {
            let plan = planner.minimize(lambda)?;
            let mut doc = ResultDocument::new("optimize", cfg);
            doc.plan = Some(plan);
            Ok(doc)
        })
        .collect()
}
