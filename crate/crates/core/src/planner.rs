//! Brute-force resource planning: the fewest robots that keep the system
//! stable with every average utilization under a target, searching charger
//! counts and evenly spread worker allocations at each robot count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::OrderClass;
use crate::scenario::{Resources, Scenario, ScenarioError};
use crate::solver::SolveResult;
use crate::travel::LegTimes;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no feasible configuration within bounds at {lambda_per_min:.3} orders/min")]
    NoFeasible { lambda_per_min: f64 },
    #[error("invalid planner bounds: {0}")]
    BadBounds(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanBounds {
    pub max_utilization_pct: f64,
    pub min_robots: u32,
    pub max_robots: u32,
    pub max_chargers: u32,
    /// Upper bound on the total number of workers.
    pub max_workers: u32,
}

impl PlanBounds {
    pub fn from_scenario(s: &Scenario) -> Self {
        let p = &s.config.planner;
        PlanBounds {
            max_utilization_pct: p.max_utilization_pct,
            min_robots: 1,
            max_robots: p.max_robots,
            max_chargers: p.max_chargers,
            max_workers: p.max_workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub lambda: f64,
    pub robots: u32,
    pub chargers: u32,
    pub workers: Vec<u32>,
    pub result: SolveResult,
    pub evaluated: usize,
}

/// Allocations of `total` workers over `stations` with at most one worker of
/// difference, in lexicographic order.
pub fn even_allocations(total: u32, stations: usize) -> Vec<Vec<u32>> {
    if stations == 0 || (total as usize) < stations {
        return Vec::new();
    }
    let base = total / stations as u32;
    let extra = total as usize % stations;
    let mut out = Vec::new();
    // Each subset of size `extra` gets one more worker.
    for mask in 0u64..(1u64 << stations) {
        if mask.count_ones() as usize == extra {
            out.push(
                (0..stations)
                    .map(|i| base + ((mask >> i) & 1) as u32)
                    .collect(),
            );
        }
    }
    out.sort();
    out
}

fn normalized(workers: &[u32]) -> Vec<u32> {
    fn gcd(a: u32, b: u32) -> u32 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let g = workers.iter().copied().fold(0, gcd).max(1);
    workers.iter().map(|w| w / g).collect()
}

pub fn is_feasible(result: &SolveResult, max_utilization_pct: f64) -> bool {
    result.metrics.as_ref().is_some_and(|m| {
        m.rho_r <= max_utilization_pct
            && m.rho_w <= max_utilization_pct
            && m.rho_c <= max_utilization_pct
    })
}

/// Preference between two feasible candidates at the same robot count:
/// higher robot utilization, then fewer chargers plus workers, then lower
/// THT, then the lexicographically smaller allocation.
pub fn better(a: &PlanResult, b: &PlanResult) -> bool {
    let (ma, mb) = (
        a.result.metrics.as_ref().unwrap(),
        b.result.metrics.as_ref().unwrap(),
    );
    let cost = |p: &PlanResult| p.chargers + p.workers.iter().sum::<u32>();
    mb.rho_r
        .total_cmp(&ma.rho_r)
        .then(cost(a).cmp(&cost(b)))
        .then(ma.tht.total_cmp(&mb.tht))
        .then((a.chargers, &a.workers).cmp(&(b.chargers, &b.workers)))
        .is_lt()
}

pub struct Planner<'a> {
    scenario: &'a Scenario,
    legs: BTreeMap<Vec<u32>, LegTimes>,
    allocations: Vec<Vec<u32>>,
    bounds: PlanBounds,
}

impl<'a> Planner<'a> {
    /// Precomputes travel legs for every worker allocation the bounds admit.
    pub fn new(scenario: &'a Scenario, bounds: PlanBounds) -> Result<Self, PlanError> {
        let nw = scenario.distances.num_workstations();
        if bounds.min_robots == 0 || bounds.min_robots > bounds.max_robots {
            return Err(PlanError::BadBounds(
                "need 1 <= min_robots <= max_robots".into(),
            ));
        }
        if bounds.max_chargers == 0 || (bounds.max_workers as usize) < nw {
            return Err(PlanError::BadBounds(format!(
                "need at least one charger and {nw} workers"
            )));
        }
        if !(bounds.max_utilization_pct > 0.0 && bounds.max_utilization_pct < 100.0) {
            return Err(PlanError::BadBounds(
                "utilization target must lie in (0, 100)".into(),
            ));
        }
        let allocations: Vec<Vec<u32>> = (nw as u32..=bounds.max_workers)
            .flat_map(|w| even_allocations(w, nw))
            .collect();
        let mut keys: Vec<Vec<u32>> = allocations.iter().map(|a| normalized(a)).collect();
        keys.sort();
        keys.dedup();
        let computed: Vec<(Vec<u32>, Result<LegTimes, ScenarioError>)> = keys
            .into_par_iter()
            .map(|k| {
                let l = scenario.leg_times(&k);
                (k, l)
            })
            .collect();
        let mut legs = BTreeMap::new();
        for (k, l) in computed {
            legs.insert(k, l?);
        }
        Ok(Planner {
            scenario,
            legs,
            allocations,
            bounds,
        })
    }

    pub fn allocations(&self) -> &[Vec<u32>] {
        &self.allocations
    }

    pub fn legs_for(&self, workers: &[u32]) -> &LegTimes {
        &self.legs[&normalized(workers)]
    }

    pub fn evaluate(
        &self,
        classes: &[OrderClass],
        res: &Resources,
    ) -> Result<SolveResult, PlanError> {
        Ok(self
            .scenario
            .analyze_with(self.legs_for(&res.workers), classes, res)?
            .result)
    }

    /// All candidates at one robot count, in a fixed order.
    pub fn candidates(&self, robots: u32) -> Vec<Resources> {
        (1..=self.bounds.max_chargers)
            .flat_map(|chargers| {
                self.allocations.iter().map(move |w| Resources {
                    robots,
                    workers: w.clone(),
                    chargers,
                })
            })
            .collect()
    }

    /// Minimum robots at total rate `lambda` (orders/s).
    pub fn minimize(&self, lambda: f64) -> Result<PlanResult, PlanError> {
        let classes = self.scenario.classes_at_rate(lambda);
        let mut evaluated = 0;
        for robots in self.bounds.min_robots..=self.bounds.max_robots {
            let cands = self.candidates(robots);
            evaluated += cands.len();
            let results: Vec<Result<Option<PlanResult>, PlanError>> = cands
                .into_par_iter()
                .map(|res| {
                    let result = self.evaluate(&classes, &res)?;
                    Ok(
                        is_feasible(&result, self.bounds.max_utilization_pct).then_some(
                            PlanResult {
                                lambda,
                                robots,
                                chargers: res.chargers,
                                workers: res.workers,
                                result,
                                evaluated: 0,
                            },
                        ),
                    )
                })
                .collect();
            let mut best: Option<PlanResult> = None;
            for r in results {
                if let Some(p) = r? {
                    if best.as_ref().is_none_or(|b| better(&p, b)) {
                        best = Some(p);
                    }
                }
            }
            if let Some(mut b) = best {
                b.evaluated = evaluated;
                return Ok(b);
            }
        }
        Err(PlanError::NoFeasible {
            lambda_per_min: lambda * 60.0,
        })
    }
}

pub fn minimize_resources(
    scenario: &Scenario,
    lambda: f64,
    bounds: PlanBounds,
) -> Result<PlanResult, PlanError> {
    Planner::new(scenario, bounds)?.minimize(lambda)
}
