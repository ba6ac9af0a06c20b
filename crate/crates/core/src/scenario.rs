//! Turns a validated configuration into the layout, distance matrix, order
//! classes and service moments, and assembles queueing models from them for
//! any resource allocation or arrival rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::layout::{
    generate_layout, shortest_distances, DistanceMatrix, GridLayout, LayoutError, LayoutParams,
    Placement, StationPlan,
};
use crate::model::{
    build_qn_model, build_routing, build_trip_plan, charging_service_moments,
    classes_from_probabilities, workstation_service_moments, EnergyConfig, ModelError, ModelInputs,
    OrderClass, QnModel, RoutingTable, ServiceMoments, TripPlan,
};
use crate::mva::MvaOptions;
use crate::solver::{solve, SolveResult, SolverError, SolverOptions};
use crate::travel::{
    compute_leg_times, KinematicsConfig, LegTimes, McLimits, Policy, TravelError, TravelSettings,
    TravelTimeTable,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("travel: {0}")]
    Travel(#[from] TravelError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resources {
    pub robots: u32,
    pub workers: Vec<u32>,
    pub chargers: u32,
}

impl Resources {
    pub fn total_workers(&self) -> u32 {
        self.workers.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub layout: GridLayout,
    pub distances: DistanceMatrix,
    pub classes: Vec<OrderClass>,
    pub plans: Vec<TripPlan>,
    pub kinematics: KinematicsConfig,
    pub energy: EnergyConfig,
    /// Workstation handling moments `[o][t]`.
    pub handling: Vec<Vec<ServiceMoments>>,
    pub charging: ServiceMoments,
}

/// Everything an analytical run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub legs: LegTimes,
    pub routing: RoutingTable,
    pub model: QnModel,
    pub result: SolveResult,
}

fn placement(side: Option<crate::layout::Side>, cell: Option<[i64; 2]>) -> Placement {
    match (side, cell) {
        (Some(s), _) => Placement::Side(s),
        (None, Some([x, y])) => Placement::Cell { x, y },
        (None, None) => unreachable!("validated config has a placement"),
    }
}

impl Scenario {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self, ScenarioError> {
        config.validate()?;
        let l = &config.layout;
        let params = LayoutParams {
            blocks_x: l.blocks_x,
            blocks_y: l.blocks_y,
            shelf_rows: l.shelf_rows,
            block_width: l.block_width,
            cell_pitch: l.cell_pitch_m,
        };
        let plan = StationPlan {
            workstations: l
                .workstations
                .iter()
                .map(|w| (placement(w.side, w.cell), w.workers))
                .collect(),
            charger: (
                placement(l.charger.side, l.charger.cell),
                l.charger.chargers,
            ),
        };
        let layout = generate_layout(&params, &plan)?;
        let distances = shortest_distances(&layout);

        let rates = config.class_rates();
        let total: f64 = rates.iter().map(|r| r.1).sum();
        let mix: Vec<(u32, f64)> = match &config.orders.probabilities {
            Some(p) => config
                .orders
                .lines
                .iter()
                .copied()
                .zip(p.iter().copied())
                .collect(),
            None => rates.iter().map(|&(l, r)| (l, r / total)).collect(),
        };
        let classes = classes_from_probabilities(total, &mix)?;
        let plans = classes
            .iter()
            .map(|c| build_trip_plan(c.lines, config.robots.buffer_positions))
            .collect::<Result<Vec<_>, _>>()?;
        let h = config.handling;
        let handling = plans
            .iter()
            .map(|p| {
                p.totes
                    .iter()
                    .map(|&nc| workstation_service_moments(h.min_s, h.max_s, nc))
                    .collect()
            })
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        let charging = charging_service_moments(
            config.charging.min_minutes * 60.0,
            config.charging.max_minutes * 60.0,
        )?;
        let kinematics = KinematicsConfig {
            speed: config.kinematics.speed_m_per_s,
            pick_time: config.kinematics.pick_time_s,
        };
        kinematics.validate()?;
        let energy = EnergyConfig {
            threshold_pct: config.energy.threshold_pct,
            depletion_pct_per_min: config.energy.depletion_pct_per_min,
        };
        Ok(Scenario {
            config: config.clone(),
            layout,
            distances,
            classes,
            plans,
            kinematics,
            energy,
            handling,
            charging,
        })
    }

    pub fn resources(&self) -> Resources {
        Resources {
            robots: self.config.robots.count,
            workers: self
                .config
                .layout
                .workstations
                .iter()
                .map(|w| w.workers)
                .collect(),
            chargers: self.config.layout.charger.chargers,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.classes.iter().map(|c| c.rate).sum()
    }

    /// Same mix at a different total rate (orders/s).
    pub fn classes_at_rate(&self, total_rate: f64) -> Vec<OrderClass> {
        self.classes
            .iter()
            .map(|c| OrderClass {
                rate: total_rate * c.probability,
                ..*c
            })
            .collect()
    }

    /// Relative frequency of each per-trip tote count.
    pub fn trip_mix(&self) -> Vec<(u32, f64)> {
        let max = self.config.robots.buffer_positions;
        let mut w = vec![0.0; max as usize];
        for (c, p) in self.classes.iter().zip(&self.plans) {
            for &nc in &p.totes {
                w[nc as usize - 1] += c.probability;
            }
        }
        w.iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, &v)| (i as u32 + 1, v))
            .collect()
    }

    pub fn max_totes_per_trip(&self) -> u32 {
        self.plans
            .iter()
            .flat_map(|p| p.totes.iter().copied())
            .max()
            .unwrap_or(1)
    }

    pub fn travel_settings(&self) -> TravelSettings {
        let t = &self.config.travel;
        TravelSettings {
            policy: self.config.policy.retrieval,
            storage_policy: self.config.policy.storage_policy(),
            seed: self.config.seeds.travel,
            limits: McLimits {
                min_samples: t.min_samples,
                max_samples: t.max_samples,
                rel_precision: t.rel_precision,
            },
            dwell_samples: t.dwell_samples,
        }
    }

    pub fn policy(&self) -> Policy {
        self.config.policy.retrieval
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            mva: MvaOptions {
                mode: self.config.solver.mode,
                scv_correction: self.config.solver.scv_correction,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    /// Leg times for a worker allocation (workstation choice shapes the
    /// closest-retrieval dwell distribution).
    pub fn leg_times(&self, workers: &[u32]) -> Result<LegTimes, ScenarioError> {
        let total: u32 = workers.iter().sum();
        let ws_probs: Vec<f64> = workers.iter().map(|&w| w as f64 / total as f64).collect();
        Ok(compute_leg_times(
            &self.distances,
            &self.kinematics,
            self.max_totes_per_trip(),
            &self.trip_mix(),
            &ws_probs,
            &self.travel_settings(),
        )?)
    }

    pub fn travel_table(&self, legs: &LegTimes) -> TravelTimeTable {
        let totes: Vec<Vec<u32>> = self.plans.iter().map(|p| p.totes.clone()).collect();
        TravelTimeTable::from_legs(legs, &totes)
    }

    pub fn build_model(
        &self,
        legs: &LegTimes,
        classes: &[OrderClass],
        res: &Resources,
    ) -> Result<(QnModel, RoutingTable), ScenarioError> {
        let travel = self.travel_table(legs);
        let routing = build_routing(classes, &self.plans, &travel, &self.energy, &res.workers)?;
        let model = build_qn_model(&ModelInputs {
            classes,
            plans: &self.plans,
            routing: &routing,
            travel: &travel,
            handling: &self.handling,
            charging: self.charging,
            workers: &res.workers,
            chargers: res.chargers,
            robots: res.robots,
        })?;
        Ok((model, routing))
    }

    pub fn analyze_with(
        &self,
        legs: &LegTimes,
        classes: &[OrderClass],
        res: &Resources,
    ) -> Result<Analysis, ScenarioError> {
        let (model, routing) = self.build_model(legs, classes, res)?;
        let result = solve(&model, &self.solver_options())?;
        Ok(Analysis {
            legs: legs.clone(),
            routing,
            model,
            result,
        })
    }

    pub fn analyze(&self) -> Result<Analysis, ScenarioError> {
        let res = self.resources();
        let legs = self.leg_times(&res.workers)?;
        self.analyze_with(&legs, &self.classes, &res)
    }
}
