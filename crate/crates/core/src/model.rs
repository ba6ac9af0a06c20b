//! Parameters of the shared-token multi-class semi-open queueing network:
//! order classes, trip plans, service moments, routing and visit ratios.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::travel::TravelTimeTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("order mix is empty")]
    EmptyOrderMix,
    #[error("order class {class}: {reason}")]
    BadOrderClass { class: usize, reason: String },
    #[error("order class probabilities sum to {0}, expected 1")]
    ProbabilitiesDoNotSum(f64),
    #[error("robot buffer positions must be at least 1")]
    ZeroBuffer,
    #[error("invalid uniform distribution bounds [{lo}, {hi}]")]
    BadBounds { lo: f64, hi: f64 },
    #[error("energy model infeasible: charge probability per order {0:.4} exceeds 1")]
    InfeasibleEnergy(f64),
    #[error("charging threshold must lie in [0, 100), got {0}")]
    BadThreshold(f64),
    #[error("inconsistent index sets: {0}")]
    IndexMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderClass {
    /// Lines (totes) per order.
    pub lines: u32,
    /// Arrival rate, orders per second.
    pub rate: f64,
    pub probability: f64,
}

/// Classes from per-class arrival rates (orders/s).
pub fn classes_from_rates(mix: &[(u32, f64)]) -> Result<Vec<OrderClass>, ModelError> {
    if mix.is_empty() {
        return Err(ModelError::EmptyOrderMix);
    }
    for (o, &(lines, rate)) in mix.iter().enumerate() {
        if lines == 0 {
            return Err(ModelError::BadOrderClass {
                class: o,
                reason: "lines must be at least 1".into(),
            });
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(ModelError::BadOrderClass {
                class: o,
                reason: format!("rate {rate} is not a non-negative number"),
            });
        }
    }
    let total: f64 = mix.iter().map(|m| m.1).sum();
    if total <= 0.0 {
        return Err(ModelError::BadOrderClass {
            class: 0,
            reason: "total arrival rate is zero".into(),
        });
    }
    Ok(mix
        .iter()
        .map(|&(lines, rate)| OrderClass {
            lines,
            rate,
            probability: rate / total,
        })
        .collect())
}

/// Classes from a total rate (orders/s) and class probabilities that must
/// sum to one within 1e-9.
pub fn classes_from_probabilities(
    total_rate: f64,
    mix: &[(u32, f64)],
) -> Result<Vec<OrderClass>, ModelError> {
    if mix.is_empty() {
        return Err(ModelError::EmptyOrderMix);
    }
    if !(total_rate >= 0.0 && total_rate.is_finite()) {
        return Err(ModelError::BadOrderClass {
            class: 0,
            reason: format!("total rate {total_rate} is invalid"),
        });
    }
    let sum: f64 = mix.iter().map(|m| m.1).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ModelError::ProbabilitiesDoNotSum(sum));
    }
    mix.iter()
        .enumerate()
        .map(|(o, &(lines, p))| {
            if lines == 0 {
                return Err(ModelError::BadOrderClass {
                    class: o,
                    reason: "lines must be at least 1".into(),
                });
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(ModelError::BadOrderClass {
                    class: o,
                    reason: format!("probability {p} outside [0, 1]"),
                });
            }
            Ok(OrderClass {
                lines,
                rate: total_rate * p,
                probability: p,
            })
        })
        .collect()
}

pub fn total_rate(classes: &[OrderClass]) -> f64 {
    classes.iter().map(|c| c.rate).sum()
}

/// Expected lines per order.
pub fn mean_lines(classes: &[OrderClass]) -> f64 {
    classes.iter().map(|c| c.probability * c.lines as f64).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripPlan {
    pub trips: u32,
    /// Totes carried on each trip.
    pub totes: Vec<u32>,
    pub buffer_positions: u32,
}

/// Full trips of `buffer_positions` totes followed by one trip with the rest.
pub fn build_trip_plan(lines: u32, buffer_positions: u32) -> Result<TripPlan, ModelError> {
    if buffer_positions == 0 {
        return Err(ModelError::ZeroBuffer);
    }
    if lines == 0 {
        return Err(ModelError::BadOrderClass {
            class: 0,
            reason: "lines must be at least 1".into(),
        });
    }
    let trips = lines.div_ceil(buffer_positions);
    let totes = (1..=trips)
        .map(|t| {
            if t < trips {
                buffer_positions
            } else {
                lines - (t - 1) * buffer_positions
            }
        })
        .collect();
    Ok(TripPlan {
        trips,
        totes,
        buffer_positions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceMoments {
    /// Seconds.
    pub mean: f64,
    /// Squared coefficient of variation.
    pub scv: f64,
}

impl ServiceMoments {
    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean * (1.0 + self.scv)
    }
}

/// Handling `nc` totes, each i.i.d. uniform on `[a, b]` seconds.
pub fn workstation_service_moments(a: f64, b: f64, nc: u32) -> Result<ServiceMoments, ModelError> {
    if !(a >= 0.0 && a <= b && b.is_finite()) || b <= 0.0 {
        return Err(ModelError::BadBounds { lo: a, hi: b });
    }
    if nc == 0 {
        return Err(ModelError::BadOrderClass {
            class: 0,
            reason: "tote count must be at least 1".into(),
        });
    }
    let n = nc as f64;
    Ok(ServiceMoments {
        mean: n * (a + b) / 2.0,
        scv: (b - a).powi(2) / (3.0 * (a + b).powi(2)) / n,
    })
}

/// Charging time uniform on `[c, d]` seconds.
pub fn charging_service_moments(c: f64, d: f64) -> Result<ServiceMoments, ModelError> {
    if !(c > 0.0 && c <= d && d.is_finite()) {
        return Err(ModelError::BadBounds { lo: c, hi: d });
    }
    Ok(ServiceMoments {
        mean: (c + d) / 2.0,
        scv: (d - c).powi(2) / (3.0 * (c + d).powi(2)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    /// Charge when battery falls below this percentage at order completion.
    pub threshold_pct: f64,
    /// Battery percentage consumed per minute of travel.
    pub depletion_pct_per_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub ws_probs: Vec<f64>,
    /// `[o][t]`
    pub next_trip: Vec<Vec<f64>>,
    pub charge: Vec<Vec<f64>>,
    pub idle: Vec<Vec<f64>>,
    /// Mean battery percentage consumed per order.
    pub battery_per_order: f64,
    /// Mean travel seconds per (class, trip).
    pub avg_travel: Vec<Vec<f64>>,
    pub threshold_pct: f64,
    pub depletion_pct_per_min: f64,
}

fn check_shape(
    plans: &[TripPlan],
    table: &[Vec<Vec<f64>>],
    nw: usize,
    what: &str,
) -> Result<(), ModelError> {
    if table.len() != plans.len() {
        return Err(ModelError::IndexMismatch(format!(
            "{what}: {} classes vs {} plans",
            table.len(),
            plans.len()
        )));
    }
    for (o, (p, rows)) in plans.iter().zip(table).enumerate() {
        if rows.len() != p.trips as usize || rows.iter().any(|r| r.len() != nw) {
            return Err(ModelError::IndexMismatch(format!(
                "{what}: class {o} shape does not match its trip plan"
            )));
        }
    }
    Ok(())
}

pub fn build_routing(
    classes: &[OrderClass],
    plans: &[TripPlan],
    travel: &TravelTimeTable,
    energy: &EnergyConfig,
    workers: &[u32],
) -> Result<RoutingTable, ModelError> {
    if classes.len() != plans.len() {
        return Err(ModelError::IndexMismatch(format!(
            "{} classes vs {} plans",
            classes.len(),
            plans.len()
        )));
    }
    let nw = workers.len();
    check_shape(plans, &travel.retrieve, nw, "retrieval times")?;
    check_shape(plans, &travel.store, nw, "storage times")?;
    if !(0.0..100.0).contains(&energy.threshold_pct) {
        return Err(ModelError::BadThreshold(energy.threshold_pct));
    }
    let total_workers: u32 = workers.iter().sum();
    if total_workers == 0 {
        return Err(ModelError::IndexMismatch("no workers".into()));
    }
    let ws_probs: Vec<f64> = workers
        .iter()
        .map(|&w| w as f64 / total_workers as f64)
        .collect();

    let avg_travel: Vec<Vec<f64>> = plans
        .iter()
        .enumerate()
        .map(|(o, p)| {
            (0..p.trips as usize)
                .map(|t| {
                    ws_probs
                        .iter()
                        .enumerate()
                        .map(|(i, pw)| pw * (travel.retrieve[o][t][i] + travel.store[o][t][i]))
                        .sum()
                })
                .collect()
        })
        .collect();
    // Depletion is per minute; travel is in seconds.
    let battery_per_order: f64 = classes
        .iter()
        .zip(&avg_travel)
        .map(|(c, att)| {
            c.probability
                * att
                    .iter()
                    .map(|a| energy.depletion_pct_per_min * a / 60.0)
                    .sum::<f64>()
        })
        .sum();
    let p_charge = battery_per_order / (100.0 - energy.threshold_pct);
    if p_charge > 1.0 {
        return Err(ModelError::InfeasibleEnergy(p_charge));
    }

    let mut next_trip = Vec::with_capacity(plans.len());
    let mut charge = Vec::with_capacity(plans.len());
    let mut idle = Vec::with_capacity(plans.len());
    for p in plans {
        let last = p.trips as usize - 1;
        let nt: Vec<f64> = (0..=last)
            .map(|t| if t < last { 1.0 } else { 0.0 })
            .collect();
        let c: Vec<f64> = (0..=last)
            .map(|t| if t == last { p_charge } else { 0.0 })
            .collect();
        idle.push(nt.iter().zip(&c).map(|(a, b)| 1.0 - a - b).collect());
        next_trip.push(nt);
        charge.push(c);
    }
    Ok(RoutingTable {
        ws_probs,
        next_trip,
        charge,
        idle,
        battery_per_order,
        avg_travel,
        threshold_pct: energy.threshold_pct,
        depletion_pct_per_min: energy.depletion_pct_per_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationKind {
    /// Infinite-server pure delay.
    Delay,
    /// First-come first-served with a fixed number of identical servers.
    MultiServer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "role", content = "workstation")]
pub enum StationRole {
    Retrieval(usize),
    Workstation(usize),
    Storage(usize),
    ToCharger,
    Charger,
    FromCharger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnStation {
    pub role: StationRole,
    pub kind: StationKind,
    pub servers: u32,
    /// `[o][t]`
    pub service: Vec<Vec<ServiceMoments>>,
    /// Normalized visit ratios `[o][t]`; the synchronization node has ratio 1.
    pub visits: Vec<Vec<f64>>,
}

impl QnStation {
    pub fn total_visits(&self) -> f64 {
        self.visits.iter().flatten().sum()
    }

    /// Service demand per order cycle, seconds.
    pub fn demand(&self) -> f64 {
        self.visits
            .iter()
            .flatten()
            .zip(self.service.iter().flatten())
            .map(|(v, s)| v * s.mean)
            .sum()
    }

    /// Visit-weighted mixture of the per-(class, trip) service moments.
    pub fn aggregate_service(&self) -> ServiceMoments {
        let v = self.total_visits();
        if v <= 0.0 {
            let first = self.service.iter().flatten().next().copied();
            return first.unwrap_or(ServiceMoments {
                mean: 0.0,
                scv: 0.0,
            });
        }
        let mean = self.demand() / v;
        let second: f64 = self
            .visits
            .iter()
            .flatten()
            .zip(self.service.iter().flatten())
            .map(|(w, s)| w / v * s.second_moment())
            .sum();
        let scv = if mean > 0.0 {
            (second / (mean * mean) - 1.0).max(0.0)
        } else {
            0.0
        };
        ServiceMoments { mean, scv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnModel {
    pub stations: Vec<QnStation>,
    pub class_probs: Vec<f64>,
    pub trips: Vec<u32>,
    pub robots: u32,
    /// Total order arrival rate, orders/s.
    pub lambda: f64,
}

impl QnModel {
    pub fn station(&self, role: StationRole) -> Option<&QnStation> {
        self.stations.iter().find(|s| s.role == role)
    }

    /// Sum of all synchronization visit ratios (one per order).
    pub fn sync_visits(&self) -> f64 {
        self.class_probs.iter().sum()
    }
}

pub struct ModelInputs<'a> {
    pub classes: &'a [OrderClass],
    pub plans: &'a [TripPlan],
    pub routing: &'a RoutingTable,
    pub travel: &'a TravelTimeTable,
    /// Workstation handling moments `[o][t]` (identical across workstations).
    pub handling: &'a [Vec<ServiceMoments>],
    pub charging: ServiceMoments,
    pub workers: &'a [u32],
    pub chargers: u32,
    pub robots: u32,
}

pub fn build_qn_model(inputs: &ModelInputs<'_>) -> Result<QnModel, ModelError> {
    let ModelInputs {
        classes,
        plans,
        routing,
        travel,
        handling,
        charging,
        workers,
        chargers,
        robots,
    } = *inputs;
    let nw = workers.len();
    if routing.ws_probs.len() != nw {
        return Err(ModelError::IndexMismatch(
            "routing and worker lists differ in length".into(),
        ));
    }
    if classes.len() != plans.len() || handling.len() != plans.len() {
        return Err(ModelError::IndexMismatch(
            "classes, plans and handling moments differ in length".into(),
        ));
    }
    for (o, (p, h)) in plans.iter().zip(handling).enumerate() {
        if h.len() != p.trips as usize {
            return Err(ModelError::IndexMismatch(format!(
                "handling moments for class {o} do not match its trips"
            )));
        }
    }
    check_shape(plans, &travel.retrieve, nw, "retrieval times")?;
    check_shape(plans, &travel.store, nw, "storage times")?;

    let per_trip = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        plans
            .iter()
            .enumerate()
            .map(|(o, p)| (0..p.trips as usize).map(|t| f(o, t)).collect())
            .collect()
    };
    let delay = |m: f64| ServiceMoments { mean: m, scv: 0.0 };

    let mut stations = Vec::with_capacity(3 * nw + 3);
    for i in 0..nw {
        let visits = per_trip(&|o, _| routing.ws_probs[i] * classes[o].probability);
        let moments = |table: &Vec<Vec<Vec<f64>>>| -> Vec<Vec<ServiceMoments>> {
            plans
                .iter()
                .enumerate()
                .map(|(o, p)| {
                    (0..p.trips as usize)
                        .map(|t| delay(table[o][t][i]))
                        .collect()
                })
                .collect()
        };
        stations.push(QnStation {
            role: StationRole::Retrieval(i),
            kind: StationKind::Delay,
            servers: 0,
            service: moments(&travel.retrieve),
            visits: visits.clone(),
        });
        stations.push(QnStation {
            role: StationRole::Workstation(i),
            kind: StationKind::MultiServer,
            servers: workers[i],
            service: handling.to_vec(),
            visits: visits.clone(),
        });
        stations.push(QnStation {
            role: StationRole::Storage(i),
            kind: StationKind::Delay,
            servers: 0,
            service: moments(&travel.store),
            visits,
        });
    }
    let charge_visits = per_trip(&|o, t| classes[o].probability * routing.charge[o][t]);
    let constant = |m: ServiceMoments| -> Vec<Vec<ServiceMoments>> {
        plans.iter().map(|p| vec![m; p.trips as usize]).collect()
    };
    stations.push(QnStation {
        role: StationRole::ToCharger,
        kind: StationKind::Delay,
        servers: 0,
        service: constant(delay(travel.dwell_to_charge)),
        visits: charge_visits.clone(),
    });
    stations.push(QnStation {
        role: StationRole::Charger,
        kind: StationKind::MultiServer,
        servers: chargers,
        service: constant(charging),
        visits: charge_visits.clone(),
    });
    stations.push(QnStation {
        role: StationRole::FromCharger,
        kind: StationKind::Delay,
        servers: 0,
        service: constant(delay(travel.charge_to_dwell)),
        visits: charge_visits,
    });

    Ok(QnModel {
        stations,
        class_probs: classes.iter().map(|c| c.probability).collect(),
        trips: plans.iter().map(|p| p.trips).collect(),
        robots,
        lambda: total_rate(classes),
    })
}
