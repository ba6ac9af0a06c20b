//! Discrete-event simulation of the robot operating cycle: order arrivals,
//! FCFS order-robot matching, retrieval tours, workstation handling, put-back
//! tours, battery depletion and charging. Replications run in parallel with
//! derived seeds and are summarized with Student-t intervals.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{DistanceMatrix, Poi};
use crate::model::{OrderClass, TripPlan};
use crate::scenario::{Resources, Scenario};
use crate::solver::SteadyState;
use crate::stats::{mix_seed, t_quantile_975};
use crate::travel::{nearest_neighbor_tour, ordered_tour, shuffled, KinematicsConfig, Policy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation settings: {0}")]
    InvalidSettings(String),
    #[error("comparison refused: the analytical solution is unstable")]
    UnstableAnalytical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: u32,
    /// Seconds.
    pub horizon: f64,
    pub warmup: f64,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.replications == 0 {
            return Err(SimError::InvalidSettings(
                "at least one replication is required".into(),
            ));
        }
        if !(self.warmup >= 0.0 && self.horizon > self.warmup && self.horizon.is_finite()) {
            return Err(SimError::InvalidSettings(
                "need 0 <= warmup < horizon".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a replication needs, independent of the config format.
#[derive(Debug, Clone)]
pub struct SimInputs<'a> {
    pub distances: &'a DistanceMatrix,
    pub kinematics: KinematicsConfig,
    pub classes: &'a [OrderClass],
    pub plans: &'a [TripPlan],
    pub resources: &'a Resources,
    pub policy: Policy,
    pub storage_policy: Policy,
    /// Per-tote handling bounds, seconds.
    pub handling: (f64, f64),
    /// Charging duration bounds, seconds.
    pub charging: (f64, f64),
    pub threshold_pct: f64,
    pub depletion_pct_per_min: f64,
}

impl<'a> SimInputs<'a> {
    pub fn from_scenario(
        s: &'a Scenario,
        classes: &'a [OrderClass],
        resources: &'a Resources,
    ) -> Self {
        let c = &s.config;
        SimInputs {
            distances: &s.distances,
            kinematics: s.kinematics,
            classes,
            plans: &s.plans,
            resources,
            policy: c.policy.retrieval,
            storage_policy: c.policy.storage_policy(),
            handling: (c.handling.min_s, c.handling.max_s),
            charging: (c.charging.min_minutes * 60.0, c.charging.max_minutes * 60.0),
            threshold_pct: c.energy.threshold_pct,
            depletion_pct_per_min: c.energy.depletion_pct_per_min,
        }
    }
}

/// Raw per-replication output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub seed: u64,
    pub tht: f64,
    /// `NaN`-free: classes without completed orders report 0.
    pub tht_o: Vec<f64>,
    pub rho_r: f64,
    pub rho_w: f64,
    pub rho_c: f64,
    pub order_queue_len: f64,
    pub orders_completed: u64,
    pub charges_per_order: f64,
    pub counters: SimCounters,
}

/// End-of-run bookkeeping, used by the invariant tests.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimCounters {
    pub arrived: u64,
    pub completed: u64,
    pub in_flight: u64,
    pub queued: u64,
    pub totes_retrieved: u64,
    pub totes_returned: u64,
    /// Totes carried on each trip differed from the trip plan.
    pub plan_mismatches: u64,
    pub max_totes_carried: u32,
    pub conservation_violations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiEstimate {
    pub mean: f64,
    /// `None` with a single replication.
    pub half_width_95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub tht: CiEstimate,
    pub tht_o: Vec<CiEstimate>,
    pub rho_r: CiEstimate,
    pub rho_w: CiEstimate,
    pub rho_c: CiEstimate,
    pub order_queue_len: CiEstimate,
    pub charges_per_order: CiEstimate,
    pub replications: Vec<ReplicationMetrics>,
    pub warnings: Vec<String>,
}

/// Student-t 95% interval over replication values.
pub fn replication_ci(values: &[f64]) -> CiEstimate {
    let n = values.len();
    let mean = if n == 0 {
        0.0
    } else {
        values.iter().sum::<f64>() / n as f64
    };
    if n < 2 {
        return CiEstimate {
            mean,
            half_width_95: None,
        };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    CiEstimate {
        mean,
        half_width_95: Some(t_quantile_975(n as u64 - 1) * (var / n as f64).sqrt()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrival,
    RetrievalDone(usize),
    ServiceDone(usize),
    StorageDone(usize),
    ReachCharger(usize),
    ChargeDone(usize),
    BackFromCharger(usize),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event, FIFO on ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Time integral of a piecewise-constant level over the observation window.
#[derive(Debug, Clone, Copy)]
struct Level {
    value: f64,
    last: f64,
    area: f64,
}

impl Level {
    fn new(value: f64) -> Self {
        Level {
            value,
            last: 0.0,
            area: 0.0,
        }
    }

    fn set(&mut self, t: f64, warmup: f64, value: f64) {
        self.advance(t, warmup);
        self.value = value;
    }

    fn add(&mut self, t: f64, warmup: f64, delta: f64) {
        let v = self.value + delta;
        self.set(t, warmup, v);
    }

    fn advance(&mut self, t: f64, warmup: f64) {
        let from = self.last.max(warmup);
        if t > from {
            self.area += self.value * (t - from);
        }
        self.last = t;
    }
}

#[derive(Debug, Clone)]
struct Robot {
    pos: Poi,
    battery: f64,
    order: Option<usize>,
    trip: usize,
    totes: Vec<usize>,
    workstation: usize,
    /// Where the robot returns after charging.
    dwell: Poi,
}

#[derive(Debug, Clone, Copy)]
struct Order {
    class: usize,
    arrival: f64,
}

struct Sim<'a> {
    inp: &'a SimInputs<'a>,
    cfg: SimConfig,
    rng: ChaCha8Rng,
    now: f64,
    seq: u64,
    events: BinaryHeap<Event>,
    robots: Vec<Robot>,
    orders: Vec<Order>,
    order_queue: VecDeque<usize>,
    idle_robots: VecDeque<usize>,
    ws_free: Vec<u32>,
    ws_queue: Vec<VecDeque<usize>>,
    chargers_free: u32,
    charger_queue: VecDeque<usize>,
    class_pick: WeightedIndex<f64>,
    ws_pick: WeightedIndex<f64>,
    interarrival: Option<Exp<f64>>,
    idle_level: Level,
    busy_workers: Level,
    busy_chargers: Level,
    queue_level: Level,
    tht_sum: Vec<f64>,
    tht_count: Vec<u64>,
    charges: u64,
    completed_after_warmup: u64,
    counters: SimCounters,
}

impl<'a> Sim<'a> {
    fn new(inp: &'a SimInputs<'a>, cfg: SimConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = inp.resources;
        let n = inp.distances.num_shelves();
        let lo = inp.threshold_pct;
        let robots: Vec<Robot> = (0..res.robots)
            .map(|_| {
                let shelf = rng.random_range(0..n);
                Robot {
                    pos: Poi::Shelf(shelf),
                    battery: rng.random_range(lo..=100.0),
                    order: None,
                    trip: 0,
                    totes: Vec::new(),
                    workstation: 0,
                    dwell: Poi::Shelf(shelf),
                }
            })
            .collect();
        let lambda: f64 = inp.classes.iter().map(|c| c.rate).sum();
        let class_weights: Vec<f64> = if lambda > 0.0 {
            inp.classes.iter().map(|c| c.rate).collect()
        } else {
            vec![1.0; inp.classes.len()]
        };
        let nw = res.workers.len();
        Sim {
            inp,
            cfg,
            now: 0.0,
            seq: 0,
            events: BinaryHeap::new(),
            idle_robots: (0..robots.len()).collect(),
            idle_level: Level::new(robots.len() as f64),
            robots,
            orders: Vec::new(),
            order_queue: VecDeque::new(),
            ws_free: res.workers.clone(),
            ws_queue: vec![VecDeque::new(); nw],
            chargers_free: res.chargers,
            charger_queue: VecDeque::new(),
            class_pick: WeightedIndex::new(class_weights).expect("positive class weights"),
            ws_pick: WeightedIndex::new(res.workers.iter().map(|&w| w as f64))
                .expect("positive worker counts"),
            interarrival: (lambda > 0.0).then(|| Exp::new(lambda).expect("positive rate")),
            busy_workers: Level::new(0.0),
            busy_chargers: Level::new(0.0),
            queue_level: Level::new(0.0),
            tht_sum: vec![0.0; inp.classes.len()],
            tht_count: vec![0; inp.classes.len()],
            charges: 0,
            completed_after_warmup: 0,
            counters: SimCounters::default(),
            rng,
        }
    }

    fn schedule(&mut self, delay: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Event {
            time: self.now + delay,
            seq: self.seq,
            kind,
        });
    }

    fn drain(&mut self, robot: usize, seconds: f64) {
        let r = &mut self.robots[robot];
        r.battery -= self.inp.depletion_pct_per_min * seconds / 60.0;
    }

    fn run(mut self) -> ReplicationMetrics {
        if let Some(exp) = self.interarrival {
            let dt = exp.sample(&mut self.rng);
            self.schedule(dt, EventKind::Arrival);
        }
        while let Some(ev) = self.events.pop() {
            if ev.time > self.cfg.horizon {
                break;
            }
            self.now = ev.time;
            match ev.kind {
                EventKind::Arrival => self.on_arrival(),
                EventKind::RetrievalDone(r) => self.on_retrieval_done(r),
                EventKind::ServiceDone(r) => self.on_service_done(r),
                EventKind::StorageDone(r) => self.on_storage_done(r),
                EventKind::ReachCharger(r) => self.on_reach_charger(r),
                EventKind::ChargeDone(r) => self.on_charge_done(r),
                EventKind::BackFromCharger(r) => self.on_back_from_charger(r),
            }
            self.check_conservation();
        }
        self.finish()
    }

    fn check_conservation(&mut self) {
        let c = &self.counters;
        if c.arrived != c.completed + c.in_flight + c.queued
            || c.queued != self.order_queue.len() as u64
        {
            self.counters.conservation_violations += 1;
        }
    }

    fn on_arrival(&mut self) {
        let exp = self
            .interarrival
            .expect("arrivals only with a positive rate");
        let dt = exp.sample(&mut self.rng);
        self.schedule(dt, EventKind::Arrival);
        let class = self.class_pick.sample(&mut self.rng);
        self.orders.push(Order {
            class,
            arrival: self.now,
        });
        self.counters.arrived += 1;
        let id = self.orders.len() - 1;
        match self.idle_robots.pop_front() {
            Some(r) => {
                self.idle_level.add(self.now, self.cfg.warmup, -1.0);
                self.counters.in_flight += 1;
                self.start_order(r, id);
            }
            None => {
                self.order_queue.push_back(id);
                self.counters.queued += 1;
                self.queue_level.add(self.now, self.cfg.warmup, 1.0);
            }
        }
    }

    fn start_order(&mut self, robot: usize, order: usize) {
        self.robots[robot].order = Some(order);
        self.robots[robot].trip = 0;
        self.start_trip(robot);
    }

    fn start_trip(&mut self, robot: usize) {
        let order = self.robots[robot].order.expect("robot has an order");
        let class = self.orders[order].class;
        let trip = self.robots[robot].trip;
        let nc = self.inp.plans[class].totes[trip];
        let n = self.inp.distances.num_shelves();
        let totes: Vec<usize> = (0..nc).map(|_| self.rng.random_range(0..n)).collect();
        let ws = self.ws_pick.sample(&mut self.rng);
        let dist = self.inp.distances;
        let start = self.robots[robot].pos;
        let (walked, last) = match self.inp.policy {
            Policy::Random => ordered_tour(dist, start, &totes),
            Policy::ClosestRetrieval => nearest_neighbor_tour(dist, start, &totes),
        };
        let walked = walked + dist.shelf_to_workstation(last, ws);
        let seconds =
            walked / self.inp.kinematics.speed + nc as f64 * self.inp.kinematics.pick_time;
        self.counters.totes_retrieved += nc as u64;
        self.counters.max_totes_carried = self.counters.max_totes_carried.max(nc);
        let r = &mut self.robots[robot];
        r.totes = totes;
        r.workstation = ws;
        self.drain(robot, seconds);
        self.schedule(seconds, EventKind::RetrievalDone(robot));
    }

    fn handling_time(&mut self, totes: usize) -> f64 {
        let (a, b) = self.inp.handling;
        (0..totes)
            .map(|_| {
                if b > a {
                    self.rng.random_range(a..b)
                } else {
                    a
                }
            })
            .sum()
    }

    fn on_retrieval_done(&mut self, robot: usize) {
        let ws = self.robots[robot].workstation;
        self.robots[robot].pos = Poi::Workstation(ws);
        if self.ws_free[ws] > 0 {
            self.ws_free[ws] -= 1;
            self.busy_workers.add(self.now, self.cfg.warmup, 1.0);
            self.begin_service(robot);
        } else {
            self.ws_queue[ws].push_back(robot);
        }
    }

    fn begin_service(&mut self, robot: usize) {
        let t = self.handling_time(self.robots[robot].totes.len());
        self.schedule(t, EventKind::ServiceDone(robot));
    }

    fn on_service_done(&mut self, robot: usize) {
        let ws = self.robots[robot].workstation;
        match self.ws_queue[ws].pop_front() {
            Some(next) => self.begin_service(next),
            None => {
                self.ws_free[ws] += 1;
                self.busy_workers.add(self.now, self.cfg.warmup, -1.0);
            }
        }
        // Put the totes back where they came from.
        let dist = self.inp.distances;
        let totes = std::mem::take(&mut self.robots[robot].totes);
        let (walked, last) = match self.inp.storage_policy {
            Policy::Random => {
                let order = shuffled(&mut self.rng, &totes);
                ordered_tour(dist, Poi::Workstation(ws), &order)
            }
            Policy::ClosestRetrieval => nearest_neighbor_tour(dist, Poi::Workstation(ws), &totes),
        };
        let nc = totes.len();
        let seconds =
            walked / self.inp.kinematics.speed + nc as f64 * self.inp.kinematics.pick_time;
        self.counters.totes_returned += nc as u64;
        let order = self.robots[robot].order.expect("robot has an order");
        let plan = &self.inp.plans[self.orders[order].class];
        if plan.totes[self.robots[robot].trip] as usize != nc {
            self.counters.plan_mismatches += 1;
        }
        self.robots[robot].pos = Poi::Shelf(last);
        self.drain(robot, seconds);
        self.schedule(seconds, EventKind::StorageDone(robot));
    }

    fn on_storage_done(&mut self, robot: usize) {
        let order = self.robots[robot].order.expect("robot has an order");
        let class = self.orders[order].class;
        self.robots[robot].trip += 1;
        if self.robots[robot].trip < self.inp.plans[class].trips as usize {
            self.start_trip(robot);
            return;
        }
        // Order complete.
        self.counters.completed += 1;
        self.counters.in_flight -= 1;
        self.robots[robot].order = None;
        let arrival = self.orders[order].arrival;
        if arrival >= self.cfg.warmup {
            self.tht_sum[class] += self.now - arrival;
            self.tht_count[class] += 1;
        }
        if self.now >= self.cfg.warmup {
            self.completed_after_warmup += 1;
        }
        if self.robots[robot].battery < self.inp.threshold_pct {
            if self.now >= self.cfg.warmup {
                self.charges += 1;
            }
            let pos = self.robots[robot].pos;
            self.robots[robot].dwell = pos;
            let seconds = self.inp.distances.get(pos, Poi::Charger) / self.inp.kinematics.speed;
            self.drain(robot, seconds);
            self.schedule(seconds, EventKind::ReachCharger(robot));
        } else {
            self.become_idle(robot);
        }
    }

    fn become_idle(&mut self, robot: usize) {
        match self.order_queue.pop_front() {
            Some(order) => {
                self.counters.queued -= 1;
                self.counters.in_flight += 1;
                self.queue_level.add(self.now, self.cfg.warmup, -1.0);
                self.start_order(robot, order);
            }
            None => {
                self.idle_robots.push_back(robot);
                self.idle_level.add(self.now, self.cfg.warmup, 1.0);
            }
        }
    }

    fn charge_time(&mut self) -> f64 {
        let (c, d) = self.inp.charging;
        if d > c {
            self.rng.random_range(c..d)
        } else {
            c
        }
    }

    fn on_reach_charger(&mut self, robot: usize) {
        self.robots[robot].pos = Poi::Charger;
        if self.chargers_free > 0 {
            self.chargers_free -= 1;
            self.busy_chargers.add(self.now, self.cfg.warmup, 1.0);
            let t = self.charge_time();
            self.schedule(t, EventKind::ChargeDone(robot));
        } else {
            self.charger_queue.push_back(robot);
        }
    }

    fn on_charge_done(&mut self, robot: usize) {
        match self.charger_queue.pop_front() {
            Some(next) => {
                let t = self.charge_time();
                self.schedule(t, EventKind::ChargeDone(next));
            }
            None => {
                self.chargers_free += 1;
                self.busy_chargers.add(self.now, self.cfg.warmup, -1.0);
            }
        }
        self.robots[robot].battery = 100.0;
        let back = self.robots[robot].dwell;
        let seconds = self.inp.distances.get(Poi::Charger, back) / self.inp.kinematics.speed;
        self.drain(robot, seconds);
        self.schedule(seconds, EventKind::BackFromCharger(robot));
    }

    fn on_back_from_charger(&mut self, robot: usize) {
        self.robots[robot].pos = self.robots[robot].dwell;
        self.become_idle(robot);
    }

    fn finish(mut self) -> ReplicationMetrics {
        let end = self.cfg.horizon;
        let warm = self.cfg.warmup;
        for level in [
            &mut self.idle_level,
            &mut self.busy_workers,
            &mut self.busy_chargers,
            &mut self.queue_level,
        ] {
            level.advance(end, warm);
        }
        let span = end - warm;
        let res = self.inp.resources;
        let total_tht: f64 = self.tht_sum.iter().sum();
        let total_count: u64 = self.tht_count.iter().sum();
        ReplicationMetrics {
            seed: 0,
            tht: if total_count > 0 {
                total_tht / total_count as f64
            } else {
                0.0
            },
            tht_o: self
                .tht_sum
                .iter()
                .zip(&self.tht_count)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect(),
            rho_r: (1.0 - self.idle_level.area / span / res.robots as f64) * 100.0,
            rho_w: self.busy_workers.area / span / res.total_workers() as f64 * 100.0,
            rho_c: self.busy_chargers.area / span / res.chargers.max(1) as f64 * 100.0,
            order_queue_len: self.queue_level.area / span,
            orders_completed: total_count,
            charges_per_order: if self.completed_after_warmup > 0 {
                self.charges as f64 / self.completed_after_warmup as f64
            } else {
                0.0
            },
            counters: self.counters,
        }
    }
}

/// One replication with an explicit seed.
pub fn simulate_replication(
    inputs: &SimInputs<'_>,
    cfg: &SimConfig,
    seed: u64,
) -> Result<ReplicationMetrics, SimError> {
    cfg.validate()?;
    check_inputs(inputs)?;
    let mut m = Sim::new(inputs, *cfg, seed).run();
    m.seed = seed;
    Ok(m)
}

fn check_inputs(inp: &SimInputs<'_>) -> Result<(), SimError> {
    let res = inp.resources;
    if res.robots == 0 || res.chargers == 0 || res.workers.is_empty() || res.workers.contains(&0) {
        return Err(SimError::InvalidSettings(
            "robots, chargers and every workstation need at least one unit".into(),
        ));
    }
    if res.workers.len() != inp.distances.num_workstations() {
        return Err(SimError::InvalidSettings(
            "worker list does not match the layout's workstations".into(),
        ));
    }
    if inp.classes.len() != inp.plans.len() || inp.classes.is_empty() {
        return Err(SimError::InvalidSettings(
            "order classes and trip plans differ".into(),
        ));
    }
    Ok(())
}

pub fn simulate(inputs: &SimInputs<'_>, cfg: &SimConfig) -> Result<SimMetrics, SimError> {
    cfg.validate()?;
    check_inputs(inputs)?;
    let reps: Vec<ReplicationMetrics> = (0..cfg.replications)
        .into_par_iter()
        .map(|k| {
            let seed = mix_seed(cfg.master_seed, k as u64);
            let mut m = Sim::new(inputs, *cfg, seed).run();
            m.seed = seed;
            m
        })
        .collect();
    Ok(summarize(reps))
}

fn summarize(reps: Vec<ReplicationMetrics>) -> SimMetrics {
    let col = |f: &dyn Fn(&ReplicationMetrics) -> f64| {
        replication_ci(&reps.iter().map(f).collect::<Vec<_>>())
    };
    let classes = reps.first().map_or(0, |r| r.tht_o.len());
    let mut warnings = Vec::new();
    let tht = col(&|r| r.tht);
    match tht.half_width_95 {
        None => warnings.push("single replication: confidence half-widths are undefined".to_string()),
        Some(hw) if hw > 0.01 * tht.mean => warnings.push(format!(
            "THT half-width {:.2} s exceeds 1% of the mean {:.2} s; lengthen the horizon or add replications",
            hw, tht.mean
        )),
        _ => {}
    }
    SimMetrics {
        tht,
        tht_o: (0..classes).map(|o| col(&|r| r.tht_o[o])).collect(),
        rho_r: col(&|r| r.rho_r),
        rho_w: col(&|r| r.rho_w),
        rho_c: col(&|r| r.rho_c),
        order_queue_len: col(&|r| r.order_queue_len),
        charges_per_order: col(&|r| r.charges_per_order),
        replications: reps,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub analytical: f64,
    pub simulated: f64,
    /// `|A - S| / A * 100`; `None` when `A` is zero.
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<MetricComparison>,
}

pub fn relative_error_pct(a: f64, s: f64) -> Option<f64> {
    if a == 0.0 {
        (s == 0.0).then_some(0.0)
    } else {
        Some((a - s).abs() / a.abs() * 100.0)
    }
}

pub fn compare(
    analytical: Option<&SteadyState>,
    simulated: &SimMetrics,
) -> Result<ComparisonReport, SimError> {
    let a = analytical.ok_or(SimError::UnstableAnalytical)?;
    let row = |metric: &str, a: f64, s: f64| MetricComparison {
        metric: metric.to_string(),
        analytical: a,
        simulated: s,
        delta_pct: relative_error_pct(a, s),
    };
    Ok(ComparisonReport {
        rows: vec![
            row("rho_r", a.rho_r, simulated.rho_r.mean),
            row("rho_w", a.rho_w, simulated.rho_w.mean),
            row("rho_c", a.rho_c, simulated.rho_c.mean),
            row("tht", a.tht, simulated.tht.mean),
        ],
    })
}

impl ComparisonReport {
    pub fn delta(&self, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.metric == metric)
            .and_then(|r| r.delta_pct)
    }
}

/// Mean delta per metric across several reports (rows without a delta skipped).
pub fn average_deltas(reports: &[ComparisonReport]) -> Vec<(String, f64)> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    first
        .rows
        .iter()
        .map(|r| {
            let vals: Vec<f64> = reports
                .iter()
                .filter_map(|rep| rep.delta(&r.metric))
                .collect();
            let avg = if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            (r.metric.clone(), avg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_of_constant_values_is_zero() {
        let c = replication_ci(&[4.0, 4.0, 4.0]);
        assert_eq!(c.mean, 4.0);
        assert_eq!(c.half_width_95, Some(0.0));
    }

    #[test]
    fn ci_three_values() {
        let c = replication_ci(&[9.0, 10.0, 11.0]);
        assert!((c.mean - 10.0).abs() < 1e-12);
        let expected = 4.302_652_729_911_275 / 3f64.sqrt();
        assert!((c.half_width_95.unwrap() - expected).abs() < 1e-9);
        assert!((c.half_width_95.unwrap() - 2.484).abs() < 1e-3);
    }

    #[test]
    fn single_replication_has_no_half_width() {
        assert_eq!(replication_ci(&[3.0]).half_width_95, None);
    }

    #[test]
    fn relative_error_examples() {
        assert!((relative_error_pct(70.9, 71.6).unwrap() - 0.987_306).abs() < 1e-5);
        assert_eq!(relative_error_pct(5.0, 5.0), Some(0.0));
        assert!((relative_error_pct(326.3, 325.4).unwrap() - 0.2758).abs() < 1e-3);
        assert_eq!(relative_error_pct(0.0, 1.0), None);
    }

    #[test]
    fn level_integrates_after_warmup_only() {
        let mut l = Level::new(2.0);
        l.set(5.0, 10.0, 3.0);
        l.set(12.0, 10.0, 1.0);
        l.advance(20.0, 10.0);
        assert!((l.area - (3.0 * 2.0 + 8.0)).abs() < 1e-12);
    }
}
