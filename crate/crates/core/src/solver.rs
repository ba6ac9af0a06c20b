//! Three-step analysis of the semi-open network.
//!
//! Step 1 removes the synchronization station and computes the closed
//! network's throughput for every robot population. Step 2 puts it back as a
//! load-dependent station (rate `λ` while two or more robots idle there,
//! `λ·TH/(TH−λ)` with exactly one) and re-solves at `N_r`. Step 3 treats the
//! order queue as a birth-death chain whose service rate in state `j` is the
//! Step 1 throughput at population `min(j, N_r)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{QnModel, QnStation, StationKind, StationRole};
use crate::mva::{self, MvaError, MvaKind, MvaOptions, MvaStation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Mva(#[from] MvaError),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("order queue chain not truncated after {states} states")]
    Truncation { states: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub mva: MvaOptions,
    /// Report unstable once `λ ≥ stability_margin · TH`.
    pub stability_margin: f64,
    pub tail_tolerance: f64,
    pub max_states: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mva: MvaOptions::default(),
            stability_margin: 0.999,
            tail_tolerance: 1e-10,
            max_states: 10_000_000,
        }
    }
}

/// Inner closed-network throughput (orders/s), `th_at[n - 1]` at population `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputCurve {
    pub th_at: Vec<f64>,
}

impl ThroughputCurve {
    pub fn max_throughput(&self) -> f64 {
        self.th_at.last().copied().unwrap_or(0.0)
    }

    /// Throughput with `n ≥ 1` robots, saturating at the curve's end.
    pub fn at(&self, n: usize) -> f64 {
        self.th_at[n.min(self.th_at.len()) - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step2 {
    pub nr_sync: f64,
    /// Mean wait before service per visit, seconds.
    pub wt_w: Vec<f64>,
    pub wt_c: f64,
    pub pn_w: Vec<Vec<f64>>,
    pub pn_c: Vec<f64>,
    /// Order completion rate of the re-solved network; close to `λ`.
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub nr_sync: f64,
    pub no_sync: f64,
    pub wt_w: Vec<f64>,
    pub wt_c: f64,
    pub pn_w: Vec<Vec<f64>>,
    pub pn_c: Vec<f64>,
    pub rho_r: f64,
    pub rho_w: f64,
    pub rho_c: f64,
    pub tht_o: Vec<f64>,
    pub tht: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Orders/s.
    pub lambda: f64,
    pub throughput_curve: Vec<f64>,
    pub max_throughput: f64,
    pub stable: bool,
    pub metrics: Option<SteadyState>,
}

fn to_mva(st: &QnStation) -> Result<MvaStation, SolverError> {
    let agg = st.aggregate_service();
    let kind = match st.kind {
        StationKind::Delay => MvaKind::Delay,
        StationKind::MultiServer if st.servers == 0 => {
            return Err(SolverError::InvalidModel(format!(
                "{:?} is visited but has no servers",
                st.role
            )));
        }
        StationKind::MultiServer => MvaKind::MultiServer {
            servers: st.servers,
        },
    };
    Ok(MvaStation {
        kind,
        visits: st.total_visits(),
        service: agg.mean,
        scv: agg.scv,
    })
}

/// Stations with a nonzero visit ratio, with their index in the model.
fn active_stations(model: &QnModel) -> Result<Vec<(usize, MvaStation)>, SolverError> {
    model
        .stations
        .iter()
        .enumerate()
        .filter(|(_, s)| s.total_visits() > 0.0)
        .map(|(i, s)| to_mva(s).map(|m| (i, m)))
        .collect()
}

fn check_model(model: &QnModel) -> Result<(), SolverError> {
    if model.robots == 0 {
        return Err(SolverError::InvalidModel(
            "at least one robot is required".into(),
        ));
    }
    if !(model.lambda >= 0.0 && model.lambda.is_finite()) {
        return Err(SolverError::InvalidModel(
            "arrival rate must be a non-negative number".into(),
        ));
    }
    Ok(())
}

pub fn mva_throughput_curve(
    model: &QnModel,
    opts: &SolverOptions,
) -> Result<ThroughputCurve, SolverError> {
    check_model(model)?;
    let stations: Vec<MvaStation> = active_stations(model)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let r = mva::solve(&stations, model.robots, &opts.mva)?;
    Ok(ThroughputCurve {
        th_at: r.throughput,
    })
}

fn idle_distribution(population: u32) -> Vec<f64> {
    let mut p = vec![0.0; population as usize + 1];
    p[0] = 1.0;
    p
}

fn occupancy_utilization(pn: &[f64], servers: u32) -> f64 {
    let m = servers as usize;
    let idle: f64 = pn
        .iter()
        .enumerate()
        .take(m)
        .map(|(n, p)| (m - n) as f64 / m as f64 * p)
        .sum();
    (1.0 - idle).clamp(0.0, 1.0)
}

/// Re-solves at `N_r` with the synchronization node as a load-dependent
/// station. `None` when `λ` is too close to `TH`.
pub fn solve_step2(
    model: &QnModel,
    curve: &ThroughputCurve,
    opts: &SolverOptions,
) -> Result<Option<Step2>, SolverError> {
    check_model(model)?;
    let th = curve.max_throughput();
    let lambda = model.lambda;
    if lambda >= opts.stability_margin * th {
        return Ok(None);
    }
    let nw = model
        .stations
        .iter()
        .filter(|s| matches!(s.role, StationRole::Workstation(_)))
        .count();
    let ws_index = |role: StationRole| match role {
        StationRole::Workstation(i) => Some(i),
        _ => None,
    };

    let mut step = Step2 {
        nr_sync: model.robots as f64,
        wt_w: vec![0.0; nw],
        wt_c: 0.0,
        pn_w: vec![Vec::new(); nw],
        pn_c: Vec::new(),
        throughput: 0.0,
    };
    for st in &model.stations {
        if let Some(i) = ws_index(st.role) {
            step.pn_w[i] = idle_distribution(model.robots);
        }
    }
    step.pn_c = idle_distribution(model.robots);
    if lambda == 0.0 {
        return Ok(Some(step));
    }

    let active = active_stations(model)?;
    let mut stations: Vec<MvaStation> = active.iter().map(|(_, s)| s.clone()).collect();
    stations.push(MvaStation {
        kind: MvaKind::LoadDependent {
            rates: vec![lambda * th / (th - lambda), lambda],
        },
        visits: model.sync_visits(),
        service: 0.0,
        scv: 1.0,
    });
    let r = mva::solve(&stations, model.robots, &opts.mva)?;
    let sync = stations.len() - 1;
    step.nr_sync = r.queue[sync];
    step.throughput = r.throughput.last().copied().unwrap_or(0.0);
    for (pos, (idx, st)) in active.iter().enumerate() {
        let role = model.stations[*idx].role;
        let wait = (r.residence[pos] / st.visits - st.service).max(0.0);
        let pn = r.marginals[pos].clone();
        if let Some(i) = ws_index(role) {
            step.wt_w[i] = wait;
            step.pn_w[i] = pn.unwrap_or_default();
        } else if role == StationRole::Charger {
            step.wt_c = wait;
            step.pn_c = pn.unwrap_or_default();
        }
    }
    Ok(Some(step))
}

/// Mean number of orders waiting for a robot.
pub fn solve_step3(
    curve: &ThroughputCurve,
    lambda: f64,
    robots: u32,
    opts: &SolverOptions,
) -> Result<f64, SolverError> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let nr = robots as usize;
    let th = curve.at(nr);
    if lambda >= th {
        return Err(SolverError::InvalidModel(format!(
            "arrival rate {lambda} is not below throughput {th}"
        )));
    }
    let ratio = lambda / th;
    // Unnormalized probabilities, pi_0 = 1.
    let mut pi = 1.0;
    let mut total = 1.0;
    let mut waiting = 0.0;
    let mut j = 0usize;
    loop {
        j += 1;
        if j > opts.max_states {
            return Err(SolverError::Truncation {
                states: opts.max_states,
            });
        }
        pi *= lambda / curve.at(j.min(nr));
        total += pi;
        waiting += j.saturating_sub(nr) as f64 * pi;
        // Past N_r the chain is geometric, so the remaining mass is known.
        if j >= nr {
            let tail = pi * ratio / (1.0 - ratio);
            let tail_waiting = tail * ((j - nr) as f64 + 1.0 / (1.0 - ratio));
            if tail.max(tail_waiting) < opts.tail_tolerance * total {
                break;
            }
        }
    }
    Ok(waiting / total)
}

pub fn assemble_metrics(model: &QnModel, step2: &Step2, no_sync: f64) -> SteadyState {
    let nw = step2.wt_w.len();
    let mut ws_visits = vec![0.0; nw];
    let mut retrieval: Vec<Option<&QnStation>> = vec![None; nw];
    let mut storage: Vec<Option<&QnStation>> = vec![None; nw];
    let mut handling: Vec<Option<&QnStation>> = vec![None; nw];
    for st in &model.stations {
        match st.role {
            StationRole::Retrieval(i) => retrieval[i] = Some(st),
            StationRole::Storage(i) => storage[i] = Some(st),
            StationRole::Workstation(i) => {
                ws_visits[i] = st.total_visits();
                handling[i] = Some(st);
            }
            _ => {}
        }
    }
    let total_ws: f64 = ws_visits.iter().sum();
    let p_w: Vec<f64> = ws_visits
        .iter()
        .map(|v| if total_ws > 0.0 { v / total_ws } else { 0.0 })
        .collect();
    let mean =
        |st: Option<&QnStation>, o: usize, t: usize| st.map_or(0.0, |s| s.service[o][t].mean);

    let queue_time = if model.lambda > 0.0 {
        no_sync / model.lambda
    } else {
        0.0
    };
    let tht_o: Vec<f64> = model
        .trips
        .iter()
        .enumerate()
        .map(|(o, &trips)| {
            let mut sum = queue_time;
            for t in 0..trips as usize {
                for i in 0..nw {
                    let leg =
                        mean(retrieval[i], o, t) + mean(handling[i], o, t) + mean(storage[i], o, t);
                    sum += p_w[i] * (leg + step2.wt_w[i]);
                }
            }
            sum
        })
        .collect();
    let prob_total: f64 = model.class_probs.iter().sum();
    let tht = model
        .class_probs
        .iter()
        .zip(&tht_o)
        .map(|(p, t)| p * t)
        .sum::<f64>()
        / prob_total;

    let rho_w = (0..nw)
        .map(|i| {
            p_w[i] * occupancy_utilization(&step2.pn_w[i], handling[i].map_or(1, |s| s.servers))
        })
        .sum::<f64>();
    let chargers = model
        .station(StationRole::Charger)
        .map_or(1, |s| s.servers.max(1));
    SteadyState {
        nr_sync: step2.nr_sync,
        no_sync,
        wt_w: step2.wt_w.clone(),
        wt_c: step2.wt_c,
        pn_w: step2.pn_w.clone(),
        pn_c: step2.pn_c.clone(),
        rho_r: ((1.0 - step2.nr_sync / model.robots as f64) * 100.0).clamp(0.0, 100.0),
        rho_w: rho_w * 100.0,
        rho_c: occupancy_utilization(&step2.pn_c, chargers) * 100.0,
        tht_o,
        tht,
    }
}

pub fn solve(model: &QnModel, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    let curve = mva_throughput_curve(model, opts)?;
    let th = curve.max_throughput();
    let metrics = match solve_step2(model, &curve, opts)? {
        Some(step2) => {
            let no_sync = solve_step3(&curve, model.lambda, model.robots, opts)?;
            Some(assemble_metrics(model, &step2, no_sync))
        }
        None => None,
    };
    Ok(SolveResult {
        lambda: model.lambda,
        stable: metrics.is_some(),
        max_throughput: th,
        throughput_curve: curve.th_at,
        metrics,
    })
}
