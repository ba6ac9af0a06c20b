//! Mean value analysis of single-chain closed networks.
//!
//! Exact mode runs the load-dependent recursion over populations `1..=N`,
//! carrying marginal queue-length probabilities for multi-server and
//! load-dependent stations. For exponential services this reproduces the
//! product-form solution. With the SCV correction enabled, a robot that finds
//! all servers busy waits for a residual service of `(1 + scv) / 2` times a
//! mean service instead of a full one.
//!
//! Approximate mode solves a fixed point at each population. Single-server
//! stations use the Linearizer estimate of the queue seen on arrival
//! (Schweitzer's `(n - 1) / n` scaling plus a correction refined from the
//! solution at `n - 1`); multi-server and load-dependent stations use a
//! truncated birth-death marginal fed by the current throughput estimate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MvaError {
    #[error("approximate MVA did not converge after {iterations} iterations at population {population} (last changes {trace:?})")]
    NotConverged {
        population: u32,
        iterations: usize,
        trace: Vec<f64>,
    },
    #[error("station {index}: {reason}")]
    InvalidStation { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MvaKind {
    Delay,
    MultiServer {
        servers: u32,
    },
    /// Completion rate (per second) with `j` customers present is
    /// `rates[j - 1]`; the last entry repeats for larger `j`.
    LoadDependent {
        rates: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvaStation {
    pub kind: MvaKind,
    /// Visits per cycle.
    pub visits: f64,
    /// Mean service per visit, seconds (unused for load-dependent stations).
    pub service: f64,
    pub scv: f64,
}

impl MvaStation {
    fn rate(&self, j: usize) -> f64 {
        match &self.kind {
            MvaKind::Delay => j as f64 / self.service,
            MvaKind::MultiServer { servers } => (j.min(*servers as usize)) as f64 / self.service,
            MvaKind::LoadDependent { rates } => rates[(j - 1).min(rates.len() - 1)],
        }
    }

    fn has_marginals(&self) -> bool {
        !matches!(self.kind, MvaKind::Delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MvaMode {
    Exact,
    Approximate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MvaOptions {
    pub mode: MvaMode,
    pub scv_correction: bool,
    pub tolerance: f64,
    pub damping: f64,
    pub max_iterations: usize,
}

impl Default for MvaOptions {
    fn default() -> Self {
        MvaOptions {
            mode: MvaMode::Exact,
            scv_correction: true,
            tolerance: 1e-8,
            damping: 0.5,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvaResult {
    /// Cycle throughput for populations `1..=N`.
    pub throughput: Vec<f64>,
    /// Residence time per cycle at population `N`.
    pub residence: Vec<f64>,
    /// Mean number present at population `N`.
    pub queue: Vec<f64>,
    /// `p(j | N)` for `j = 0..=N`; `None` for delay stations.
    pub marginals: Vec<Option<Vec<f64>>>,
}

fn validate(stations: &[MvaStation]) -> Result<(), MvaError> {
    for (index, s) in stations.iter().enumerate() {
        let bad = |reason: &str| {
            Err(MvaError::InvalidStation {
                index,
                reason: reason.to_string(),
            })
        };
        if !(s.visits >= 0.0 && s.visits.is_finite()) {
            return bad("visit ratio must be a non-negative number");
        }
        match &s.kind {
            MvaKind::Delay | MvaKind::MultiServer { .. }
                if !(s.service >= 0.0 && s.service.is_finite()) =>
            {
                return bad("service time must be a non-negative number");
            }
            MvaKind::MultiServer { servers: 0 } => return bad("needs at least one server"),
            MvaKind::LoadDependent { rates }
                if rates.is_empty() || rates.iter().any(|r| r.is_nan() || *r <= 0.0) =>
            {
                return bad("load-dependent rates must be positive");
            }
            _ => {}
        }
    }
    Ok(())
}

/// Residence time per cycle given the marginal seen by an arriving customer.
fn residence_from_marginal(s: &MvaStation, seen: &[f64], opts: &MvaOptions) -> f64 {
    match &s.kind {
        MvaKind::Delay => s.visits * s.service,
        MvaKind::MultiServer { servers } => {
            let m = *servers as usize;
            let f = if opts.scv_correction {
                (1.0 + s.scv) / 2.0
            } else {
                1.0
            };
            let per_server = s.service / m as f64;
            let wait: f64 = seen
                .iter()
                .enumerate()
                .skip(m)
                .map(|(j, p)| p * (f * per_server + (j - m) as f64 * per_server))
                .sum();
            s.visits * (s.service + wait)
        }
        MvaKind::LoadDependent { .. } => {
            s.visits
                * seen
                    .iter()
                    .enumerate()
                    .map(|(j, p)| (j + 1) as f64 / s.rate(j + 1) * p)
                    .sum::<f64>()
        }
    }
}

/// Marginal at population `n` from the marginal at `n - 1` and throughput.
fn advance_marginal(s: &MvaStation, prev: &[f64], x: f64) -> Vec<f64> {
    let n = prev.len();
    let mut p = vec![0.0; n + 1];
    let mut tail = 0.0;
    for j in 1..=n {
        p[j] = x * s.visits / s.rate(j) * prev[j - 1];
        tail += p[j];
    }
    p[0] = 1.0 - tail;
    if p[0] < 0.0 {
        // Rounding in the complement; renormalize the positive part.
        p[0] = 0.0;
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
    }
    p
}

pub fn solve(
    stations: &[MvaStation],
    population: u32,
    opts: &MvaOptions,
) -> Result<MvaResult, MvaError> {
    validate(stations)?;
    match opts.mode {
        MvaMode::Exact => Ok(exact(stations, population, opts)),
        MvaMode::Approximate => approximate(stations, population, opts),
    }
}

fn exact(stations: &[MvaStation], population: u32, opts: &MvaOptions) -> MvaResult {
    let k = stations.len();
    let mut marginals: Vec<Vec<f64>> = vec![vec![1.0]; k];
    let mut throughput = Vec::with_capacity(population as usize);
    let mut residence = vec![0.0; k];
    let mut queue = vec![0.0; k];
    for n in 1..=population as usize {
        for (r, (s, p)) in residence.iter_mut().zip(stations.iter().zip(&marginals)) {
            *r = residence_from_marginal(s, p, opts);
        }
        let total: f64 = residence.iter().sum();
        let x = if total > 0.0 {
            n as f64 / total
        } else {
            f64::INFINITY
        };
        throughput.push(x);
        for idx in 0..k {
            queue[idx] = if x.is_finite() {
                x * residence[idx]
            } else {
                0.0
            };
            if stations[idx].has_marginals() {
                marginals[idx] = advance_marginal(&stations[idx], &marginals[idx], x);
            }
        }
    }
    MvaResult {
        throughput,
        residence,
        queue,
        marginals: stations
            .iter()
            .zip(marginals)
            .map(|(s, p)| s.has_marginals().then_some(p))
            .collect(),
    }
}

/// Birth-death marginal on `0..=cap` with arrival rate `a`.
fn isolated_marginal(s: &MvaStation, a: f64, cap: usize) -> Vec<f64> {
    let mut p = vec![1.0; cap + 1];
    for j in 1..=cap {
        p[j] = p[j - 1] * a / s.rate(j);
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

struct FixedPoint {
    throughput: f64,
    residence: Vec<f64>,
    queue: Vec<f64>,
    seen: Vec<Vec<f64>>,
}

/// `delta[k]` is the Linearizer correction `Q_k(n-1)/(n-1) - Q_k(n)/n`.
fn fixed_point(
    stations: &[MvaStation],
    n: usize,
    start_x: f64,
    delta: &[f64],
    opts: &MvaOptions,
) -> Result<FixedPoint, MvaError> {
    let k = stations.len();
    let mut x = start_x;
    let mut queue: Vec<f64> = vec![n as f64 / k as f64; k];
    let mut residence = vec![0.0; k];
    let mut seen: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut trace = Vec::new();
    let scale = (n as f64 - 1.0) / n as f64;
    for _ in 0..opts.max_iterations {
        for idx in 0..k {
            let s = &stations[idx];
            residence[idx] = match &s.kind {
                MvaKind::Delay => s.visits * s.service,
                MvaKind::MultiServer { servers: 1 } => {
                    let f = if opts.scv_correction {
                        (1.0 + s.scv) / 2.0
                    } else {
                        1.0
                    };
                    let busy = (x * s.visits * s.service).min(1.0) * scale;
                    let q = ((n as f64 - 1.0) * (queue[idx] / n as f64 + delta[idx])).max(0.0);
                    s.visits * s.service * (1.0 + (q - busy).max(0.0) + f * busy)
                }
                _ => {
                    seen[idx] = isolated_marginal(s, x * s.visits * scale, n - 1);
                    residence_from_marginal(s, &seen[idx], opts)
                }
            };
        }
        let total: f64 = residence.iter().sum();
        let target = if total > 0.0 {
            n as f64 / total
        } else {
            f64::INFINITY
        };
        if !target.is_finite() {
            return Ok(FixedPoint {
                throughput: target,
                residence,
                queue: vec![0.0; k],
                seen,
            });
        }
        let new_x = opts.damping * x + (1.0 - opts.damping) * target;
        let mut change: f64 = 0.0;
        for idx in 0..k {
            let q = new_x * residence[idx];
            change = change.max((q - queue[idx]).abs());
            queue[idx] = q;
        }
        x = new_x;
        trace.push(change);
        if trace.len() > 16 {
            trace.remove(0);
        }
        if change < opts.tolerance {
            return Ok(FixedPoint {
                throughput: x,
                residence,
                queue,
                seen,
            });
        }
    }
    Err(MvaError::NotConverged {
        population: n as u32,
        iterations: opts.max_iterations,
        trace,
    })
}

fn approximate(
    stations: &[MvaStation],
    population: u32,
    opts: &MvaOptions,
) -> Result<MvaResult, MvaError> {
    let k = stations.len();
    let mut throughput = Vec::with_capacity(population as usize);
    let mut last: Option<FixedPoint> = None;
    for n in 1..=population as usize {
        let start = last
            .as_ref()
            .map(|f| f.throughput)
            .filter(|x| x.is_finite())
            .unwrap_or_else(|| {
                let total: f64 = stations
                    .iter()
                    .map(|s| residence_from_marginal(s, &[1.0], opts))
                    .sum();
                if total > 0.0 {
                    1.0 / total
                } else {
                    1.0
                }
            });
        let mut delta = vec![0.0; k];
        let refine = n > 1
            && stations
                .iter()
                .any(|s| matches!(s.kind, MvaKind::MultiServer { servers: 1 }));
        if refine {
            for _ in 0..3 {
                let at_n = fixed_point(stations, n, start, &delta, opts)?;
                let below = fixed_point(stations, n - 1, start, &delta, opts)?;
                for (idx, d) in delta.iter_mut().enumerate() {
                    *d = below.queue[idx] / (n - 1) as f64 - at_n.queue[idx] / n as f64;
                }
            }
        }
        let fp = fixed_point(stations, n, start, &delta, opts)?;
        throughput.push(fp.throughput);
        last = Some(fp);
    }
    let Some(fp) = last else {
        return Ok(MvaResult {
            throughput,
            residence: vec![0.0; k],
            queue: vec![0.0; k],
            marginals: stations
                .iter()
                .map(|s| s.has_marginals().then(|| vec![1.0]))
                .collect(),
        });
    };
    let n = population as usize;
    let marginals = stations
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            if !s.has_marginals() {
                return None;
            }
            let seen = if fp.seen[idx].is_empty() {
                isolated_marginal(
                    s,
                    fp.throughput * s.visits * (n as f64 - 1.0) / n as f64,
                    n - 1,
                )
            } else {
                fp.seen[idx].clone()
            };
            Some(advance_marginal(s, &seen, fp.throughput))
        })
        .collect();
    Ok(MvaResult {
        throughput,
        residence: fp.residence,
        queue: fp.queue,
        marginals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(service: f64) -> MvaStation {
        MvaStation {
            kind: MvaKind::MultiServer { servers: 1 },
            visits: 1.0,
            service,
            scv: 1.0,
        }
    }

    fn delay(service: f64) -> MvaStation {
        MvaStation {
            kind: MvaKind::Delay,
            visits: 1.0,
            service,
            scv: 0.0,
        }
    }

    #[test]
    fn queue_plus_delay_hand_recursion() {
        // n=1: R = 1 + 1, X = 0.5, Q_q = 0.5. n=2: R_q = 1.5, X = 2 / 2.5 = 0.8.
        let r = solve(&[single(1.0), delay(1.0)], 2, &MvaOptions::default()).unwrap();
        assert!((r.throughput[0] - 0.5).abs() < 1e-15);
        assert!((r.throughput[1] - 0.8).abs() < 1e-15);
        let p = r.marginals[0].as_ref().unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[1] + 2.0 * p[2] - r.queue[0]).abs() < 1e-12);
    }

    #[test]
    fn population_one_has_no_queueing() {
        let st = [
            single(2.0),
            delay(3.0),
            MvaStation {
                kind: MvaKind::MultiServer { servers: 3 },
                visits: 0.5,
                service: 4.0,
                scv: 0.2,
            },
        ];
        let r = solve(&st, 1, &MvaOptions::default()).unwrap();
        assert!((r.throughput[0] - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn multi_server_equals_load_dependent_rates() {
        let ms = MvaStation {
            kind: MvaKind::MultiServer { servers: 2 },
            visits: 1.0,
            service: 3.0,
            scv: 1.0,
        };
        let ld = MvaStation {
            kind: MvaKind::LoadDependent {
                rates: vec![1.0 / 3.0, 2.0 / 3.0],
            },
            visits: 1.0,
            service: 0.0,
            scv: 1.0,
        };
        let a = solve(&[ms, delay(2.0)], 6, &MvaOptions::default()).unwrap();
        let b = solve(&[ld, delay(2.0)], 6, &MvaOptions::default()).unwrap();
        for (x, y) in a.throughput.iter().zip(&b.throughput) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn throughput_is_nondecreasing() {
        let st = [single(1.0), single(0.7), delay(4.0)];
        for mode in [MvaMode::Exact, MvaMode::Approximate] {
            let r = solve(
                &st,
                20,
                &MvaOptions {
                    mode,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(
                r.throughput.windows(2).all(|w| w[1] >= w[0] - 1e-12),
                "{mode:?}"
            );
        }
    }

    #[test]
    fn scv_correction_shortens_waits_for_regular_service() {
        let mut st = single(1.0);
        st.scv = 0.0;
        let on = solve(&[st.clone(), delay(1.0)], 5, &MvaOptions::default()).unwrap();
        let off = solve(
            &[st, delay(1.0)],
            5,
            &MvaOptions {
                scv_correction: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(on.throughput[4] > off.throughput[4]);
    }

    #[test]
    fn invalid_station_is_rejected() {
        let st = MvaStation {
            kind: MvaKind::MultiServer { servers: 0 },
            visits: 1.0,
            service: 1.0,
            scv: 1.0,
        };
        assert!(matches!(
            solve(&[st], 1, &MvaOptions::default()),
            Err(MvaError::InvalidStation { index: 0, .. })
        ));
    }
}
