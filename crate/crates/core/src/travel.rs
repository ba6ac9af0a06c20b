//! Mean travel times for the retrieval, storage and charging legs.
//!
//! The random sequencing policy has a closed form. Closest-retrieval (CR)
//! sequencing makes consecutive legs dependent, so it is estimated by Monte
//! Carlo sampling of whole tours, stopping once the 95% confidence half-width
//! falls within 1% of the running mean.

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{DistanceMatrix, Poi};
use crate::stats::{mix_seed, RunningStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TravelError {
    #[error("unknown workstation {0}")]
    UnknownWorkstation(usize),
    #[error("tote count must be at least 1")]
    ZeroTotes,
    #[error("robot speed must be positive and pick time non-negative (speed {speed}, pick time {pick_time})")]
    InvalidKinematics { speed: f64, pick_time: f64 },
    #[error("Monte Carlo estimate did not converge within {cap} samples (mean {mean:.4}, half-width {half_width:.4})")]
    NotConverged {
        cap: usize,
        mean: f64,
        half_width: f64,
    },
    #[error("no dwell samples available for closest-retrieval charging legs")]
    EmptyDwellSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "cr")]
    ClosestRetrieval,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Random => "random",
            Policy::ClosestRetrieval => "cr",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Policy::Random),
            "cr" => Ok(Policy::ClosestRetrieval),
            other => Err(format!(
                "unknown policy {other:?}, expected \"random\" or \"cr\""
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicsConfig {
    /// Robot speed in m/s.
    pub speed: f64,
    /// Time to pick (or put back) one tote, seconds.
    pub pick_time: f64,
}

impl KinematicsConfig {
    pub fn validate(&self) -> Result<(), TravelError> {
        if self.speed > 0.0
            && self.speed.is_finite()
            && self.pick_time >= 0.0
            && self.pick_time.is_finite()
        {
            Ok(())
        } else {
            Err(TravelError::InvalidKinematics {
                speed: self.speed,
                pick_time: self.pick_time,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McLimits {
    pub min_samples: usize,
    pub max_samples: usize,
    /// Target half-width relative to the mean.
    pub rel_precision: f64,
}

impl Default for McLimits {
    fn default() -> Self {
        McLimits {
            min_samples: 1_000,
            max_samples: 5_000_000,
            rel_precision: 0.01,
        }
    }
}

/// Where a robot stands when it is handed its next trip.
#[derive(Debug, Clone, PartialEq)]
pub enum DwellDistribution {
    /// Every shelf equally likely.
    Uniform,
    /// Empirical dwell shelves collected from simulated episodes.
    Empirical(Vec<usize>),
}

impl DwellDistribution {
    fn sample<R: Rng>(&self, rng: &mut R, num_shelves: usize) -> usize {
        match self {
            DwellDistribution::Uniform => rng.random_range(0..num_shelves),
            DwellDistribution::Empirical(s) => s[rng.random_range(0..s.len())],
        }
    }

    /// Probability of each shelf being the dwell point.
    pub fn weights(&self, num_shelves: usize) -> Vec<f64> {
        match self {
            DwellDistribution::Uniform => vec![1.0 / num_shelves as f64; num_shelves],
            DwellDistribution::Empirical(s) => {
                let mut w = vec![0.0; num_shelves];
                for &m in s {
                    w[m] += 1.0;
                }
                w.iter_mut().for_each(|x| *x /= s.len() as f64);
                w
            }
        }
    }
}

fn check(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    nc: u32,
    workstation: usize,
) -> Result<(), TravelError> {
    kin.validate()?;
    if nc == 0 {
        return Err(TravelError::ZeroTotes);
    }
    if workstation >= dist.num_workstations() {
        return Err(TravelError::UnknownWorkstation(workstation));
    }
    Ok(())
}

fn mean_shelf_pair_distance(dist: &DistanceMatrix) -> f64 {
    let n = dist.num_shelves();
    let total: f64 = (0..n)
        .flat_map(|m| (0..n).map(move |k| (m, k)))
        .map(|(m, k)| dist.shelf_to_shelf(m, k))
        .sum();
    total / (n * n) as f64
}

/// Random-sequence retrieval time: one leg from the last tote shelf to the
/// workstation plus `nc` shelf-to-shelf legs and picks, starting from a
/// uniformly distributed dwell shelf.
pub fn random_policy_travel_time(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    nc: u32,
    workstation: usize,
) -> Result<f64, TravelError> {
    check(dist, kin, nc, workstation)?;
    let n = dist.num_shelves();
    let to_ws: f64 = (0..n)
        .map(|m| dist.shelf_to_workstation(m, workstation))
        .sum::<f64>()
        / n as f64;
    Ok(
        to_ws / kin.speed
            + nc as f64 * (mean_shelf_pair_distance(dist) / kin.speed + kin.pick_time),
    )
}

/// Random-sequence storage time: workstation to the first shelf, `nc - 1`
/// shelf-to-shelf legs, and one put-back per tote. The robot ends on the
/// last shelf visited.
pub fn random_policy_storage_time(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    nc: u32,
    workstation: usize,
) -> Result<f64, TravelError> {
    check(dist, kin, nc, workstation)?;
    let n = dist.num_shelves();
    let from_ws: f64 = (0..n)
        .map(|m| dist.workstation_to_shelf(workstation, m))
        .sum::<f64>()
        / n as f64;
    Ok(from_ws / kin.speed
        + (nc - 1) as f64 * mean_shelf_pair_distance(dist) / kin.speed
        + nc as f64 * kin.pick_time)
}

/// Random-sequence retrieval time when the dwell shelf is not uniform: the
/// first leg is averaged over the dwell weights.
fn random_retrieval_with_dwell(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    nc: u32,
    workstation: usize,
    dwell: &[f64],
) -> Result<f64, TravelError> {
    check(dist, kin, nc, workstation)?;
    let n = dist.num_shelves();
    let pair = mean_shelf_pair_distance(dist);
    let first: f64 = dwell
        .iter()
        .enumerate()
        .map(|(s, w)| w * (0..n).map(|m| dist.shelf_to_shelf(s, m)).sum::<f64>() / n as f64)
        .sum();
    let to_ws: f64 = (0..n)
        .map(|m| dist.shelf_to_workstation(m, workstation))
        .sum::<f64>()
        / n as f64;
    Ok((first + (nc - 1) as f64 * pair + to_ws) / kin.speed + nc as f64 * kin.pick_time)
}

/// Visits `totes` by repeatedly moving to the closest remaining tote shelf
/// (ties to the lowest shelf id). Returns the distance walked and the final
/// shelf.
pub fn nearest_neighbor_tour(dist: &DistanceMatrix, start: Poi, totes: &[usize]) -> (f64, usize) {
    let mut remaining = totes.to_vec();
    let mut pos = start;
    let mut walked = 0.0;
    let mut last = totes[0];
    while !remaining.is_empty() {
        let (k, d) = remaining
            .iter()
            .enumerate()
            .map(|(k, &m)| (k, dist.get(pos, Poi::Shelf(m))))
            .min_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(remaining[a.0].cmp(&remaining[b.0]))
            })
            .expect("remaining is non-empty");
        walked += d;
        last = remaining.swap_remove(k);
        pos = Poi::Shelf(last);
    }
    (walked, last)
}

/// Walks `totes` in the given order starting at `start`.
pub fn ordered_tour(dist: &DistanceMatrix, start: Poi, totes: &[usize]) -> (f64, usize) {
    let mut pos = start;
    let mut walked = 0.0;
    for &m in totes {
        walked += dist.get(pos, Poi::Shelf(m));
        pos = Poi::Shelf(m);
    }
    (walked, *totes.last().expect("at least one tote"))
}

fn run_monte_carlo<F>(
    seed: u64,
    limits: &McLimits,
    mut sample: F,
) -> Result<MonteCarloEstimate, TravelError>
where
    F: FnMut(&mut ChaCha8Rng) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = RunningStats::default();
    let min = limits.min_samples.max(2);
    loop {
        stats.push(sample(&mut rng));
        let n = stats.count() as usize;
        if n >= min {
            let hw = stats.half_width_95();
            if hw <= limits.rel_precision * stats.mean().abs() {
                return Ok(MonteCarloEstimate {
                    mean: stats.mean(),
                    half_width_95: hw,
                    n_samples: n,
                    seed,
                });
            }
            if n >= limits.max_samples {
                return Err(TravelError::NotConverged {
                    cap: limits.max_samples,
                    mean: stats.mean(),
                    half_width: hw,
                });
            }
        }
    }
}

fn sample_totes<R: Rng>(rng: &mut R, nc: u32, num_shelves: usize, buf: &mut Vec<usize>) {
    buf.clear();
    buf.extend((0..nc).map(|_| rng.random_range(0..num_shelves)));
}

/// Closest-retrieval travel time from a dwell shelf through `nc` uniformly
/// placed totes to the workstation, including picks.
pub fn cr_policy_travel_time(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    nc: u32,
    workstation: usize,
    start: &DwellDistribution,
    seed: u64,
    limits: &McLimits,
) -> Result<MonteCarloEstimate, TravelError> {
    check(dist, kin, nc, workstation)?;
    if matches!(start, DwellDistribution::Empirical(s) if s.is_empty()) {
        return Err(TravelError::EmptyDwellSamples);
    }
    let n = dist.num_shelves();
    let mut totes = Vec::with_capacity(nc as usize);
    run_monte_carlo(seed, limits, |rng| {
        let s0 = start.sample(rng, n);
        sample_totes(rng, nc, n, &mut totes);
        let (walked, last) = nearest_neighbor_tour(dist, Poi::Shelf(s0), &totes);
        (walked + dist.shelf_to_workstation(last, workstation)) / kin.speed
            + nc as f64 * kin.pick_time
    })
}

/// Closest-retrieval storage time: nearest-neighbor put-back tour from the
/// workstation, including put-back handling.
pub fn cr_policy_storage_time(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    nc: u32,
    workstation: usize,
    seed: u64,
    limits: &McLimits,
) -> Result<MonteCarloEstimate, TravelError> {
    check(dist, kin, nc, workstation)?;
    let n = dist.num_shelves();
    let mut totes = Vec::with_capacity(nc as usize);
    run_monte_carlo(seed, limits, |rng| {
        sample_totes(rng, nc, n, &mut totes);
        let (walked, _) = nearest_neighbor_tour(dist, Poi::Workstation(workstation), &totes);
        walked / kin.speed + nc as f64 * kin.pick_time
    })
}

/// Dwell shelves observed at the end of simulated storage tours. Trips are
/// drawn from `trip_mix` (tote count, weight) and workstations from
/// `ws_probs`.
pub fn collect_dwell_samples(
    dist: &DistanceMatrix,
    storage_policy: Policy,
    trip_mix: &[(u32, f64)],
    ws_probs: &[f64],
    samples: usize,
    seed: u64,
) -> Vec<usize> {
    let n = dist.num_shelves();
    if storage_policy == Policy::Random || trip_mix.is_empty() || samples == 0 {
        // Random put-back ends on an independent uniform shelf.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return (0..samples).map(|_| rng.random_range(0..n)).collect();
    }
    let trip_pick =
        WeightedIndex::new(trip_mix.iter().map(|t| t.1)).expect("positive trip weights");
    let ws_pick = WeightedIndex::new(ws_probs).expect("positive workstation weights");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut totes = Vec::new();
    (0..samples)
        .map(|_| {
            let nc = trip_mix[trip_pick.sample(&mut rng)].0;
            let ws = ws_pick.sample(&mut rng);
            sample_totes(&mut rng, nc, n, &mut totes);
            nearest_neighbor_tour(dist, Poi::Workstation(ws), &totes).1
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingLegs {
    pub dwell_to_charge: f64,
    pub charge_to_dwell: f64,
    /// Present when the legs were sampled rather than averaged in closed form.
    pub estimates: Option<(MonteCarloEstimate, MonteCarloEstimate)>,
}

/// Travel times between the dwell point and the charging station. Random
/// dwell is uniform over shelves and averages directly; CR dwell is sampled
/// from `dwell_samples`.
pub fn charging_leg_times(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    policy: Policy,
    dwell_samples: &[usize],
    seed: u64,
    limits: &McLimits,
) -> Result<ChargingLegs, TravelError> {
    kin.validate()?;
    let n = dist.num_shelves();
    match policy {
        Policy::Random => {
            let to: f64 = (0..n).map(|m| dist.get(Poi::Shelf(m), Poi::Charger)).sum();
            let from: f64 = (0..n).map(|m| dist.get(Poi::Charger, Poi::Shelf(m))).sum();
            Ok(ChargingLegs {
                dwell_to_charge: to / (n as f64 * kin.speed),
                charge_to_dwell: from / (n as f64 * kin.speed),
                estimates: None,
            })
        }
        Policy::ClosestRetrieval => {
            if dwell_samples.is_empty() {
                return Err(TravelError::EmptyDwellSamples);
            }
            let pick =
                |rng: &mut ChaCha8Rng| dwell_samples[rng.random_range(0..dwell_samples.len())];
            let to = run_monte_carlo(mix_seed(seed, 1), limits, |rng| {
                dist.get(Poi::Shelf(pick(rng)), Poi::Charger) / kin.speed
            })?;
            let from = run_monte_carlo(mix_seed(seed, 2), limits, |rng| {
                dist.get(Poi::Charger, Poi::Shelf(pick(rng))) / kin.speed
            })?;
            Ok(ChargingLegs {
                dwell_to_charge: to.mean,
                charge_to_dwell: from.mean,
                estimates: Some((to, from)),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravelSettings {
    pub policy: Policy,
    /// Put-back sequencing; defaults to `policy`.
    pub storage_policy: Policy,
    pub seed: u64,
    pub limits: McLimits,
    pub dwell_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Retrieve,
    Store,
    DwellToCharge,
    ChargeToDwell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub leg: Leg,
    pub totes: u32,
    pub workstation: Option<usize>,
    pub estimate: MonteCarloEstimate,
}

/// Leg times indexed by tote count (`[nc - 1][workstation]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegTimes {
    pub retrieve: Vec<Vec<f64>>,
    pub store: Vec<Vec<f64>>,
    pub dwell_to_charge: f64,
    pub charge_to_dwell: f64,
    pub policy: Policy,
    pub storage_policy: Policy,
    pub estimates: Vec<EstimateRecord>,
}

/// Computes retrieval and storage times for every tote count up to
/// `max_totes` and every workstation, plus the two charging legs.
pub fn compute_leg_times(
    dist: &DistanceMatrix,
    kin: &KinematicsConfig,
    max_totes: u32,
    trip_mix: &[(u32, f64)],
    ws_probs: &[f64],
    settings: &TravelSettings,
) -> Result<LegTimes, TravelError> {
    kin.validate()?;
    if max_totes == 0 {
        return Err(TravelError::ZeroTotes);
    }
    let nw = dist.num_workstations();
    let n = dist.num_shelves();
    let dwell_samples = collect_dwell_samples(
        dist,
        settings.storage_policy,
        trip_mix,
        ws_probs,
        settings.dwell_samples,
        mix_seed(settings.seed, 0xD0E1),
    );
    let dwell = match settings.storage_policy {
        Policy::Random => DwellDistribution::Uniform,
        Policy::ClosestRetrieval => {
            if dwell_samples.is_empty() {
                return Err(TravelError::EmptyDwellSamples);
            }
            DwellDistribution::Empirical(dwell_samples.clone())
        }
    };
    let dwell_weights = dwell.weights(n);

    let jobs: Vec<(Leg, u32, usize)> = (1..=max_totes)
        .flat_map(|nc| (0..nw).flat_map(move |i| [(Leg::Retrieve, nc, i), (Leg::Store, nc, i)]))
        .collect();
    let results: Vec<Result<(f64, Option<MonteCarloEstimate>), TravelError>> = jobs
        .par_iter()
        .map(|&(leg, nc, i)| {
            let tag = ((leg as u64) << 40) | ((nc as u64) << 20) | i as u64;
            let seed = mix_seed(settings.seed, tag);
            match (leg, settings.policy, settings.storage_policy) {
                (Leg::Retrieve, Policy::Random, Policy::Random) => {
                    Ok((random_policy_travel_time(dist, kin, nc, i)?, None))
                }
                (Leg::Retrieve, Policy::Random, Policy::ClosestRetrieval) => Ok((
                    random_retrieval_with_dwell(dist, kin, nc, i, &dwell_weights)?,
                    None,
                )),
                (Leg::Retrieve, Policy::ClosestRetrieval, _) => {
                    let e =
                        cr_policy_travel_time(dist, kin, nc, i, &dwell, seed, &settings.limits)?;
                    Ok((e.mean, Some(e)))
                }
                (Leg::Store, _, Policy::Random) => {
                    Ok((random_policy_storage_time(dist, kin, nc, i)?, None))
                }
                (Leg::Store, _, Policy::ClosestRetrieval) => {
                    let e = cr_policy_storage_time(dist, kin, nc, i, seed, &settings.limits)?;
                    Ok((e.mean, Some(e)))
                }
                _ => unreachable!("only retrieve and store legs are scheduled"),
            }
        })
        .collect();

    let mut retrieve = vec![vec![0.0; nw]; max_totes as usize];
    let mut store = vec![vec![0.0; nw]; max_totes as usize];
    let mut estimates = Vec::new();
    for (&(leg, nc, i), r) in jobs.iter().zip(results) {
        let (value, est) = r?;
        let table = if leg == Leg::Retrieve {
            &mut retrieve
        } else {
            &mut store
        };
        table[nc as usize - 1][i] = value;
        if let Some(estimate) = est {
            estimates.push(EstimateRecord {
                leg,
                totes: nc,
                workstation: Some(i),
                estimate,
            });
        }
    }

    let legs = charging_leg_times(
        dist,
        kin,
        settings.storage_policy,
        &dwell_samples,
        mix_seed(settings.seed, 0xC4A2),
        &settings.limits,
    )?;
    if let Some((to, from)) = legs.estimates {
        estimates.push(EstimateRecord {
            leg: Leg::DwellToCharge,
            totes: 0,
            workstation: None,
            estimate: to,
        });
        estimates.push(EstimateRecord {
            leg: Leg::ChargeToDwell,
            totes: 0,
            workstation: None,
            estimate: from,
        });
    }
    Ok(LegTimes {
        retrieve,
        store,
        dwell_to_charge: legs.dwell_to_charge,
        charge_to_dwell: legs.charge_to_dwell,
        policy: settings.policy,
        storage_policy: settings.storage_policy,
        estimates,
    })
}

/// Per-class, per-trip, per-workstation travel times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimeTable {
    /// `retrieve[o][t][i]`, seconds.
    pub retrieve: Vec<Vec<Vec<f64>>>,
    /// `store[o][t][i]`, seconds.
    pub store: Vec<Vec<Vec<f64>>>,
    pub dwell_to_charge: f64,
    pub charge_to_dwell: f64,
    pub policy: Policy,
}

impl TravelTimeTable {
    /// Expands per-tote-count leg times over each class's trip tote counts.
    pub fn from_legs(legs: &LegTimes, trip_totes: &[Vec<u32>]) -> Self {
        let expand = |table: &Vec<Vec<f64>>| -> Vec<Vec<Vec<f64>>> {
            trip_totes
                .iter()
                .map(|trips| {
                    trips
                        .iter()
                        .map(|&nc| table[nc as usize - 1].clone())
                        .collect()
                })
                .collect()
        };
        TravelTimeTable {
            retrieve: expand(&legs.retrieve),
            store: expand(&legs.store),
            dwell_to_charge: legs.dwell_to_charge,
            charge_to_dwell: legs.charge_to_dwell,
            policy: legs.policy,
        }
    }
}

/// Random tote order for put-back under the random policy.
pub fn shuffled<R: Rng>(rng: &mut R, totes: &[usize]) -> Vec<usize> {
    let mut v = totes.to_vec();
    v.shuffle(rng);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two shelves, one workstation: D(sh, w) = (10, 20), pairwise (0 4; 6 0).
    fn two_shelf_matrix() -> DistanceMatrix {
        DistanceMatrix::from_rows(
            2,
            1,
            vec![
                vec![0.0, 4.0, 10.0, 10.0],
                vec![6.0, 0.0, 20.0, 20.0],
                vec![12.0, 14.0, 0.0, 30.0],
                vec![10.0, 20.0, 30.0, 0.0],
            ],
        )
    }

    const KIN: KinematicsConfig = KinematicsConfig {
        speed: 0.5,
        pick_time: 5.0,
    };

    #[test]
    fn random_policy_hand_value() {
        let t = random_policy_travel_time(&two_shelf_matrix(), &KIN, 1, 0).unwrap();
        assert!((t - 40.0).abs() < 1e-12, "{t}");
    }

    #[test]
    fn random_policy_sampled_tours_agree() {
        // Oracle: average of explicitly sampled random tours.
        let d = two_shelf_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = RunningStats::default();
        for _ in 0..200_000 {
            let start = rng.random_range(0..2);
            let tote = rng.random_range(0..2);
            s.push((d.shelf_to_shelf(start, tote) + d.shelf_to_workstation(tote, 0)) / 0.5 + 5.0);
        }
        assert!(
            (s.mean() - 40.0).abs() < 4.0 * s.half_width_95(),
            "{}",
            s.mean()
        );
    }

    #[test]
    fn zero_distances_isolate_pick_time() {
        let d = DistanceMatrix::from_rows(2, 1, vec![vec![0.0; 4]; 4]);
        assert_eq!(random_policy_travel_time(&d, &KIN, 3, 0).unwrap(), 15.0);
    }

    #[test]
    fn doubling_speed_halves_distance_terms() {
        let d = two_shelf_matrix();
        let slow = random_policy_travel_time(&d, &KIN, 2, 0).unwrap();
        let fast = random_policy_travel_time(
            &d,
            &KinematicsConfig {
                speed: 1.0,
                pick_time: 5.0,
            },
            2,
            0,
        )
        .unwrap();
        assert!(((slow - 10.0) / 2.0 - (fast - 10.0)).abs() < 1e-12);
    }

    #[test]
    fn unknown_workstation_and_zero_totes() {
        let d = two_shelf_matrix();
        assert_eq!(
            random_policy_travel_time(&d, &KIN, 1, 3),
            Err(TravelError::UnknownWorkstation(3))
        );
        assert_eq!(
            random_policy_travel_time(&d, &KIN, 0, 0),
            Err(TravelError::ZeroTotes)
        );
    }

    #[test]
    fn charging_legs_closed_form() {
        let d = two_shelf_matrix();
        let legs =
            charging_leg_times(&d, &KIN, Policy::Random, &[], 0, &McLimits::default()).unwrap();
        assert!((legs.dwell_to_charge - 30.0).abs() < 1e-12);
        // Charger to shelves is (10, 20) as well in this matrix.
        assert!((legs.charge_to_dwell - 30.0).abs() < 1e-12);
    }

    #[test]
    fn charging_legs_equidistant() {
        let mut rows = vec![vec![0.0; 4]; 4];
        rows[0][3] = 30.0;
        rows[1][3] = 30.0;
        rows[3][0] = 30.0;
        rows[3][1] = 30.0;
        let d = DistanceMatrix::from_rows(2, 1, rows);
        let legs =
            charging_leg_times(&d, &KIN, Policy::Random, &[], 0, &McLimits::default()).unwrap();
        assert_eq!(legs.dwell_to_charge, 60.0);
    }

    #[test]
    fn charging_legs_asymmetric() {
        let mut rows = vec![vec![0.0; 4]; 4];
        rows[0][3] = 10.0;
        rows[1][3] = 10.0;
        rows[3][0] = 30.0;
        rows[3][1] = 50.0;
        let d = DistanceMatrix::from_rows(2, 1, rows);
        let legs =
            charging_leg_times(&d, &KIN, Policy::Random, &[], 0, &McLimits::default()).unwrap();
        assert_eq!(legs.dwell_to_charge, 20.0);
        assert_eq!(legs.charge_to_dwell, 80.0);
    }

    #[test]
    fn cr_charging_requires_dwell_samples() {
        let d = two_shelf_matrix();
        let err = charging_leg_times(
            &d,
            &KIN,
            Policy::ClosestRetrieval,
            &[],
            0,
            &McLimits::default(),
        );
        assert_eq!(err, Err(TravelError::EmptyDwellSamples));
    }

    #[test]
    fn nearest_neighbor_ties_go_to_lowest_id() {
        let d = DistanceMatrix::from_rows(3, 1, vec![vec![0.0; 5]; 5]);
        let (_, last) = nearest_neighbor_tour(&d, Poi::Workstation(0), &[2, 1, 0]);
        // All zero: visits 0, then 1, then 2.
        assert_eq!(last, 2);
    }

    #[test]
    fn cr_estimate_is_deterministic() {
        let d = two_shelf_matrix();
        let a = cr_policy_travel_time(
            &d,
            &KIN,
            2,
            0,
            &DwellDistribution::Uniform,
            5,
            &McLimits::default(),
        )
        .unwrap();
        let b = cr_policy_travel_time(
            &d,
            &KIN,
            2,
            0,
            &DwellDistribution::Uniform,
            5,
            &McLimits::default(),
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(a.half_width_95 <= 0.01 * a.mean);
        assert!(a.n_samples >= 1000);
    }

    #[test]
    fn sample_cap_is_reported() {
        let d = two_shelf_matrix();
        let limits = McLimits {
            min_samples: 10,
            max_samples: 20,
            rel_precision: 1e-9,
        };
        let err = cr_policy_travel_time(&d, &KIN, 2, 0, &DwellDistribution::Uniform, 5, &limits)
            .unwrap_err();
        assert!(matches!(err, TravelError::NotConverged { cap: 20, .. }));
    }
}
