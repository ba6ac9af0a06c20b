#![allow(dead_code)]

use mtsr_core::model::{QnModel, QnStation, ServiceMoments, StationKind, StationRole};
use mtsr_oracles::{ToyClass, ToySoqn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn exp(mean: f64) -> ServiceMoments {
    ServiceMoments { mean, scv: 1.0 }
}

/// The queueing model matching a toy semi-open system: retrieval and storage
/// as delay stations, one single-server workstation.
pub fn toy_model(sys: &ToySoqn) -> QnModel {
    let per_trip = |f: &dyn Fn(&ToyClass) -> f64| -> Vec<Vec<ServiceMoments>> {
        sys.classes
            .iter()
            .map(|c| vec![exp(f(c)); c.trips as usize])
            .collect()
    };
    let visits: Vec<Vec<f64>> = sys
        .classes
        .iter()
        .map(|c| vec![c.prob; c.trips as usize])
        .collect();
    let station = |role, kind, servers, service| QnStation {
        role,
        kind,
        servers,
        service,
        visits: visits.clone(),
    };
    QnModel {
        stations: vec![
            station(
                StationRole::Retrieval(0),
                StationKind::Delay,
                0,
                per_trip(&|c| 1.0 / c.retrieval_rate),
            ),
            station(
                StationRole::Workstation(0),
                StationKind::MultiServer,
                1,
                per_trip(&|_| 1.0 / sys.handling_rate),
            ),
            station(
                StationRole::Storage(0),
                StationKind::Delay,
                0,
                per_trip(&|c| 1.0 / c.storage_rate),
            ),
        ],
        class_probs: sys.classes.iter().map(|c| c.prob).collect(),
        trips: sys.classes.iter().map(|c| c.trips as u32).collect(),
        robots: sys.robots as u32,
        lambda: sys.lambda,
    }
}

/// Two classes: one-trip orders and two-trip orders.
pub fn two_class_toy(robots: u8, lambda: f64) -> ToySoqn {
    ToySoqn {
        lambda,
        robots,
        handling_rate: 1.0 / 20.0,
        classes: vec![
            ToyClass {
                prob: 0.6,
                trips: 1,
                retrieval_rate: 1.0 / 30.0,
                storage_rate: 1.0 / 25.0,
            },
            ToyClass {
                prob: 0.4,
                trips: 2,
                retrieval_rate: 1.0 / 40.0,
                storage_rate: 1.0 / 35.0,
            },
        ],
        queue_cap: 150,
    }
}

/// Stationary visit ratios of a routing matrix, scaled so station 0 has 1.
pub fn visit_ratios(routing: &[Vec<f64>]) -> Vec<f64> {
    let k = routing.len();
    let mut v = vec![1.0 / k as f64; k];
    for _ in 0..100_000 {
        let mut next = vec![0.0; k];
        for i in 0..k {
            for j in 0..k {
                next[j] += v[i] * routing[i][j];
            }
        }
        // Lazy step keeps periodic routings from oscillating.
        for j in 0..k {
            next[j] = 0.5 * next[j] + 0.5 * v[j];
        }
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if diff < 1e-16 {
            break;
        }
    }
    let v0 = v[0];
    v.iter().map(|x| x / v0).collect()
}

/// Random irreducible routing: a cycle plus random extra branches.
pub fn random_routing(rng: &mut ChaCha8Rng, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(0.1..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            row[(i + 1) % k] += 1.0;
            row[i] = 0.0;
            let s: f64 = row.iter().sum();
            row.iter().map(|x| x / s).collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn reference_text() -> String {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/reference.toml"
    );
    std::fs::read_to_string(path).expect("reference scenario present")
}

pub fn reference_config() -> mtsr_core::config::ScenarioConfig {
    mtsr_core::config::parse_toml(&reference_text()).unwrap()
}

/// A one-block warehouse that simulates quickly.
pub fn small_config() -> mtsr_core::config::ScenarioConfig {
    let mut c = reference_config();
    c.name = Some("small".into());
    c.layout.blocks_x = 1;
    c.layout.blocks_y = 1;
    c.layout.block_width = 3;
    c.layout.workstations.truncate(2);
    c.layout.charger.chargers = 1;
    c.orders.lines = vec![1, 3];
    c.orders.probabilities = Some(vec![0.5, 0.5]);
    c.orders.total_rate_per_min = Some(1.0);
    c.robots.count = 4;
    c.robots.buffer_positions = 2;
    c
}
