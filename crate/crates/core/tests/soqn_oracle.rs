mod common;

use common::{toy_model, two_class_toy};
use mtsr_core::solver::{solve, solve_step3, SolverOptions, ThroughputCurve};
use mtsr_oracles::{birth_death, toy_soqn};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn single_stage_toy_is_exact() {
    // With one exponential stage per order the robot pool is an M/M/c queue,
    // where the decomposition is exact.
    use mtsr_oracles::{ToyClass, ToySoqn};
    let sys = ToySoqn {
        lambda: 0.03,
        robots: 2,
        handling_rate: 1e6,
        classes: vec![ToyClass {
            prob: 1.0,
            trips: 1,
            retrieval_rate: 1.0 / 40.0,
            storage_rate: 1e6,
        }],
        queue_cap: 150,
    };
    let m = solve(&toy_model(&sys), &SolverOptions::default())
        .unwrap()
        .metrics
        .unwrap();
    let want = toy_soqn(&sys);
    assert!(rel(m.nr_sync, want.nr_sync) < 1e-3);
    assert!(
        rel(m.no_sync, want.no_sync) < 1e-3,
        "{} vs {}",
        m.no_sync,
        want.no_sync
    );
}

#[test]
fn two_class_toy_matches_full_ctmc() {
    for robots in 1..=3u8 {
        for load in [0.3, 0.6, 0.8] {
            let mut sys = two_class_toy(robots, 0.0);
            let model = toy_model(&sys);
            let th = solve(&model, &SolverOptions::default())
                .unwrap()
                .max_throughput;
            sys.lambda = load * th;
            let model = toy_model(&sys);
            let got = solve(&model, &SolverOptions::default()).unwrap();
            let m = got.metrics.expect("stable");
            let want = toy_soqn(&sys);
            assert!(
                want.cap_mass < 1e-9,
                "queue cap too small: {}",
                want.cap_mass
            );
            println!(
                "N_r={robots} load={load}: NR {:.4}/{:.4} NO {:.4}/{:.4} THT {:.2}/{:.2}",
                m.nr_sync, want.nr_sync, m.no_sync, want.no_sync, m.tht, want.tht
            );
            assert!(rel(m.nr_sync, want.nr_sync) < 0.03);
            // The isolated order queue treats robot completions as
            // exponential; with phase-type robot cycles it overstates the
            // queue, so NO_sync and THT err on the high side.
            assert!(m.no_sync >= want.no_sync && rel(m.no_sync, want.no_sync) < 0.4);
            assert!(m.tht >= want.tht && rel(m.tht, want.tht) < 0.3);
        }
    }
}

#[test]
fn workstation_occupancy_matches_ctmc() {
    let mut sys = two_class_toy(2, 0.0);
    let th = solve(&toy_model(&sys), &SolverOptions::default())
        .unwrap()
        .max_throughput;
    sys.lambda = 0.5 * th;
    let m = solve(&toy_model(&sys), &SolverOptions::default())
        .unwrap()
        .metrics
        .unwrap();
    let want = toy_soqn(&sys);
    for (a, b) in m.pn_w[0].iter().zip(&want.pn_w) {
        assert!((a - b).abs() < 0.03, "{:?} vs {:?}", m.pn_w[0], want.pn_w);
    }
}

#[test]
fn order_queue_matches_linear_solve() {
    let curve = ThroughputCurve {
        th_at: vec![0.5, 0.8],
    };
    let lambda = 0.4;
    let cap = 400;
    let birth = vec![lambda; cap];
    let death: Vec<f64> = (1..=cap).map(|j| curve.th_at[j.min(2) - 1]).collect();
    let pi = birth_death(&birth, &death);
    let want: f64 = pi
        .iter()
        .enumerate()
        .map(|(j, p)| j.saturating_sub(2) as f64 * p)
        .sum();
    let got = solve_step3(&curve, lambda, 2, &SolverOptions::default()).unwrap();
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn mm1_order_queue_matches_linear_solve() {
    let curve = ThroughputCurve { th_at: vec![1.0] };
    let pi = birth_death(&[0.5; 300], &[1.0; 300]);
    let want: f64 = pi
        .iter()
        .enumerate()
        .map(|(j, p)| j.saturating_sub(1) as f64 * p)
        .sum();
    let got = solve_step3(&curve, 0.5, 1, &SolverOptions::default()).unwrap();
    assert!((got - want).abs() < 1e-9);
    assert!((got - 0.5).abs() < 1e-9);
}
