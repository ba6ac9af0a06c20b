mod common;

use mtsr_core::layout::DistanceMatrix;
use mtsr_core::scenario::Scenario;
use mtsr_core::travel::{
    cr_policy_travel_time, random_policy_travel_time, DwellDistribution, KinematicsConfig,
    McLimits, Policy,
};
use mtsr_oracles::exhaustive_cr_retrieval;

// Three shelves, one workstation, one charger; deliberately asymmetric.
fn three_shelves() -> (DistanceMatrix, Vec<Vec<f64>>, Vec<f64>) {
    let shelves = vec![
        vec![0.0, 3.0, 7.0],
        vec![5.0, 0.0, 3.0],
        vec![4.0, 6.0, 0.0],
    ];
    let to_ws = vec![10.0, 14.0, 9.0];
    let rows = vec![
        vec![0.0, 3.0, 7.0, 10.0, 8.0],
        vec![5.0, 0.0, 3.0, 14.0, 9.0],
        vec![4.0, 6.0, 0.0, 9.0, 11.0],
        vec![12.0, 8.0, 10.0, 0.0, 6.0],
        vec![7.0, 9.0, 12.0, 5.0, 0.0],
    ];
    (DistanceMatrix::from_rows(3, 1, rows), shelves, to_ws)
}

fn kin() -> KinematicsConfig {
    KinematicsConfig {
        speed: 0.5,
        pick_time: 5.0,
    }
}

// A 95% interval misses now and then, so check coverage over many seeds
// rather than one draw.
#[test]
fn cr_two_totes_matches_exhaustive_enumeration() {
    let (d, shelves, to_ws) = three_shelves();
    let want = exhaustive_cr_retrieval(&shelves, &to_ws, 2, 0.5, 5.0);
    let limits = McLimits {
        min_samples: 20_000,
        max_samples: 5_000_000,
        rel_precision: 0.01,
    };
    let mut inside = 0;
    let mut z_sum = 0.0;
    for seed in 0..200 {
        let got =
            cr_policy_travel_time(&d, &kin(), 2, 0, &DwellDistribution::Uniform, seed, &limits)
                .unwrap();
        assert!(got.half_width_95 <= 0.01 * got.mean);
        if (got.mean - want).abs() <= got.half_width_95 {
            inside += 1;
        }
        z_sum += (got.mean - want) / (got.half_width_95 / 1.96);
    }
    assert!(inside >= 180, "only {inside}/200 intervals cover {want}");
    assert!(
        (z_sum / 200.0).abs() < 0.3,
        "biased: mean z {}",
        z_sum / 200.0
    );
}

#[test]
fn cr_single_tote_agrees_with_random_policy() {
    let (d, _, _) = three_shelves();
    let random = random_policy_travel_time(&d, &kin(), 1, 0).unwrap();
    let limits = McLimits {
        min_samples: 20_000,
        ..McLimits::default()
    };
    let cr =
        cr_policy_travel_time(&d, &kin(), 1, 0, &DwellDistribution::Uniform, 5, &limits).unwrap();
    assert!(
        (cr.mean - random).abs() <= cr.half_width_95,
        "{} ± {} vs {random}",
        cr.mean,
        cr.half_width_95
    );
}

#[test]
fn reference_cr_estimates_meet_precision() {
    let mut cfg = common::reference_config();
    cfg.policy.retrieval = Policy::ClosestRetrieval;
    let s = Scenario::from_config(&cfg).unwrap();
    let legs = s.leg_times(&s.resources().workers).unwrap();
    assert!(!legs.estimates.is_empty());
    for e in &legs.estimates {
        assert!(e.estimate.half_width_95 <= 0.01 * e.estimate.mean, "{e:?}");
    }
}

#[test]
fn leg_times_are_reproducible() {
    let mut cfg = common::reference_config();
    cfg.policy.retrieval = Policy::ClosestRetrieval;
    let s = Scenario::from_config(&cfg).unwrap();
    let w = s.resources().workers;
    assert_eq!(s.leg_times(&w).unwrap(), s.leg_times(&w).unwrap());
}
