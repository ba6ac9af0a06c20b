mod common;

use common::{reference_config, reference_text};
use mtsr_core::config::{parse_json, parse_toml};
use proptest::prelude::*;

#[test]
fn reference_round_trips() {
    let cfg = reference_config();
    let text = cfg.to_toml_string();
    let back = parse_toml(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_toml_string(), text);
    let json = serde_json::to_string(&cfg).unwrap();
    assert_eq!(parse_json(&json).unwrap(), cfg);
}

#[test]
fn negative_speed_names_the_field() {
    let text = reference_text().replace("speed_m_per_s = 0.5", "speed_m_per_s = -1.0");
    let err = parse_toml(&text).unwrap_err();
    assert!(
        err.fields()
            .iter()
            .any(|f| f.path == "kinematics.speed_m_per_s"),
        "{err}"
    );
}

#[test]
fn probabilities_must_sum_to_one() {
    let text = reference_text().replace("[0.1, 0.2, 0.3, 0.2, 0.2]", "[0.1, 0.2, 0.3, 0.2, 0.1]");
    let err = parse_toml(&text).unwrap_err();
    assert!(
        err.fields()
            .iter()
            .any(|f| f.path == "orders.probabilities"),
        "{err}"
    );
}

#[test]
fn unknown_and_mistyped_fields_are_located() {
    let err =
        parse_toml(&reference_text().replace("count = 20", "count = 20\ncolour = 1")).unwrap_err();
    assert!(err.fields()[0].path.starts_with("robots"), "{err}");
    let err = parse_toml(&reference_text().replace("count = 20", "count = \"many\"")).unwrap_err();
    assert_eq!(err.fields()[0].path, "robots.count", "{err}");
}

#[test]
fn json_errors_carry_paths() {
    let mut v: serde_json::Value = serde_json::to_value(reference_config()).unwrap();
    v["handling"]["min_s"] = serde_json::json!(9.0);
    let err = parse_json(&v.to_string()).unwrap_err();
    assert!(
        err.fields().iter().any(|f| f.path.starts_with("handling")),
        "{err}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn edited_configs_round_trip(robots in 1u32..100, buffer in 1u32..8, speed in 0.1f64..3.0, seed in any::<u64>()) {
        let mut cfg = reference_config();
        cfg.robots.count = robots;
        cfg.robots.buffer_positions = buffer;
        cfg.kinematics.speed_m_per_s = speed;
        cfg.seeds.simulation = seed;
        let back = parse_toml(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
