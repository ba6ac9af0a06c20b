use std::process::Command;

fn mtsr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mtsr"))
}

fn reference() -> String {
    concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/reference.toml"
    )
    .to_string()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("mtsr-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn solve_prints_a_stable_document() {
    let out = mtsr().args(["solve", "-c", &reference()]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "solve");
    assert_eq!(v["analytical"]["stable"], true);
    assert_eq!(v["provenance"]["travel_seed"], 20240601);
    assert!(v["provenance"].get("generated_at_unix").is_none());
}

#[test]
fn output_file_matches_stdout() {
    let path = scratch("solve.json");
    let a = mtsr()
        .args(["solve", "-c", &reference(), "-o"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(a.status.success());
    let b = mtsr().args(["solve", "-c", &reference()]).output().unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b.stdout);
}

#[test]
fn unstable_configuration_exits_with_a_diagnostic() {
    let path = scratch("unstable.toml");
    let text = std::fs::read_to_string(reference())
        .unwrap()
        .replace("count = 20", "count = 4");
    std::fs::write(&path, text).unwrap();
    let out = mtsr().args(["validate", "-c"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unstable"));
    let out = mtsr().args(["solve", "-c"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_and_bad_usage_exit_codes() {
    let path = scratch("bad.toml");
    let text = std::fs::read_to_string(reference())
        .unwrap()
        .replace("speed_m_per_s = 0.5", "speed_m_per_s = -1.0");
    std::fs::write(&path, text).unwrap();
    let out = mtsr().args(["solve", "-c"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kinematics.speed_m_per_s"));
    assert_eq!(
        mtsr().args(["solve"]).output().unwrap().status.code(),
        Some(2)
    );
    assert_eq!(
        mtsr().args(["frobnicate"]).output().unwrap().status.code(),
        Some(2)
    );
}

#[test]
fn overrides_are_recorded_in_provenance() {
    let out = mtsr()
        .args([
            "solve",
            "-c",
            &reference(),
            "--policy",
            "cr",
            "--travel-seed",
            "5",
            "--seed",
            "6",
        ])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["provenance"]["policy"], "cr");
    assert_eq!(v["provenance"]["travel_seed"], 5);
    assert_eq!(v["provenance"]["simulation_seed"], 6);
}

#[test]
fn traveltime_lists_every_tote_count() {
    let out = mtsr()
        .args(["traveltime", "-c", &reference()])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["travel"]["retrieve"].as_array().unwrap().len(), 4);
}

#[test]
fn validate_grid_has_an_average_row() {
    let out = mtsr()
        .args([
            "validate",
            "-c",
            &reference(),
            "--vary",
            "robots:18,22",
            "--policies",
            "random,cr",
        ])
        .args(["--replications", "2", "--horizon-hours", "20"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("rho_r"));
    assert_eq!(
        text.lines()
            .filter(|l| l.starts_with("18") || l.starts_with("22"))
            .count(),
        4
    );
    assert!(text.lines().last().unwrap().starts_with("Average"));
}

#[test]
fn optimize_table_has_resource_columns() {
    let out = mtsr()
        .args([
            "optimize",
            "-c",
            &reference(),
            "--rates",
            "1,2",
            "--policies",
            "random,cr",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    for col in ["lambda", "N_r", "N_c", "N_w", "THT"] {
        assert!(header.contains(col), "{header}");
    }
    assert!(text.contains("fewer with cr"));
}

#[test]
fn bad_vary_is_reported() {
    let out = mtsr()
        .args(["validate", "-c", &reference(), "--vary", "colour:1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
