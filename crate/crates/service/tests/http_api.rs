use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mtsr_core::config::parse_toml;
use mtsr_service::http::{router, ServiceOptions};
use mtsr_service::ops;
use serde_json::Value;
use tower::ServiceExt;

fn reference_text() -> String {
    std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/reference.toml"
    ))
    .unwrap()
}

fn reference_json() -> String {
    serde_json::to_string(&parse_toml(&reference_text()).unwrap()).unwrap()
}

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    content_type: &str,
    body: String,
) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, content_type)
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String) {
    call(app, "GET", uri, "application/json", String::new()).await
}

fn app() -> Router {
    router(ServiceOptions::default())
}

#[tokio::test]
async fn healthz_reports_version() {
    let (status, body) = get(&app(), "/healthz").await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[tokio::test]
async fn solve_matches_the_shared_operation_byte_for_byte() {
    let (status, body) = call(
        &app(),
        "POST",
        "/solve",
        "application/json",
        reference_json(),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let cfg = parse_toml(&reference_text()).unwrap();
    assert_eq!(body, ops::run_solve(&cfg).unwrap().to_json());
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["analytical"]["stable"], true);
}

#[tokio::test]
async fn toml_bodies_are_accepted() {
    let (status, body) = call(
        &app(),
        "POST",
        "/solve",
        "application/toml",
        reference_text(),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (_, json_body) = call(
        &app(),
        "POST",
        "/solve",
        "application/json",
        reference_json(),
    )
    .await;
    assert_eq!(body, json_body);
}

#[tokio::test]
async fn unstable_solve_is_a_conflict_carrying_throughput() {
    let body = reference_text().replace("count = 20", "count = 4");
    let (status, body) = call(&app(), "POST", "/solve", "application/toml", body).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert!(v["max_throughput"].as_f64().unwrap() > 0.0);
    assert!(v["lambda"].as_f64().unwrap() >= v["max_throughput"].as_f64().unwrap() * 0.999);
}

#[tokio::test]
async fn invalid_scenarios_list_field_paths() {
    let body = reference_text().replace("speed_m_per_s = 0.5", "speed_m_per_s = -1.0");
    let (status, body) = call(&app(), "POST", "/solve", "application/toml", body).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["errors"][0]["path"], "kinematics.speed_m_per_s");

    let (status, _) = call(&app(), "POST", "/solve", "application/json", "{".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn scenarios_can_be_saved_and_listed() {
    let app = app();
    let (status, _) = call(
        &app,
        "PUT",
        "/scenarios/ref",
        "application/toml",
        reference_text(),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, _) = call(
        &app,
        "PUT",
        "/scenarios/ref",
        "application/json",
        reference_json(),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = get(&app, "/scenarios/ref").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        parse_toml(&reference_text()).unwrap(),
        mtsr_core::config::parse_json(&body).unwrap()
    );
    let (_, body) = get(&app, "/scenarios").await;
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["scenarios"][0]["id"], "ref");
    let (status, _) = get(&app, "/scenarios/missing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn simulation_runs_as_a_job() {
    let app = app();
    let mut cfg = parse_toml(&reference_text()).unwrap();
    cfg.simulation.replications = 2;
    cfg.simulation.horizon_h = 10.0;
    let (status, body) = call(
        &app,
        "POST",
        "/simulate",
        "application/json",
        serde_json::to_string(&cfg).unwrap(),
    )
    .await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = serde_json::from_str::<Value>(&body).unwrap()["job_id"]
        .as_u64()
        .unwrap();
    let mut done = false;
    for _ in 0..600 {
        let (_, body) = get(&app, &format!("/jobs/{id}")).await;
        let v: Value = serde_json::from_str(&body).unwrap();
        if v["status"] == "done" {
            assert!(v["result"]["simulation"]["tht"]["mean"].as_f64().unwrap() > 0.0);
            done = true;
            break;
        }
        assert_ne!(v["status"], "failed", "{body}");
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
    assert!(done);
    let (status, body) = get(&app, &format!("/jobs/{id}/result")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, ops::run_simulate(&cfg).unwrap().to_json());
    let (status, _) = get(&app, "/jobs/9999").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn full_queue_refuses_new_jobs() {
    let app = router(ServiceOptions {
        job_workers: 1,
        queue_limit: 0,
    });
    let (status, _) = call(
        &app,
        "POST",
        "/simulate",
        "application/toml",
        reference_text(),
    )
    .await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn optimize_returns_a_plan_under_the_target() {
    let (status, body) = call(
        &app(),
        "POST",
        "/optimize",
        "application/toml",
        reference_text(),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_str(&body).unwrap();
    let m = &v["plan"]["result"]["metrics"];
    for k in ["rho_r", "rho_w", "rho_c"] {
        assert!(m[k].as_f64().unwrap() <= 90.0);
    }

    let mut cfg = parse_toml(&reference_text()).unwrap();
    cfg.planner.max_robots = 3;
    let (status, _) = call(
        &app(),
        "POST",
        "/optimize",
        "application/json",
        serde_json::to_string(&cfg).unwrap(),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/solve")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app().oneshot(req).await.unwrap();
    assert!(resp
        .headers()
        .contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));
}
