//! HTTP front end. Bodies are scenario documents in JSON (or TOML with a
//! `toml` content type); responses are result documents.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use mtsr_core::config::{parse_json, parse_toml, ConfigError, FieldError, ScenarioConfig};
use mtsr_core::report::{ResultDocument, VERSION};
use mtsr_core::scenario::Scenario;
use serde::Serialize;
use serde_json::json;
use tokio::sync::Semaphore;
use tower_http::cors::CorsLayer;

use crate::ops::{self, OpError};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone)]
struct Job {
    status: JobStatus,
    result: Option<String>,
    error: Option<String>,
}

pub struct AppState {
    scenarios: RwLock<BTreeMap<String, ScenarioConfig>>,
    jobs: Mutex<BTreeMap<u64, Job>>,
    next_job: AtomicU64,
    pending: AtomicUsize,
    queue_limit: usize,
    permits: Semaphore,
}

#[derive(Debug, Clone, Copy)]
pub struct ServiceOptions {
    /// Simulations running at once.
    pub job_workers: usize,
    /// Jobs accepted but not finished before new ones are refused.
    pub queue_limit: usize,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions {
            job_workers: 2,
            queue_limit: 64,
        }
    }
}

pub fn router(opts: ServiceOptions) -> Router {
    let state = Arc::new(AppState {
        scenarios: RwLock::new(BTreeMap::new()),
        jobs: Mutex::new(BTreeMap::new()),
        next_job: AtomicU64::new(1),
        pending: AtomicUsize::new(0),
        queue_limit: opts.queue_limit,
        permits: Semaphore::new(opts.job_workers.max(1)),
    });
    Router::new()
        .route("/healthz", get(healthz))
        .route("/solve", post(solve))
        .route("/simulate", post(simulate))
        .route("/optimize", post(optimize))
        .route("/jobs/{id}", get(job))
        .route("/jobs/{id}/result", get(job_result))
        .route("/scenarios", get(list_scenarios))
        .route("/scenarios/{id}", put(put_scenario).get(get_scenario))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn json_text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn document(doc: &ResultDocument) -> Response {
    json_text(StatusCode::OK, doc.to_json())
}

fn field_errors(errors: &[FieldError]) -> Response {
    (
        StatusCode::BAD_REQUEST,
        Json(json!({ "error": "invalid scenario", "errors": errors })),
    )
        .into_response()
}

fn error_response(e: OpError) -> Response {
    match e {
        OpError::Config(c) => field_errors(c.fields()),
        OpError::Unstable {
            lambda,
            max_throughput,
        } => (
            StatusCode::CONFLICT,
            Json(json!({
                "error": "unstable",
                "message": e.to_string(),
                "lambda": lambda,
                "max_throughput": max_throughput,
                "lambda_per_min": lambda * 60.0,
                "max_throughput_per_min": max_throughput * 60.0,
            })),
        )
            .into_response(),
        OpError::Plan(p) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({ "error": "no feasible plan", "message": p.to_string() })),
        )
            .into_response(),
        other => (
            StatusCode::BAD_REQUEST,
            Json(json!({ "error": "invalid scenario", "message": other.to_string() })),
        )
            .into_response(),
    }
}

fn parse_body(headers: &HeaderMap, body: &str) -> Result<ScenarioConfig, ConfigError> {
    let toml = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("toml"));
    if toml {
        parse_toml(body)
    } else {
        parse_json(body)
    }
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    tokio::task::spawn_blocking(f)
        .await
        .expect("worker task panicked")
}

async fn healthz() -> Response {
    Json(json!({ "status": "ok", "version": VERSION })).into_response()
}

async fn solve(headers: HeaderMap, body: String) -> Response {
    let cfg = match parse_body(&headers, &body) {
        Ok(c) => c,
        Err(e) => return field_errors(e.fields()),
    };
    match blocking(move || ops::run_solve(&cfg)).await {
        Ok(doc) => match ops::unstable_error(&doc) {
            Some(e) => error_response(e),
            None => document(&doc),
        },
        Err(e) => error_response(e),
    }
}

async fn optimize(headers: HeaderMap, body: String) -> Response {
    let cfg = match parse_body(&headers, &body) {
        Ok(c) => c,
        Err(e) => return field_errors(e.fields()),
    };
    match blocking(move || ops::run_optimize(&cfg, &[])).await {
        Ok(mut docs) => document(&docs.remove(0)),
        Err(e) => error_response(e),
    }
}

async fn simulate(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: String,
) -> Response {
    let cfg = match parse_body(&headers, &body) {
        Ok(c) => c,
        Err(e) => return field_errors(e.fields()),
    };
    // Catch layout and model errors now rather than inside the job.
    let check = cfg.clone();
    if let Err(e) = blocking(move || Scenario::from_config(&check).map(|_| ())).await {
        return error_response(e.into());
    }
    if state.pending.fetch_add(1, Ordering::SeqCst) >= state.queue_limit {
        state.pending.fetch_sub(1, Ordering::SeqCst);
        return (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(json!({ "error": "job queue is full" })),
        )
            .into_response();
    }
    let id = state.next_job.fetch_add(1, Ordering::SeqCst);
    state.jobs.lock().unwrap().insert(
        id,
        Job {
            status: JobStatus::Queued,
            result: None,
            error: None,
        },
    );
    let st = state.clone();
    tokio::spawn(async move {
        let _permit = st
            .permits
            .acquire()
            .await
            .expect("semaphore is never closed");
        set_job(&st, id, |j| j.status = JobStatus::Running);
        let outcome = blocking(move || ops::run_simulate(&cfg)).await;
        set_job(&st, id, |j| match outcome {
            Ok(doc) => {
                j.status = JobStatus::Done;
                j.result = Some(doc.to_json());
            }
            Err(e) => {
                j.status = JobStatus::Failed;
                j.error = Some(e.to_string());
            }
        });
        st.pending.fetch_sub(1, Ordering::SeqCst);
    });
    (
        StatusCode::ACCEPTED,
        Json(json!({ "job_id": id, "status": JobStatus::Queued })),
    )
        .into_response()
}

fn set_job(state: &AppState, id: u64, f: impl FnOnce(&mut Job)) {
    if let Some(j) = state.jobs.lock().unwrap().get_mut(&id) {
        f(j);
    }
}

fn not_found(what: &str) -> Response {
    (
        StatusCode::NOT_FOUND,
        Json(json!({ "error": format!("unknown {what}") })),
    )
        .into_response()
}

async fn job(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> Response {
    let Some(j) = state.jobs.lock().unwrap().get(&id).cloned() else {
        return not_found("job");
    };
    let result: Option<serde_json::Value> = j
        .result
        .as_deref()
        .map(|r| serde_json::from_str(r).expect("stored result is JSON"));
    Json(json!({ "job_id": id, "status": j.status, "result": result, "error": j.error }))
        .into_response()
}

/// The finished document exactly as the CLI would write it.
async fn job_result(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> Response {
    let Some(j) = state.jobs.lock().unwrap().get(&id).cloned() else {
        return not_found("job");
    };
    match (j.status, j.result, j.error) {
        (JobStatus::Done, Some(r), _) => json_text(StatusCode::OK, r),
        (JobStatus::Failed, _, e) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(json!({ "error": e })),
        )
            .into_response(),
        (status, _, _) => (
            StatusCode::CONFLICT,
            Json(json!({ "error": "job not finished", "status": status })),
        )
            .into_response(),
    }
}

async fn list_scenarios(State(state): State<Arc<AppState>>) -> Response {
    let store = state.scenarios.read().unwrap();
    let list: Vec<_> = store
        .iter()
        .map(|(id, s)| json!({ "id": id, "scenario": s }))
        .collect();
    Json(json!({ "scenarios": list })).into_response()
}

async fn get_scenario(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.scenarios.read().unwrap().get(&id) {
        Some(s) => Json(s.clone()).into_response(),
        None => not_found("scenario"),
    }
}

async fn put_scenario(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: String,
) -> Response {
    let cfg = match parse_body(&headers, &body) {
        Ok(c) => c,
        Err(e) => return field_errors(e.fields()),
    };
    let created = state
        .scenarios
        .write()
        .unwrap()
        .insert(id.clone(), cfg)
        .is_none();
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    (status, Json(json!({ "id": id }))).into_response()
}

pub async fn serve(addr: &str, opts: ServiceOptions) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(opts)).await
}
