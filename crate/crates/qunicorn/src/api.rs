// SPDX-License-Identifier: Apache-2.0

//! REST interface under `/api/v1`.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use qunicorn_core::catalog::{Device, ProviderDescriptor};
use qunicorn_core::job::JobState;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use uuid::Uuid;

use crate::catalog::{default_catalog, load_catalog};
use crate::clock::{Clock, SystemClock};
use crate::config::Config;
use crate::orchestrator::model::{ItemResult, JobRequest, JobSummary};
use crate::orchestrator::plan::PlanError;
use crate::orchestrator::{Orchestrator, OrchestratorConfig, OrchestratorError};
use crate::provenance::{history, CollectorHandle, DeviceSnapshot, ProvenanceCollector};
use crate::provider::{local_simulator_descriptor, MockOptions, MockProvider, ProviderRegistry};
use crate::store::Store;

pub const API_PREFIX: &str = "/api/v1";
pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 500;

/// Machine-readable description of the routes below.
pub const OPENAPI: &str = include_str!("../data/openapi.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error_code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status: status.as_u16(), error_code: code.into(), message: message.into(), details: None }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = Some(details);
        self
    }

    fn internal(message: impl std::fmt::Display) -> Self {
        tracing::error!(%message, "internal error");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<PlanError> for ApiError {
    fn from(e: PlanError) -> Self {
        let details = match &e {
            PlanError::Parse { index, .. } | PlanError::InvalidCircuit { index, .. } | PlanError::Cut { index, .. } => {
                Some(json!({ "circuit": index }))
            }
            PlanError::NoSuitableDevice { width } => Some(json!({ "width": width })),
            _ => None,
        };
        let err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string());
        match details {
            Some(d) => err.with_details(d),
            None => err,
        }
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        match e {
            OrchestratorError::UnknownJob(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_job", format!("unknown job {id}"))
            }
            OrchestratorError::NotFinished { state, .. } => {
                ApiError::new(StatusCode::CONFLICT, "not_finished", e.to_string())
                    .with_details(json!({ "state": state }))
            }
            OrchestratorError::IllegalTransition(t) => {
                ApiError::new(StatusCode::CONFLICT, "illegal_transition", t.to_string())
                    .with_details(json!({ "from": t.from, "to": t.to }))
            }
            OrchestratorError::Invalid(p) => p.into(),
            OrchestratorError::Store(s) => ApiError::internal(s),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
pub struct AppState {
    pub orchestrator: Arc<Orchestrator>,
}

/// Runs blocking orchestrator work off the async executor.
async fn blocking<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&Orchestrator) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let orch = state.orchestrator.clone();
    tokio::task::spawn_blocking(move || f(&orch)).await.map_err(ApiError::internal)?
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.inner().to_string())
            .with_details(json!({ "path": path }))
    })
}

fn job_id(raw: &str) -> ApiResult<Uuid> {
    Uuid::parse_str(raw).map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "unknown_job", format!("unknown job {raw}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub job_id: Uuid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobList {
    pub jobs: Vec<JobSummary>,
    pub total: usize,
    pub limit: usize,
    pub offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsResponse {
    pub job_id: Uuid,
    pub results: Vec<ItemResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceView {
    pub provider_id: String,
    #[serde(flatten)]
    pub device: Device,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ListQuery {
    state: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeQuery {
    from: Option<DateTime<Utc>>,
    to: Option<DateTime<Utc>>,
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.body_text()))
}

async fn submit_job(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<SubmitResponse>)> {
    let req: JobRequest = parse_body(&body)?;
    let job_id = blocking(&state, move |o| Ok(o.submit(req)?)).await?;
    Ok((StatusCode::ACCEPTED, Json(SubmitResponse { job_id })))
}

async fn list_jobs(
    State(state): State<AppState>,
    q: Result<Query<ListQuery>, QueryRejection>,
) -> ApiResult<Json<JobList>> {
    let q = query(q)?;
    let filter = match q.state.as_deref() {
        None => None,
        Some(s) => Some(
            JobState::from_name(s)
                .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", format!("unknown state {s}")))?,
        ),
    };
    let limit = q.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
    let offset = q.offset.unwrap_or(0);
    let (jobs, total) = blocking(&state, move |o| Ok(o.list(filter, limit, offset)?)).await?;
    Ok(Json(JobList { jobs, total, limit, offset }))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = job_id(&id)?;
    let job = blocking(&state, move |o| Ok(o.job(id)?)).await?;
    Ok(Json(job).into_response())
}

async fn get_results(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ResultsResponse>> {
    let job_id = job_id(&id)?;
    let results = blocking(&state, move |o| Ok(o.results(job_id)?)).await?;
    Ok(Json(ResultsResponse { job_id, results }))
}

async fn cancel_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = job_id(&id)?;
    let outcome = blocking(&state, move |o| Ok(o.cancel(id)?)).await?;
    Ok(Json(outcome).into_response())
}

async fn providers(State(state): State<AppState>) -> ApiResult<Json<Vec<ProviderDescriptor>>> {
    blocking(&state, |o| Ok(o.live_catalog().providers)).await.map(Json)
}

async fn provider_devices(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<Device>>> {
    blocking(&state, move |o| {
        o.live_catalog()
            .providers
            .into_iter()
            .find(|p| p.id == id)
            .map(|p| p.devices)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_provider", format!("unknown provider {id}")))
    })
    .await
    .map(Json)
}

fn unknown_device(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "unknown_device", format!("unknown device {id}"))
}

async fn devices(State(state): State<AppState>) -> ApiResult<Json<Vec<DeviceView>>> {
    blocking(&state, |o| {
        Ok(o.live_catalog()
            .devices()
            .map(|(p, d)| DeviceView { provider_id: p.id.clone(), device: d.clone() })
            .collect())
    })
    .await
    .map(Json)
}

async fn device(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DeviceView>> {
    blocking(&state, move |o| {
        let catalog = o.live_catalog();
        let (p, d) = catalog.device(&id).ok_or_else(|| unknown_device(&id))?;
        Ok(DeviceView { provider_id: p.id.clone(), device: d.clone() })
    })
    .await
    .map(Json)
}

async fn openapi() -> Response {
    ([(axum::http::header::CONTENT_TYPE, "application/json")], OPENAPI).into_response()
}

async fn provenance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<RangeQuery>, QueryRejection>,
) -> ApiResult<Json<Vec<DeviceSnapshot>>> {
    let q = query(q)?;
    blocking(&state, move |o| {
        if o.registry().for_device(&id).is_none() {
            return Err(unknown_device(&id));
        }
        history(o.store(), &id, q.from, q.to).map_err(ApiError::internal)
    })
    .await
    .map(Json)
}

async fn estimate(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: JobRequest = parse_body(&body)?;
    let report = blocking(&state, move |o| Ok(o.estimate(&req)?)).await?;
    Ok(Json(report).into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/jobs", post(submit_job).get(list_jobs))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/results", get(get_results))
        .route("/jobs/{id}/cancel", post(cancel_job))
        .route("/providers", get(providers))
        .route("/providers/{id}/devices", get(provider_devices))
        .route("/devices", get(devices))
        .route("/devices/{id}", get(device))
        .route("/devices/{id}/provenance", get(provenance))
        .route("/estimate", post(estimate))
        .route("/openapi.json", get(openapi));
    Router::new().nest(API_PREFIX, api).fallback(not_found).with_state(state)
}

/// Everything a running service owns.
pub struct Service {
    pub orchestrator: Arc<Orchestrator>,
    collector: CollectorHandle,
}

impl Service {
    pub fn start(config: &Config) -> Result<Service, String> {
        config.validate().map_err(|e| e.to_string())?;
        let catalog = match &config.catalog_path {
            Some(p) => load_catalog(p).map_err(|e| e.to_string())?,
            None => default_catalog(),
        };
        let clock: Arc<dyn Clock> = Arc::new(SystemClock);
        let opts = MockOptions {
            time_scale: config.time_scale,
            failure_rate: config.failure_rate,
            seed: config.seed,
            background_jobs: true,
        };
        let mut registry = ProviderRegistry::from_catalog(&catalog, clock.clone(), &opts);
        if config.enable_local_simulator {
            registry.insert(Arc::new(MockProvider::new(local_simulator_descriptor(), clock.clone(), opts)));
        }
        let store = Arc::new(Store::open(&config.persistence_path).map_err(|e| e.to_string())?);
        let orch_config = OrchestratorConfig {
            worker_count: config.worker_count,
            poll_interval: Duration::from_millis(config.poll_interval_ms.max(1)),
        };
        let orchestrator = Arc::new(
            Orchestrator::start(store.clone(), registry.clone(), clock.clone(), orch_config)
                .map_err(|e| e.to_string())?,
        );
        let collector = ProvenanceCollector::new(store, registry, clock, config.seed)
            .spawn(Duration::from_secs_f64(config.provenance_interval_s));
        Ok(Service { orchestrator, collector })
    }

    pub fn router(&self) -> Router {
        router(AppState { orchestrator: self.orchestrator.clone() })
    }

    pub fn shutdown(mut self) {
        self.collector.stop();
        self.orchestrator.shutdown();
    }
}
