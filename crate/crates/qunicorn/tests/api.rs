// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use qunicorn::api::{router, AppState, Service};
use qunicorn::catalog::default_catalog;
use qunicorn::clock::SystemClock;
use qunicorn::config::Config;
use qunicorn::orchestrator::{Orchestrator, OrchestratorConfig};
use qunicorn::provider::{MockOptions, ProviderRegistry};
use qunicorn::store::Store;
use qunicorn_core::formats::emit;
use qunicorn_core::job::JobState;
use qunicorn_core::{Circuit, CircuitFormat};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(time_scale: f64) -> Router {
    let opts = MockOptions { time_scale, ..Default::default() };
    let registry = ProviderRegistry::from_catalog(&default_catalog(), Arc::new(SystemClock), &opts);
    let config = OrchestratorConfig { worker_count: 2, poll_interval: Duration::from_millis(2) };
    let orch =
        Orchestrator::start(Arc::new(Store::in_memory().unwrap()), registry, Arc::new(SystemClock), config).unwrap();
    router(AppState { orchestrator: Arc::new(orch) })
}

fn bell_doc(format: CircuitFormat) -> Value {
    let mut c = Circuit::new(2, 2);
    c.h(0).cx(0, 1).measure_all();
    serde_json::to_value(emit(&c, format)).unwrap()
}

fn bell_job(target: &str) -> Value {
    json!({ "circuits": [bell_doc(CircuitFormat::Qjson)], "target": target, "shots": 500, "seed": 5 })
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: Method, uri: &str, body: Option<&Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body.map(|v| v.to_string())).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn submit(app: &Router, body: &Value) -> String {
    let (s, v) = json_call(app, Method::POST, "/api/v1/jobs", Some(body)).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    v["job_id"].as_str().unwrap().to_string()
}

/// Polls until terminal, returning every distinct state observed.
async fn watch(app: &Router, id: &str) -> (Vec<JobState>, Value) {
    let mut seen: Vec<JobState> = Vec::new();
    for _ in 0..5000 {
        let (s, v) = json_call(app, Method::GET, &format!("/api/v1/jobs/{id}"), None).await;
        assert_eq!(s, StatusCode::OK);
        let state: JobState = serde_json::from_value(v["state"].clone()).unwrap();
        if seen.last() != Some(&state) {
            seen.push(state);
        }
        if state.is_terminal() {
            return (seen, v);
        }
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
    panic!("job {id} did not finish");
}

fn assert_error(status: StatusCode, body: &Value, want_status: StatusCode, code: &str) {
    assert_eq!(status, want_status, "{body}");
    assert_eq!(body["error_code"], code, "{body}");
    assert!(body["message"].as_str().is_some_and(|m| !m.is_empty()));
}

#[tokio::test(flavor = "multi_thread")]
async fn bell_job_lifecycle_is_monotone() {
    let app = app(0.001);
    let id = submit(&app, &bell_job("ibmq-line-5")).await;
    let (seen, job) = watch(&app, &id).await;
    assert_eq!(*seen.last().unwrap(), JobState::Finished);
    let order = |s: &JobState| JobState::ALL.iter().position(|x| x == s).unwrap();
    assert!(seen.windows(2).all(|w| order(&w[0]) < order(&w[1])), "{seen:?}");
    let history: Vec<String> =
        job["history"].as_array().unwrap().iter().map(|t| t["state"].as_str().unwrap().to_string()).collect();
    assert_eq!(history, ["RECEIVED", "QUEUED", "PREPARING", "SUBMITTED", "RUNNING", "POSTPROCESSING", "FINISHED"]);
    // RFC 3339 timestamps.
    chrono::DateTime::parse_from_rfc3339(job["created_at"].as_str().unwrap()).unwrap();
    assert_eq!(job["items"][0]["translated_doc"]["format"], "qasm2");

    let (s, results) = json_call(&app, Method::GET, &format!("/api/v1/jobs/{id}/results"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(results["job_id"], id.as_str());
    assert_eq!(results["results"][0]["counts"]["shots"], 500);

    // Idempotent reads.
    let a = call(&app, Method::GET, &format!("/api/v1/jobs/{id}"), None).await;
    let b = call(&app, Method::GET, &format!("/api/v1/jobs/{id}"), None).await;
    assert_eq!(a, b);

    let (s, v) = json_call(&app, Method::POST, &format!("/api/v1/jobs/{id}/cancel"), None).await;
    assert_error(s, &v, StatusCode::CONFLICT, "illegal_transition");
}

#[tokio::test(flavor = "multi_thread")]
async fn unfinished_results_conflict_and_cancel_succeeds() {
    let app = app(1.0);
    let id = submit(&app, &bell_job("ibmq-heavyhex-7")).await;
    let (s, v) = json_call(&app, Method::GET, &format!("/api/v1/jobs/{id}/results"), None).await;
    assert_error(s, &v, StatusCode::CONFLICT, "not_finished");
    // Wait for the provider handle so the cancel goes through the provider.
    for _ in 0..2000 {
        let (_, v) = json_call(&app, Method::GET, &format!("/api/v1/jobs/{id}"), None).await;
        if v["state"] == "SUBMITTED" {
            assert!(v["items"][0]["queue_position"].as_u64().unwrap() >= 1);
            break;
        }
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
    let (s, v) = json_call(&app, Method::POST, &format!("/api/v1/jobs/{id}/cancel"), None).await;
    assert_eq!((s, v), (StatusCode::OK, json!({ "cancelled": true })));
    let (s, v) = json_call(&app, Method::POST, &format!("/api/v1/jobs/{id}/cancel"), None).await;
    assert_eq!((s, v), (StatusCode::OK, json!({ "cancelled": false })));
    let (_, v) = json_call(&app, Method::GET, &format!("/api/v1/jobs/{id}"), None).await;
    assert_eq!(v["state"], "CANCELLED");
}

#[tokio::test(flavor = "multi_thread")]
async fn documented_error_paths() {
    let app = app(0.001);
    let missing = "00000000-0000-0000-0000-000000000000";
    for uri in
        [format!("/api/v1/jobs/{missing}"), format!("/api/v1/jobs/{missing}/results"), "/api/v1/jobs/not-a-uuid".into()]
    {
        let (s, v) = json_call(&app, Method::GET, &uri, None).await;
        assert_error(s, &v, StatusCode::NOT_FOUND, "unknown_job");
    }
    let (s, v) = json_call(&app, Method::POST, &format!("/api/v1/jobs/{missing}/cancel"), None).await;
    assert_error(s, &v, StatusCode::NOT_FOUND, "unknown_job");

    let (s, b) = call(&app, Method::POST, "/api/v1/jobs", Some("{not json".into())).await;
    assert_error(s, &serde_json::from_slice(&b).unwrap(), StatusCode::BAD_REQUEST, "malformed_body");
    let mut extra = bell_job("auto");
    extra["colour"] = json!("blue");
    let (s, v) = json_call(&app, Method::POST, "/api/v1/jobs", Some(&extra)).await;
    assert_error(s, &v, StatusCode::BAD_REQUEST, "malformed_body");
    let mut wrong = bell_job("auto");
    wrong["shots"] = json!("many");
    let (s, v) = json_call(&app, Method::POST, "/api/v1/jobs", Some(&wrong)).await;
    assert_error(s, &v, StatusCode::BAD_REQUEST, "malformed_body");
    assert_eq!(v["details"]["path"], "shots");

    let mut provider_locus = bell_job("inspire-star-5");
    provider_locus["options"] = json!({ "mitigation": { "enabled": true, "locus": "provider" } });
    let (s, v) = json_call(&app, Method::POST, "/api/v1/jobs", Some(&provider_locus)).await;
    assert_error(s, &v, StatusCode::UNPROCESSABLE_ENTITY, "unsupported_option");
    let mut zero = bell_job("auto");
    zero["shots"] = json!(0);
    let (s, v) = json_call(&app, Method::POST, "/api/v1/jobs", Some(&zero)).await;
    assert_error(s, &v, StatusCode::UNPROCESSABLE_ENTITY, "invalid_request");
    let (s, v) = json_call(&app, Method::POST, "/api/v1/jobs", Some(&bell_job("nowhere"))).await;
    assert_error(s, &v, StatusCode::UNPROCESSABLE_ENTITY, "unknown_device");

    let (s, v) = json_call(&app, Method::GET, "/api/v1/providers/nope/devices", None).await;
    assert_error(s, &v, StatusCode::NOT_FOUND, "unknown_provider");
    let (s, v) = json_call(&app, Method::GET, "/api/v1/devices/nope", None).await;
    assert_error(s, &v, StatusCode::NOT_FOUND, "unknown_device");
    let (s, v) = json_call(&app, Method::GET, "/api/v1/devices/nope/provenance", None).await;
    assert_error(s, &v, StatusCode::NOT_FOUND, "unknown_device");
    let (s, v) = json_call(&app, Method::GET, "/api/v1/jobs?state=SLEEPING", None).await;
    assert_error(s, &v, StatusCode::BAD_REQUEST, "invalid_query");
    let (s, v) = json_call(&app, Method::GET, "/api/v1/jobs?limit=ten", None).await;
    assert_error(s, &v, StatusCode::BAD_REQUEST, "invalid_query");
    let (s, v) = json_call(&app, Method::GET, "/api/v1/nothing", None).await;
    assert_error(s, &v, StatusCode::NOT_FOUND, "not_found");
}

#[tokio::test(flavor = "multi_thread")]
async fn offline_pinned_device_ends_in_error() {
    let app = app(0.001);
    let id = submit(&app, &bell_job("inspire-line-3")).await;
    let (_, job) = watch(&app, &id).await;
    assert_eq!(job["state"], "ERROR");
    assert!(job["error"].as_str().unwrap().contains("device offline"));
}

#[tokio::test(flavor = "multi_thread")]
async fn listing_filters_and_paginates() {
    let app = app(0.001);
    let mut ids = Vec::new();
    for target in ["auto", "inspire-line-3", "auto"] {
        let id = submit(&app, &bell_job(target)).await;
        watch(&app, &id).await;
        ids.push(id);
    }
    let (s, v) = json_call(&app, Method::GET, "/api/v1/jobs", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["total"], 3);
    let listed: Vec<&str> = v["jobs"].as_array().unwrap().iter().map(|j| j["id"].as_str().unwrap()).collect();
    assert_eq!(listed, [ids[2].as_str(), ids[1].as_str(), ids[0].as_str()]);
    let (_, v) = json_call(&app, Method::GET, "/api/v1/jobs?state=finished&limit=1&offset=1", None).await;
    assert_eq!(v["total"], 2);
    assert_eq!(v["jobs"][0]["id"], ids[0].as_str());
}

#[tokio::test(flavor = "multi_thread")]
async fn catalog_routes_and_estimate() {
    let app = app(0.001);
    let (s, v) = json_call(&app, Method::GET, "/api/v1/providers", None).await;
    assert_eq!(s, StatusCode::OK);
    let providers = v.as_array().unwrap();
    assert_eq!(providers.len(), 8);
    let azure = providers.iter().find(|p| p["id"] == "azure-quantum").unwrap();
    let kinds: Vec<&str> = azure["pricing"].as_array().unwrap().iter().map(|m| m["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["TIME_BASED", "CIRCUIT_BASED", "SUBSCRIPTION"]);

    let (s, v) = json_call(&app, Method::GET, "/api/v1/providers/ibmq/devices", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v.as_array().unwrap().len(), 3);
    let (_, v) = json_call(&app, Method::GET, "/api/v1/devices/inspire-line-3", None).await;
    assert_eq!((v["provider_id"].as_str(), v["status"].as_str()), (Some("quantum-inspire"), Some("MAINTENANCE")));
    let (_, v) = json_call(&app, Method::GET, "/api/v1/devices", None).await;
    assert_eq!(v.as_array().unwrap().len(), 13);

    let four = json!({ "circuits": vec![bell_doc(CircuitFormat::Qjson); 4], "target": "ionq-aria-11", "shots": 100 });
    let (s, v) = json_call(&app, Method::POST, "/api/v1/estimate", Some(&four)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["amount"], 1.2);
    assert_eq!(v["circuits_executed"], 4);
    // Nothing was submitted.
    let (_, v) = json_call(&app, Method::GET, "/api/v1/jobs", None).await;
    assert_eq!(v["total"], 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn openapi_document_covers_every_route() {
    let app = app(0.001);
    let (s, v) = json_call(&app, Method::GET, "/api/v1/openapi.json", None).await;
    assert_eq!(s, StatusCode::OK);
    let paths: Vec<&str> = v["paths"].as_object().unwrap().keys().map(String::as_str).collect();
    for route in [
        "/jobs",
        "/jobs/{id}",
        "/jobs/{id}/results",
        "/jobs/{id}/cancel",
        "/providers",
        "/providers/{id}/devices",
        "/devices",
        "/devices/{id}",
        "/devices/{id}/provenance",
        "/estimate",
        "/openapi.json",
    ] {
        assert!(paths.contains(&route), "{route} missing");
    }
    assert_eq!(paths.len(), 11);
    // every referenced schema exists
    let text = v.to_string();
    for r in text.split("#/components/schemas/").skip(1) {
        let name = &r[..r.find('"').unwrap()];
        assert!(v["components"]["schemas"].get(name).is_some(), "{name}");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn service_collects_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config {
        persistence_path: dir.path().join("q.redb"),
        provenance_interval_s: 0.02,
        time_scale: 0.001,
        ..Config::default()
    };
    let service = Service::start(&config).unwrap();
    let app = service.router();
    tokio::time::sleep(Duration::from_millis(150)).await;
    let (s, v) = json_call(&app, Method::GET, "/api/v1/devices/ibmq-line-5/provenance", None).await;
    assert_eq!(s, StatusCode::OK);
    let snaps = v.as_array().unwrap().clone();
    assert!(snaps.len() >= 2, "{v}");
    let t: Vec<&str> = snaps.iter().map(|s| s["taken_at"].as_str().unwrap()).collect();
    let uri = format!("/api/v1/devices/ibmq-line-5/provenance?from={}&to={}", t[1], t[1]);
    let (s, v) = json_call(&app, Method::GET, &uri.replace('+', "%2B"), None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v.as_array().unwrap(), &[snaps[1].clone()]);
    service.shutdown();
}
