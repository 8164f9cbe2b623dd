// SPDX-License-Identifier: Apache-2.0

//! Blocking HTTP client for the REST API.

use std::time::Duration;

use qunicorn_core::catalog::{Device, ProviderDescriptor};
use serde::de::DeserializeOwned;
use serde::Serialize;
use uuid::Uuid;

use crate::api::{ApiError, DeviceView, JobList, ResultsResponse, SubmitResponse, API_PREFIX};
use crate::orchestrator::model::{CancelOutcome, Job, JobRequest};
use crate::orchestrator::EstimateReport;

pub const URL_ENV: &str = "QUNICORN_URL";
pub const DEFAULT_URL: &str = "http://127.0.0.1:8080";

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach {url}: {message}")]
    Connection { url: String, message: String },
    #[error("{}", .0.message)]
    Api(ApiError),
    #[error("unexpected response: {0}")]
    Decode(String),
}

pub struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    pub fn new(endpoint: &str) -> Client {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Client { base: endpoint.trim_end_matches('/').to_string(), agent }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{API_PREFIX}{path}", self.base)
    }

    fn finish<T: DeserializeOwned>(
        &self,
        url: &str,
        resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<T, ClientError> {
        let mut resp = resp.map_err(|e| ClientError::Connection { url: url.to_string(), message: e.to_string() })?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| ClientError::Decode(e.to_string()))?;
        if status >= 400 {
            let mut err: ApiError = serde_json::from_str(&text).unwrap_or_else(|_| ApiError {
                status,
                error_code: "http_error".into(),
                message: format!("HTTP {status}: {text}"),
                details: None,
            });
            err.status = status;
            return Err(ClientError::Api(err));
        }
        serde_json::from_str(&text).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let url = self.url(path);
        self.finish(&url, self.agent.get(&url).call())
    }

    fn post<T: DeserializeOwned, B: Serialize>(&self, path: &str, body: Option<&B>) -> Result<T, ClientError> {
        let url = self.url(path);
        let req = self.agent.post(&url);
        let resp = match body {
            Some(b) => req.send_json(b),
            None => req.send_empty(),
        };
        self.finish(&url, resp)
    }

    pub fn submit(&self, request: &JobRequest) -> Result<Uuid, ClientError> {
        self.post::<SubmitResponse, _>("/jobs", Some(request)).map(|r| r.job_id)
    }

    pub fn job(&self, id: &str) -> Result<Job, ClientError> {
        self.get(&format!("/jobs/{id}"))
    }

    pub fn list(&self, state: Option<&str>, limit: usize, offset: usize) -> Result<JobList, ClientError> {
        let mut q = format!("/jobs?limit={limit}&offset={offset}");
        if let Some(s) = state {
            q.push_str(&format!("&state={s}"));
        }
        self.get(&q)
    }

    pub fn results(&self, id: &str) -> Result<ResultsResponse, ClientError> {
        self.get(&format!("/jobs/{id}/results"))
    }

    pub fn cancel(&self, id: &str) -> Result<CancelOutcome, ClientError> {
        self.post::<_, ()>(&format!("/jobs/{id}/cancel"), None)
    }

    pub fn providers(&self) -> Result<Vec<ProviderDescriptor>, ClientError> {
        self.get("/providers")
    }

    pub fn provider_devices(&self, id: &str) -> Result<Vec<Device>, ClientError> {
        self.get(&format!("/providers/{id}/devices"))
    }

    pub fn devices(&self) -> Result<Vec<DeviceView>, ClientError> {
        self.get("/devices")
    }

    pub fn estimate(&self, request: &JobRequest) -> Result<EstimateReport, ClientError> {
        self.post("/estimate", Some(request))
    }

    /// Polls until the job is terminal, calling `on_poll` after every poll.
    /// Delays start at 0.2 s and grow by 1.5x up to 5 s.
    pub fn wait_for(&self, id: &str, mut on_poll: impl FnMut(&Job)) -> Result<Job, ClientError> {
        let mut delay = 0.2f64;
        loop {
            let job = self.job(id)?;
            on_poll(&job);
            if job.state.is_terminal() {
                return Ok(job);
            }
            std::thread::sleep(Duration::from_secs_f64(delay));
            delay = (delay * 1.5).min(5.0);
        }
    }
}
