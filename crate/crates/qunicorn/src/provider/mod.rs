// SPDX-License-Identifier: Apache-2.0

//! Provider connectors. Every offering is reached through the same
//! five-operation [`Connector`] interface; the shipped connectors are
//! in-process mocks driven by the catalog.

mod mock;

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use qunicorn_core::catalog::{Catalog, DeviceStatus, ProviderDescriptor};
use qunicorn_core::mitigation::{MitigationMetadata, QuasiDistribution};
use qunicorn_core::{CircuitFormat, Counts, SourceDocument};
use serde::{Deserialize, Serialize};

pub use mock::{local_simulator_descriptor, MockOptions, MockProvider, LOCAL_SIMULATOR_ID};

use crate::clock::Clock;

/// Exclusive device window, in device seconds relative to submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservationWindow {
    /// Client that owns the slot.
    pub owner: String,
    #[serde(default)]
    pub start_offset_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubmitOptions {
    /// Sampling seed per document; documents without one use their index.
    pub seeds: Vec<u64>,
    pub priority: bool,
    pub reservation: Option<ReservationWindow>,
    /// Apply the provider's own readout mitigation.
    pub mitigate: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderJobHandle {
    pub provider_id: String,
    pub device_id: String,
    pub remote_id: String,
    pub submitted_at: DateTime<Utc>,
}

/// Outcome of one executed document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub counts: Counts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quasi: Option<QuasiDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigation: Option<MitigationMetadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PollStatus {
    Queued { position: usize },
    Running,
    Done { results: Vec<ExecutionResult> },
    Failed { reason: String },
    Cancelled,
}

impl PollStatus {
    pub fn is_terminal(&self) -> bool {
        matches!(self, PollStatus::Done { .. } | PollStatus::Failed { .. } | PollStatus::Cancelled)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("format {0} rejected")]
    FormatRejected(CircuitFormat),
    #[error("access model not supported: {0}")]
    AccessModelUnsupported(String),
    #[error("device {0} is offline")]
    DeviceOffline(String),
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("unknown job handle {0}")]
    UnknownHandle(String),
    #[error("invalid submission: {0}")]
    InvalidSubmission(String),
    #[error("reservation conflicts with an existing window of another client")]
    ReservationConflict,
}

impl ProviderError {
    pub fn code(&self) -> &'static str {
        match self {
            ProviderError::FormatRejected(_) => "format_rejected",
            ProviderError::AccessModelUnsupported(_) => "access_model_unsupported",
            ProviderError::DeviceOffline(_) => "device_offline",
            ProviderError::UnknownDevice(_) => "unknown_device",
            ProviderError::UnknownHandle(_) => "unknown_handle",
            ProviderError::InvalidSubmission(_) => "invalid_submission",
            ProviderError::ReservationConflict => "reservation_conflict",
        }
    }
}

/// Live view of a device as reported by its provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceLive {
    pub queue_length: usize,
    pub status: DeviceStatus,
}

pub trait Connector: Send + Sync {
    fn descriptor(&self) -> &ProviderDescriptor;

    fn device_live(&self, device_id: &str) -> Result<DeviceLive, ProviderError>;

    fn submit(
        &self,
        device_id: &str,
        docs: &[SourceDocument],
        shots: u64,
        options: &SubmitOptions,
    ) -> Result<ProviderJobHandle, ProviderError>;

    fn poll(&self, handle: &ProviderJobHandle) -> Result<PollStatus, ProviderError>;

    /// True iff the job had not started running yet.
    fn cancel(&self, handle: &ProviderJobHandle) -> Result<bool, ProviderError>;
}

/// Connectors by provider id.
#[derive(Clone, Default)]
pub struct ProviderRegistry {
    connectors: BTreeMap<String, Arc<dyn Connector>>,
}

impl ProviderRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// One mock connector per catalog entry.
    pub fn from_catalog(catalog: &Catalog, clock: Arc<dyn Clock>, options: &MockOptions) -> Self {
        let mut reg = ProviderRegistry::new();
        for (i, p) in catalog.providers.iter().enumerate() {
            let opts = MockOptions { seed: options.seed.wrapping_add(i as u64 * 0x1000), ..options.clone() };
            reg.insert(Arc::new(MockProvider::new(p.clone(), clock.clone(), opts)));
        }
        reg
    }

    pub fn insert(&mut self, connector: Arc<dyn Connector>) {
        self.connectors.insert(connector.descriptor().id.clone(), connector);
    }

    pub fn get(&self, provider_id: &str) -> Option<&Arc<dyn Connector>> {
        self.connectors.get(provider_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Connector>> {
        self.connectors.values()
    }

    /// Descriptors in registration-independent (id) order.
    pub fn descriptors(&self) -> Vec<ProviderDescriptor> {
        self.connectors.values().map(|c| c.descriptor().clone()).collect()
    }

    /// The connector hosting `device_id`.
    pub fn for_device(&self, device_id: &str) -> Option<&Arc<dyn Connector>> {
        self.connectors.values().find(|c| c.descriptor().device(device_id).is_some())
    }

    /// A catalog whose device entries carry live queue lengths and status.
    pub fn live_catalog(&self) -> Catalog {
        let providers = self
            .connectors
            .values()
            .map(|c| {
                let mut d = c.descriptor().clone();
                for dev in &mut d.devices {
                    if let Ok(live) = c.device_live(&dev.id) {
                        dev.queue_length = live.queue_length;
                        dev.status = live.status;
                    }
                }
                d
            })
            .collect();
        Catalog { schema_version: qunicorn_core::catalog::CATALOG_SCHEMA_VERSION, notes: None, providers }
    }
}
