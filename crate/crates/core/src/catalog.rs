// SPDX-License-Identifier: Apache-2.0

//! Provider catalog model: offerings, their feature flags, and devices.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::formats::CircuitFormat;
use crate::simulator::NoiseSpec;
use crate::transpiler::{BasisGateSet, CouplingMap};

pub const CATALOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessModels {
    pub queue: bool,
    pub prioritized_queue: bool,
    pub exclusive_slots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PricingKind {
    TimeBased,
    CircuitBased,
    Subscription,
    Free,
}

impl PricingKind {
    pub fn name(self) -> &'static str {
        match self {
            PricingKind::TimeBased => "TIME_BASED",
            PricingKind::CircuitBased => "CIRCUIT_BASED",
            PricingKind::Subscription => "SUBSCRIPTION",
            PricingKind::Free => "FREE",
        }
    }
}

impl fmt::Display for PricingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rate is per second (time), per circuit, or per month (subscription).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingModel {
    pub kind: PricingKind,
    pub rate: f64,
}

/// Offering features that are recorded for completeness but not emulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Features {
    pub circuit_cutting: bool,
    pub error_correction: bool,
    pub hybrid_runtime: bool,
    pub composer: bool,
    pub online_editor: bool,
    pub trial_access: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DeviceStatus {
    #[default]
    Online,
    Maintenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Device {
    pub id: String,
    pub num_qubits: usize,
    pub coupling: CouplingMap,
    pub basis: BasisGateSet,
    pub readout_errors: NoiseSpec,
    pub gate_error_1q: f64,
    pub gate_error_2q: f64,
    pub avg_exec_seconds_per_circuit: f64,
    pub queue_length: usize,
    pub status: DeviceStatus,
}

impl Device {
    pub fn is_online(&self) -> bool {
        self.status == DeviceStatus::Online
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderDescriptor {
    pub id: String,
    pub display_name: String,
    pub accepted_formats: Vec<CircuitFormat>,
    pub access_models: AccessModels,
    pub native_batch: bool,
    pub native_mitigation: bool,
    pub pricing: Vec<PricingModel>,
    pub features: Features,
    pub devices: Vec<Device>,
}

impl ProviderDescriptor {
    pub fn accepts(&self, format: CircuitFormat) -> bool {
        self.accepted_formats.contains(&format)
    }

    pub fn device(&self, id: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn pricing_for(&self, kind: PricingKind) -> Option<&PricingModel> {
        self.pricing.iter().find(|p| p.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub providers: Vec<ProviderDescriptor>,
}

/// A catalog problem located by a JSON path such as `$.providers[2].devices[0].num_qubits`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct CatalogIssue {
    pub path: String,
    pub message: String,
}

fn issue(path: String, message: impl Into<String>) -> CatalogIssue {
    CatalogIssue { path, message: message.into() }
}

fn check_probability(issues: &mut Vec<CatalogIssue>, path: String, p: f64) {
    if !(0.0..0.5).contains(&p) {
        issues.push(issue(path, format!("probability {p} outside [0, 0.5)")));
    }
}

impl Catalog {
    pub fn provider(&self, id: &str) -> Option<&ProviderDescriptor> {
        self.providers.iter().find(|p| p.id == id)
    }

    /// Finds a device by id across all providers.
    pub fn device(&self, id: &str) -> Option<(&ProviderDescriptor, &Device)> {
        self.providers.iter().find_map(|p| p.device(id).map(|d| (p, d)))
    }

    pub fn devices(&self) -> impl Iterator<Item = (&ProviderDescriptor, &Device)> {
        self.providers.iter().flat_map(|p| p.devices.iter().map(move |d| (p, d)))
    }

    /// Semantic checks that the JSON shape alone cannot express.
    pub fn validate(&self) -> Vec<CatalogIssue> {
        let mut issues = Vec::new();
        if self.schema_version != CATALOG_SCHEMA_VERSION {
            issues
                .push(issue("$.schema_version".into(), format!("unsupported schema version {}", self.schema_version)));
        }
        let mut device_ids: Vec<&str> = Vec::new();
        for (i, p) in self.providers.iter().enumerate() {
            let at = |field: &str| format!("$.providers[{i}].{field}");
            if p.id.is_empty() {
                issues.push(issue(at("id"), "must not be empty"));
            }
            if self.providers[..i].iter().any(|o| o.id == p.id) {
                issues.push(issue(at("id"), format!("duplicate provider id {:?}", p.id)));
            }
            if p.accepted_formats.is_empty() {
                issues.push(issue(at("accepted_formats"), "must name at least one format"));
            }
            if !p.access_models.queue {
                issues.push(issue(at("access_models.queue"), "every offering supports a queue"));
            }
            if p.pricing.is_empty() {
                issues.push(issue(at("pricing"), "must list at least one pricing model"));
            }
            for (k, m) in p.pricing.iter().enumerate() {
                let free = m.kind == PricingKind::Free;
                if !(m.rate.is_finite() && if free { m.rate == 0.0 } else { m.rate > 0.0 }) {
                    issues.push(issue(
                        at(&format!("pricing[{k}].rate")),
                        if free { "FREE pricing has rate 0" } else { "rate must be positive" },
                    ));
                }
                if p.pricing[..k].iter().any(|o| o.kind == m.kind) {
                    issues.push(issue(at(&format!("pricing[{k}].kind")), format!("duplicate pricing kind {}", m.kind)));
                }
            }
            if p.pricing.len() > 1 && p.pricing_for(PricingKind::Free).is_some() {
                issues.push(issue(at("pricing"), "FREE cannot be combined with other pricing models"));
            }
            for (j, d) in p.devices.iter().enumerate() {
                let dat = |field: &str| format!("$.providers[{i}].devices[{j}].{field}");
                if device_ids.contains(&d.id.as_str()) {
                    issues.push(issue(dat("id"), format!("duplicate device id {:?}", d.id)));
                }
                device_ids.push(&d.id);
                if d.num_qubits == 0 {
                    issues.push(issue(dat("num_qubits"), "must be positive"));
                }
                if d.coupling.num_qubits() != d.num_qubits {
                    issues.push(issue(dat("coupling.num_qubits"), "must equal the device's num_qubits"));
                }
                if d.readout_errors.readout.len() != d.num_qubits {
                    issues.push(issue(dat("readout_errors"), "needs one entry per qubit"));
                }
                for (q, e) in d.readout_errors.readout.iter().enumerate() {
                    check_probability(&mut issues, dat(&format!("readout_errors[{q}].e0")), e.e0);
                    check_probability(&mut issues, dat(&format!("readout_errors[{q}].e1")), e.e1);
                }
                check_probability(&mut issues, dat("gate_error_1q"), d.gate_error_1q);
                check_probability(&mut issues, dat("gate_error_2q"), d.gate_error_2q);
                if !(d.avg_exec_seconds_per_circuit.is_finite() && d.avg_exec_seconds_per_circuit > 0.0) {
                    issues.push(issue(dat("avg_exec_seconds_per_circuit"), "must be positive"));
                }
            }
        }
        issues
    }
}
