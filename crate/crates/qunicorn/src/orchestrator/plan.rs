// SPDX-License-Identifier: Apache-2.0

//! Turns a request into an execution plan: cut, pick devices, transpile,
//! group into provider submissions and price.

use std::collections::BTreeMap;

use qunicorn_core::catalog::{Catalog, Device, ProviderDescriptor};
use qunicorn_core::cutting::{
    find_cut, generate_subcircuits, group_observables, measure_in_basis, measured_subcircuits, CutError,
};
use qunicorn_core::formats::{emit, parse};
use qunicorn_core::mitigation::MitigationLocus;
use qunicorn_core::scheduling::{
    balance, estimate_cost, plan_batch, select_device, BalanceTarget, CostEstimate, SchedulingError,
};
use qunicorn_core::transpiler::{transpile, TranspileError};
use qunicorn_core::{Circuit, FormatError};

use super::model::{
    BatchInfo, BatchMode, ExecutionPlan, ItemPlan, JobItem, JobOptions, JobRequest, Lane, LaneInfo, ObservableGroup,
    Submission, SubmissionStatus, Task,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("circuit {index}: {source}")]
    Parse { index: usize, source: FormatError },
    #[error("circuit {index}: {reason}")]
    InvalidCircuit { index: usize, reason: String },
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("device offline: {0}")]
    DeviceOffline(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("no suitable device: no online device with {width} or more qubits supports the request")]
    NoSuitableDevice { width: usize },
    #[error("circuit {index}: {source}")]
    Cut { index: usize, source: CutError },
    #[error(transparent)]
    Transpile(#[from] TranspileError),
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::Invalid(_) => "invalid_request",
            PlanError::Parse { .. } | PlanError::InvalidCircuit { .. } => "invalid_circuit",
            PlanError::UnknownDevice(_) => "unknown_device",
            PlanError::DeviceOffline(_) => "device_offline",
            PlanError::Unsupported(_) => "unsupported_option",
            PlanError::NoSuitableDevice { .. } => "no_suitable_device",
            PlanError::Cut { .. } => "cutting_failed",
            PlanError::Transpile(_) => "transpile_failed",
        }
    }

    /// Pipeline stage that reports this error.
    pub fn stage(&self) -> &'static str {
        match self {
            PlanError::Invalid(_) | PlanError::Parse { .. } | PlanError::InvalidCircuit { .. } => "validate",
            _ => "prepare",
        }
    }
}

/// Whether the provider can honour the job's access and mitigation options.
pub fn supports(provider: &ProviderDescriptor, options: &JobOptions) -> Result<(), PlanError> {
    let id = &provider.id;
    if options.priority && !provider.access_models.prioritized_queue {
        return Err(PlanError::Unsupported(format!("provider {id} has no prioritized queue")));
    }
    if options.reservation.is_some() && !provider.access_models.exclusive_slots {
        return Err(PlanError::Unsupported(format!("provider {id} offers no exclusive slots")));
    }
    if options.mitigation.enabled
        && options.mitigation.locus == MitigationLocus::Provider
        && !provider.native_mitigation
    {
        return Err(PlanError::Unsupported(format!("provider {id} offers no native error mitigation")));
    }
    Ok(())
}

/// Checks that need no circuit parsing; run synchronously on submission.
pub fn validate_request(req: &JobRequest, catalog: &Catalog) -> Result<(), PlanError> {
    let invalid = |m: &str| Err(PlanError::Invalid(m.to_string()));
    if req.circuits.is_empty() {
        return invalid("at least one circuit is required");
    }
    if req.shots == 0 {
        return invalid("shots must be at least 1");
    }
    let cutting = &req.options.cutting;
    if cutting.enabled {
        if cutting.max_width == 0 {
            return invalid("cutting.max_width must be at least 1");
        }
        if cutting.observables.is_empty() {
            return invalid("cutting requires at least one observable");
        }
    }
    if let Some(w) = &req.options.reservation {
        if !(w.duration_s.is_finite() && w.duration_s > 0.0 && w.start_offset_s.is_finite() && w.start_offset_s >= 0.0)
        {
            return invalid("reservation needs a positive duration and a nonnegative start offset");
        }
        if w.owner.is_empty() {
            return invalid("reservation owner must not be empty");
        }
    }
    if !req.is_auto() {
        let (provider, _) = catalog.device(&req.target).ok_or_else(|| PlanError::UnknownDevice(req.target.clone()))?;
        supports(provider, &req.options)?;
    } else if !catalog.providers.iter().any(|p| supports(p, &req.options).is_ok()) {
        return Err(PlanError::Unsupported("no provider supports the requested options".into()));
    }
    Ok(())
}

pub struct PlannedJob {
    pub plan: ExecutionPlan,
    pub items: Vec<JobItem>,
    pub batch: BatchInfo,
    pub cost: CostEstimate,
}

/// A circuit to run, before device assignment.
struct Draft {
    item: usize,
    circuit: Circuit,
}

fn parse_all(req: &JobRequest) -> Result<Vec<Circuit>, PlanError> {
    req.circuits
        .iter()
        .enumerate()
        .map(|(index, doc)| parse(doc).map_err(|source| PlanError::Parse { index, source }))
        .collect()
}

/// Expands every requested circuit into the circuits actually executed.
fn drafts(req: &JobRequest, logical: &[Circuit]) -> Result<(Vec<Draft>, Vec<ItemPlan>), PlanError> {
    let cutting = &req.options.cutting;
    let mut drafts = Vec::new();
    let mut plans = Vec::new();
    for (index, c) in logical.iter().enumerate() {
        if !cutting.enabled {
            if !c.has_measurements() {
                return Err(PlanError::InvalidCircuit { index, reason: "circuit has no measurements".into() });
            }
            plans.push(ItemPlan::Direct { task: drafts.len() });
            drafts.push(Draft { item: index, circuit: c.clone() });
            continue;
        }
        for obs in &cutting.observables {
            if obs.max_qubit().is_some_and(|q| q >= c.num_qubits) {
                return Err(PlanError::InvalidCircuit {
                    index,
                    reason: format!("observable {obs} exceeds the circuit width"),
                });
            }
        }
        let gates = c.gates_only();
        let groups = group_observables(&cutting.observables);
        match find_cut(&gates, cutting.max_width) {
            Ok(cut) => {
                for obs in &cutting.observables {
                    cut.split_observable(obs).map_err(|source| PlanError::Cut { index, source })?;
                }
                let set = generate_subcircuits(&gates, &cut);
                let mut og = Vec::new();
                for (basis, members) in groups {
                    og.push(ObservableGroup { members, first_task: drafts.len() });
                    for sc in measured_subcircuits(&cut, &set, &basis) {
                        drafts.push(Draft { item: index, circuit: sc });
                    }
                }
                plans.push(ItemPlan::Cut { plan: cut, groups: og });
            }
            Err(e @ CutError::NoCutFound { .. }) => {
                let mut og = Vec::new();
                for (basis, members) in groups {
                    og.push(ObservableGroup { members, first_task: drafts.len() });
                    drafts.push(Draft { item: index, circuit: measure_in_basis(&gates, &basis) });
                }
                plans.push(ItemPlan::Uncut { reason: e.to_string(), groups: og });
            }
            Err(source) => return Err(PlanError::Cut { index, source }),
        }
    }
    Ok((drafts, plans))
}

/// Device per draft, plus the balancer's makespan when it was used.
fn assign(req: &JobRequest, drafts: &[Draft], catalog: &Catalog) -> Result<(Vec<String>, Option<f64>), PlanError> {
    let widest = drafts.iter().map(|d| d.circuit.width()).max().unwrap_or(0);
    if !req.is_auto() {
        let (provider, device) =
            catalog.device(&req.target).ok_or_else(|| PlanError::UnknownDevice(req.target.clone()))?;
        supports(provider, &req.options)?;
        if !device.is_online() {
            return Err(PlanError::DeviceOffline(device.id.clone()));
        }
        if device.num_qubits < widest {
            return Err(PlanError::NoSuitableDevice { width: widest });
        }
        return Ok((vec![device.id.clone(); drafts.len()], None));
    }
    let candidates: Vec<&Device> =
        catalog.devices().filter(|(p, d)| d.is_online() && supports(p, &req.options).is_ok()).map(|(_, d)| d).collect();
    if req.circuits.len() > 1 && !req.options.cutting.enabled {
        let targets: Vec<BalanceTarget> =
            candidates.iter().filter(|d| d.num_qubits >= widest).map(|d| BalanceTarget::from(*d)).collect();
        if targets.is_empty() {
            return Err(PlanError::NoSuitableDevice { width: widest });
        }
        let a = balance(drafts.len(), &targets);
        return Ok((a.devices, Some(a.makespan_seconds)));
    }
    let rep = drafts.iter().find(|d| d.circuit.width() == widest).expect("at least one draft");
    let best = select_device(&rep.circuit, candidates).map_err(|e| match e {
        SchedulingError::NoSuitableDevice { width } => PlanError::NoSuitableDevice { width },
        SchedulingError::Transpile(t) => PlanError::Transpile(t),
    })?;
    Ok((vec![best.device_id; drafts.len()], None))
}

pub fn plan_job(req: &JobRequest, seed: u64, catalog: &Catalog) -> Result<PlannedJob, PlanError> {
    validate_request(req, catalog)?;
    let logical = parse_all(req)?;
    let (drafts, item_plans) = drafts(req, &logical)?;
    let (devices, makespan) = assign(req, &drafts, catalog)?;

    let mut items: Vec<JobItem> = (0..req.circuits.len()).map(JobItem::pending).collect();
    let mut tasks = Vec::with_capacity(drafts.len());
    for (k, (draft, device_id)) in drafts.iter().zip(&devices).enumerate() {
        let (_, device) = catalog.device(device_id).expect("assigned devices exist");
        let t = transpile(&draft.circuit, &device.coupling, &device.basis)?;
        let doc = emit(&t.circuit, req.circuits[draft.item].format);
        let item = &mut items[draft.item];
        if item.transpile_info.is_none() {
            item.transpile_info = Some(t.summary());
            item.device_id = Some(device_id.clone());
            item.translated_doc = Some(doc.clone());
        }
        tasks.push(Task { item: draft.item, device_id: device_id.clone(), doc, seed: seed.wrapping_add(k as u64) });
    }

    let mut by_device: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, d) in devices.iter().enumerate() {
        by_device.entry(d.as_str()).or_default().push(k);
    }
    let reservation = req.options.reservation.as_ref().map(|w| w.duration_s);
    let mut lanes = Vec::new();
    let mut infos = Vec::new();
    let mut cost = CostEstimate::empty();
    for (device_id, lane_tasks) in by_device {
        let (provider, device) = catalog.device(device_id).expect("assigned devices exist");
        let submissions: Vec<Submission> = plan_batch(provider.native_batch, lane_tasks.len())
            .into_iter()
            .map(|group| Submission {
                tasks: group.into_iter().map(|i| lane_tasks[i]).collect(),
                status: SubmissionStatus::Pending,
                handle: None,
                queue_position: None,
                started: false,
                results: Vec::new(),
            })
            .collect();
        infos.push(LaneInfo {
            provider_id: provider.id.clone(),
            device_id: device_id.to_string(),
            mode: if provider.native_batch { BatchMode::Native } else { BatchMode::Virtual },
            circuits: lane_tasks.len(),
            submissions: submissions.len(),
        });
        cost = cost.merge(estimate_cost(provider, device, lane_tasks.len(), reservation));
        lanes.push(Lane { provider_id: provider.id.clone(), device_id: device_id.to_string(), submissions });
    }
    Ok(PlannedJob {
        plan: ExecutionPlan { tasks, items: item_plans, lanes },
        items,
        batch: BatchInfo { lanes: infos, balanced_makespan_seconds: makespan },
        cost,
    })
}
