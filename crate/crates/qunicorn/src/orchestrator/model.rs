// SPDX-License-Identifier: Apache-2.0

//! Job records as persisted and served.

use chrono::{DateTime, Utc};
use qunicorn_core::cutting::{CutPlan, Estimate};
use qunicorn_core::job::JobState;
use qunicorn_core::mitigation::{MitigationMetadata, MitigationOptions, QuasiDistribution};
use qunicorn_core::scheduling::CostEstimate;
use qunicorn_core::transpiler::TranspileSummary;
use qunicorn_core::{Counts, PauliObservable, SourceDocument};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::provider::{ExecutionResult, ProviderJobHandle, ReservationWindow};

pub const AUTO_TARGET: &str = "auto";

fn auto_target() -> String {
    AUTO_TARGET.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub circuits: Vec<SourceDocument>,
    /// A device id, or `"auto"`.
    #[serde(default = "auto_target")]
    pub target: String,
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub options: JobOptions,
}

impl JobRequest {
    pub fn is_auto(&self) -> bool {
        self.target == AUTO_TARGET
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobOptions {
    pub mitigation: MitigationOptions,
    pub cutting: CuttingOptions,
    pub priority: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reservation: Option<ReservationWindow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CuttingOptions {
    pub enabled: bool,
    pub max_width: usize,
    pub observables: Vec<PauliObservable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ItemState {
    Pending,
    Queued,
    Running,
    Done,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationValue {
    pub observable: PauliObservable,
    pub value: f64,
    pub std_error: f64,
}

impl ExpectationValue {
    pub fn new(observable: PauliObservable, e: Estimate) -> Self {
        ExpectationValue { observable, value: e.value, std_error: e.std_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuttingMetadata {
    pub applied: bool,
    /// Fragments executed for this circuit.
    pub subcircuits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_qubit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_position: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Outcome of one requested circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Counts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quasi: Option<QuasiDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectations: Option<Vec<ExpectationValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mitigation: Option<MitigationMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutting: Option<CuttingMetadata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobItem {
    pub index: usize,
    pub state: ItemState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_id: Option<String>,
    /// The document handed to the provider for this circuit (its first
    /// fragment when cut), after transpilation and any format translation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translated_doc: Option<SourceDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transpile_info: Option<TranspileSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handle: Option<ProviderJobHandle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_position: Option<usize>,
    /// Filled from the results store when serving a finished job.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ItemResult>,
}

impl JobItem {
    pub fn pending(index: usize) -> Self {
        JobItem {
            index,
            state: ItemState::Pending,
            device_id: None,
            translated_doc: None,
            transpile_info: None,
            handle: None,
            queue_position: None,
            result: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: JobState,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchMode {
    /// One provider submission carries every circuit of a lane.
    Native,
    /// Circuits are submitted one after another under this job.
    Virtual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneInfo {
    pub provider_id: String,
    pub device_id: String,
    pub mode: BatchMode,
    pub circuits: usize,
    pub submissions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchInfo {
    pub lanes: Vec<LaneInfo>,
    /// Projected makespan in device seconds when the balancer distributed the circuits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balanced_makespan_seconds: Option<f64>,
}

/// One physical circuit to execute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub item: usize,
    pub device_id: String,
    pub doc: SourceDocument,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableGroup {
    pub members: Vec<usize>,
    /// First task of the group; cut groups own seven consecutive tasks.
    pub first_task: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ItemPlan {
    Direct {
        task: usize,
    },
    Cut {
        plan: CutPlan,
        groups: Vec<ObservableGroup>,
    },
    /// Cutting requested but no cut exists: basis-rotated uncut runs.
    Uncut {
        reason: String,
        groups: Vec<ObservableGroup>,
    },
}

impl ItemPlan {
    pub fn tasks(&self) -> Vec<usize> {
        match self {
            ItemPlan::Direct { task } => vec![*task],
            ItemPlan::Cut { groups, .. } => groups.iter().flat_map(|g| g.first_task..g.first_task + 7).collect(),
            ItemPlan::Uncut { groups, .. } => groups.iter().map(|g| g.first_task).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SubmissionStatus {
    Pending,
    Queued,
    Running,
    Done,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub tasks: Vec<usize>,
    pub status: SubmissionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handle: Option<ProviderJobHandle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_position: Option<usize>,
    /// Whether the provider was ever seen executing it.
    #[serde(default)]
    pub started: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<ExecutionResult>,
}

/// Submissions to one device, executed strictly in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub provider_id: String,
    pub device_id: String,
    pub submissions: Vec<Submission>,
}

impl Lane {
    /// The first submission not yet done, if any.
    pub fn head_mut(&mut self) -> Option<&mut Submission> {
        self.submissions.iter_mut().find(|s| s.status != SubmissionStatus::Done)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub tasks: Vec<Task>,
    pub items: Vec<ItemPlan>,
    pub lanes: Vec<Lane>,
}

impl ExecutionPlan {
    pub fn submissions(&self) -> impl Iterator<Item = &Submission> {
        self.lanes.iter().flat_map(|l| l.submissions.iter())
    }

    /// Provider result of each task, once its submission is done.
    pub fn task_results(&self) -> Vec<Option<&ExecutionResult>> {
        let mut out = vec![None; self.tasks.len()];
        for sub in self.submissions() {
            for (k, &t) in sub.tasks.iter().enumerate() {
                out[t] = sub.results.get(k);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: Uuid,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub state: JobState,
    pub request: JobRequest,
    /// Job-level seed; task `k` samples with `seed + k`.
    pub seed: u64,
    pub items: Vec<JobItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub history: Vec<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostEstimate>,
    /// Execution bookkeeping; not part of the public view.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<ExecutionPlan>,
}

/// Listing entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub id: Uuid,
    pub state: JobState,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub circuits: usize,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&Job> for JobSummary {
    fn from(j: &Job) -> Self {
        JobSummary {
            id: j.id,
            state: j.state,
            created_at: j.created_at,
            updated_at: j.updated_at,
            circuits: j.request.circuits.len(),
            target: j.request.target.clone(),
            error: j.error.clone(),
        }
    }
}

/// Outcome of a cancel request on a job that was not yet terminal or already cancelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CancelOutcome {
    pub cancelled: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_defaults_and_unknown_fields() {
        let r: JobRequest =
            serde_json::from_str(r#"{"circuits":[{"format":"qasm2","payload":"x"}],"shots":10}"#).unwrap();
        assert!(r.is_auto());
        assert_eq!(r.options, JobOptions::default());
        let err = serde_json::from_str::<JobRequest>(r#"{"circuits":[],"shots":1,"colour":1}"#).unwrap_err();
        assert!(err.to_string().contains("colour"));
        let r: JobRequest = serde_json::from_str(
            r#"{"circuits":[],"shots":1,"options":{"mitigation":{"enabled":true,"locus":"provider"},"cutting":{"enabled":true,"max_width":2,"observables":["Z0 Z1","-0.5*X2"]}}}"#,
        )
        .unwrap();
        assert_eq!(r.options.cutting.observables[1].coefficient, -0.5);
    }

    #[test]
    fn plan_task_ranges() {
        let groups = vec![
            ObservableGroup { members: vec![0], first_task: 3 },
            ObservableGroup { members: vec![1], first_task: 10 },
        ];
        let plan = ItemPlan::Uncut { reason: String::new(), groups: groups.clone() };
        assert_eq!(plan.tasks(), [3, 10]);
        let cut = CutPlan {
            num_qubits: 2,
            cut_qubit: 0,
            cut_position: 0,
            upstream_qubits: vec![0],
            downstream_qubits: vec![1],
        };
        assert_eq!(ItemPlan::Cut { plan: cut, groups }.tasks().len(), 14);
    }
}
