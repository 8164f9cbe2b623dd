// SPDX-License-Identifier: Apache-2.0

//! Hardware selection, load balancing, batch planning and cost estimation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

use serde::{Deserialize, Serialize};

use crate::catalog::{Device, PricingKind, ProviderDescriptor};
use crate::circuit::Circuit;
use crate::transpiler::{gate_counts, transpile, TranspileError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchedulingError {
    #[error("no online device has {width} or more qubits")]
    NoSuitableDevice { width: usize },
    #[error(transparent)]
    Transpile(#[from] TranspileError),
}

/// Estimated success probability of a transpiled circuit on `device`:
/// `(1−ε1)^g1 · (1−ε2)^g2 · Π_measured (1 − (e0+e1)/2)`.
pub fn success_score(transpiled: &Circuit, device: &Device) -> f64 {
    let (g1, g2) = gate_counts(transpiled);
    let readout: f64 = transpiled
        .measurements()
        .iter()
        .map(|&(q, _)| {
            let e = device.readout_errors.for_qubit(q);
            1.0 - (e.e0 + e.e1) / 2.0
        })
        .product();
    (1.0 - device.gate_error_1q).powi(g1 as i32) * (1.0 - device.gate_error_2q).powi(g2 as i32) * readout
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceRanking {
    pub device_id: String,
    pub score: f64,
    pub queue_length: usize,
}

/// Ranks every online device wide enough for `circuit`, best first:
/// higher score, then shorter queue, then smaller id.
pub fn rank_devices<'a>(
    circuit: &Circuit,
    devices: impl IntoIterator<Item = &'a Device>,
) -> Result<Vec<DeviceRanking>, SchedulingError> {
    let mut ranked = Vec::new();
    for d in devices {
        if !d.is_online() || d.num_qubits < circuit.width() {
            continue;
        }
        let t = transpile(circuit, &d.coupling, &d.basis)?;
        ranked.push(DeviceRanking {
            device_id: d.id.clone(),
            score: success_score(&t.circuit, d),
            queue_length: d.queue_length,
        });
    }
    ranked.sort_by(|a, b| {
        b.score.total_cmp(&a.score).then(a.queue_length.cmp(&b.queue_length)).then(a.device_id.cmp(&b.device_id))
    });
    Ok(ranked)
}

pub fn select_device<'a>(
    circuit: &Circuit,
    devices: impl IntoIterator<Item = &'a Device>,
) -> Result<DeviceRanking, SchedulingError> {
    rank_devices(circuit, devices)?
        .into_iter()
        .next()
        .ok_or(SchedulingError::NoSuitableDevice { width: circuit.width() })
}

/// What the balancer needs to know about a device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceTarget {
    pub device_id: String,
    pub queue_length: usize,
    pub avg_exec_seconds: f64,
}

impl From<&Device> for BalanceTarget {
    fn from(d: &Device) -> Self {
        BalanceTarget {
            device_id: d.id.clone(),
            queue_length: d.queue_length,
            avg_exec_seconds: d.avg_exec_seconds_per_circuit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Device id per document, in document order.
    pub devices: Vec<String>,
    /// Latest projected finish time over the devices that received work.
    pub makespan_seconds: f64,
}

/// Projected makespan of an explicit assignment (`assignment[doc] = target index`).
pub fn makespan(targets: &[BalanceTarget], assignment: &[usize]) -> f64 {
    let mut load = vec![0usize; targets.len()];
    for &t in assignment {
        load[t] += 1;
    }
    targets
        .iter()
        .zip(&load)
        .filter(|(_, &n)| n > 0)
        .map(|(t, &n)| (t.queue_length + n) as f64 * t.avg_exec_seconds)
        .fold(0.0, f64::max)
}

/// Greedy list scheduling: each document goes to the device that would
/// finish it first, `(queue + assigned + 1) × avg_exec`, ties by device id.
pub fn balance(num_docs: usize, targets: &[BalanceTarget]) -> Assignment {
    assert!(!targets.is_empty(), "balance needs at least one device");
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].device_id.cmp(&targets[b].device_id));
    let mut assigned = vec![0usize; targets.len()];
    let mut picks = Vec::with_capacity(num_docs);
    for _ in 0..num_docs {
        let finish = |t: usize| (targets[t].queue_length + assigned[t] + 1) as f64 * targets[t].avg_exec_seconds;
        let best = order.iter().copied().fold(None, |best: Option<usize>, t| match best {
            Some(b) if finish(b) <= finish(t) => Some(b),
            _ => Some(t),
        });
        let t = best.expect("nonempty");
        assigned[t] += 1;
        picks.push(t);
    }
    Assignment {
        makespan_seconds: makespan(targets, &picks),
        devices: picks.into_iter().map(|t| targets[t].device_id.clone()).collect(),
    }
}

/// Submission groups: one group of everything when the provider batches
/// natively, otherwise one group per document in order.
pub fn plan_batch(native_batch: bool, num_docs: usize) -> Vec<Vec<usize>> {
    if native_batch {
        vec![(0..num_docs).collect()]
    } else {
        (0..num_docs).map(|i| vec![i]).collect()
    }
}

pub const CURRENCY_UNIT: &str = "credits";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLine {
    pub device_id: String,
    pub kind: PricingKind,
    pub rate: f64,
    pub amount: f64,
    /// Whether this line counts towards the total; alternatives are listed for reference.
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub amount: f64,
    pub currency_unit: String,
    pub breakdown: Vec<CostLine>,
}

impl CostEstimate {
    pub fn empty() -> Self {
        CostEstimate { amount: 0.0, currency_unit: CURRENCY_UNIT.to_string(), breakdown: Vec::new() }
    }

    pub fn merge(mut self, other: CostEstimate) -> Self {
        self.amount += other.amount;
        self.breakdown.extend(other.breakdown);
        self
    }
}

/// Cost of running `num_circuits` circuits on `device`. The first pricing
/// model listed for the provider is applied; the others are itemized with
/// `applied: false`. A reservation is charged for its full window under
/// time-based pricing, whether or not circuits run.
pub fn estimate_cost(
    provider: &ProviderDescriptor,
    device: &Device,
    num_circuits: usize,
    reservation_seconds: Option<f64>,
) -> CostEstimate {
    let mut estimate = CostEstimate::empty();
    for (i, model) in provider.pricing.iter().enumerate() {
        let (amount, note) = match model.kind {
            PricingKind::TimeBased => match reservation_seconds {
                Some(window) => (model.rate * window, Some("reserved window charged in full".to_string())),
                None => (model.rate * device.avg_exec_seconds_per_circuit * num_circuits as f64, None),
            },
            PricingKind::CircuitBased => (model.rate * num_circuits as f64, None),
            PricingKind::Subscription => (0.0, Some("covered by subscription; no marginal cost".to_string())),
            PricingKind::Free => (0.0, None),
        };
        let applied = i == 0;
        if applied {
            estimate.amount += amount;
        }
        estimate.breakdown.push(CostLine {
            device_id: device.id.clone(),
            kind: model.kind,
            rate: model.rate,
            amount,
            applied,
            note,
        });
    }
    estimate
}

/// Number of documents per device id.
pub fn assignment_histogram(assignment: &Assignment) -> BTreeMap<&str, usize> {
    let mut h = BTreeMap::new();
    for d in &assignment.devices {
        *h.entry(d.as_str()).or_default() += 1;
    }
    h
}
