// SPDX-License-Identifier: Apache-2.0

//! Catalog-driven mock provider.
//!
//! Each device is a discrete-event queue advanced lazily to the clock's
//! current time whenever it is touched. Queued work is ordered by class
//! (priority first) and then by submission order. Execution takes
//! `avg_exec_seconds_per_circuit × |docs| × time_scale` seconds and is
//! atomic once started. Results are sampled at submission, outside the
//! device lock, and revealed when the simulated execution completes.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::Mutex;
use qunicorn_core::catalog::{
    AccessModels, Device, DeviceStatus, Features, PricingKind, PricingModel, ProviderDescriptor,
};
use qunicorn_core::circuit::Circuit;
use qunicorn_core::mitigation::{mitigate, ConfusionModel, MitigationLocus, MitigationMetadata};
use qunicorn_core::simulator::{sample, NoiseSpec};
use qunicorn_core::transpiler::{transpile, BasisGateSet, CouplingMap};
use qunicorn_core::{formats, CircuitFormat, GateKind, SourceDocument};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Connector, DeviceLive, ExecutionResult, PollStatus, ProviderError, ProviderJobHandle, SubmitOptions};
use crate::clock::{to_datetime, Clock};

pub const LOCAL_SIMULATOR_ID: &str = "local-simulator";

#[derive(Debug, Clone)]
pub struct MockOptions {
    pub time_scale: f64,
    /// Probability that a job fails when its execution completes.
    pub failure_rate: f64,
    pub seed: u64,
    /// Start with the catalog's `queue_length` background jobs per device.
    pub background_jobs: bool,
}

impl Default for MockOptions {
    fn default() -> Self {
        MockOptions { time_scale: 0.01, failure_rate: 0.0, seed: 0, background_jobs: true }
    }
}

/// Noiseless all-to-all statevector device, registered on request.
pub fn local_simulator_descriptor() -> ProviderDescriptor {
    let n = qunicorn_core::simulator::MAX_QUBITS;
    let basis = BasisGateSet::new(GateKind::ALL.iter().copied().filter(|k| !matches!(k, GateKind::Cz | GateKind::Ccx)))
        .expect("valid basis");
    ProviderDescriptor {
        id: LOCAL_SIMULATOR_ID.into(),
        display_name: "Local statevector simulator".into(),
        accepted_formats: vec![CircuitFormat::Qasm2, CircuitFormat::Qjson],
        access_models: AccessModels { queue: true, prioritized_queue: true, exclusive_slots: true },
        native_batch: true,
        native_mitigation: true,
        pricing: vec![PricingModel { kind: PricingKind::Free, rate: 0.0 }],
        features: Features::default(),
        devices: vec![Device {
            id: "local-statevector".into(),
            num_qubits: n,
            coupling: CouplingMap::full(n),
            basis,
            readout_errors: NoiseSpec::uniform(n, 0.0, 0.0),
            gate_error_1q: 0.0,
            gate_error_2q: 0.0,
            avg_exec_seconds_per_circuit: 0.1,
            queue_length: 0,
            status: DeviceStatus::Online,
        }],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Queued,
    Running,
    Done,
    Failed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq)]
struct Reservation {
    owner: String,
    start: f64,
    end: f64,
}

impl Reservation {
    fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug)]
struct RemoteJob {
    seq: u64,
    priority: bool,
    reservation: Option<Reservation>,
    duration: f64,
    phase: Phase,
    results: Vec<ExecutionResult>,
    failure: Option<String>,
}

#[derive(Debug)]
struct DeviceQueue {
    device: Device,
    /// Simulated time up to which events have been processed.
    t: f64,
    jobs: HashMap<String, RemoteJob>,
    /// Remote ids of queued jobs, kept in dispatch order.
    waiting: Vec<String>,
    running: Option<(String, f64)>,
    reservations: Vec<Reservation>,
}

impl DeviceQueue {
    fn insert_waiting(&mut self, id: String) {
        let key = |j: &RemoteJob| (!j.priority, j.seq);
        let k = key(&self.jobs[&id]);
        let at = self.waiting.iter().position(|w| key(&self.jobs[w]) > k).unwrap_or(self.waiting.len());
        self.waiting.insert(at, id);
    }

    fn active_reservation_owner(&self, t: f64) -> Option<&str> {
        self.reservations.iter().find(|r| r.contains(t)).map(|r| r.owner.as_str())
    }

    fn eligible(&self, id: &str, t: f64) -> bool {
        let job = &self.jobs[id];
        match (&job.reservation, self.active_reservation_owner(t)) {
            (Some(r), _) => r.contains(t),
            (None, owner) => owner.is_none(),
        }
    }

    /// Processes every event up to `now`.
    fn advance(&mut self, now: f64) {
        loop {
            if let Some((id, finish)) = self.running.clone() {
                if finish > now {
                    return;
                }
                let job = self.jobs.get_mut(&id).expect("running job exists");
                job.phase = if job.failure.is_some() { Phase::Failed } else { Phase::Done };
                self.running = None;
                self.t = finish;
            }
            let t = self.t;
            // Reserved work whose window has passed can no longer run.
            let expired: Vec<String> = self
                .waiting
                .iter()
                .filter(|id| self.jobs[*id].reservation.as_ref().is_some_and(|r| t >= r.end))
                .cloned()
                .collect();
            for id in expired {
                self.waiting.retain(|w| *w != id);
                let job = self.jobs.get_mut(&id).expect("exists");
                job.phase = Phase::Failed;
                job.failure = Some("reservation window elapsed".into());
            }
            if let Some(pos) = self.waiting.iter().position(|id| self.eligible(id, t)) {
                let id = self.waiting.remove(pos);
                let job = self.jobs.get_mut(&id).expect("exists");
                job.phase = Phase::Running;
                self.running = Some((id, t + job.duration));
                continue;
            }
            let next_boundary = self
                .reservations
                .iter()
                .flat_map(|r| [r.start, r.end])
                .filter(|&b| b > t)
                .fold(f64::INFINITY, f64::min);
            if !self.waiting.is_empty() && next_boundary <= now {
                self.t = next_boundary;
                continue;
            }
            self.t = self.t.max(now);
            self.reservations.retain(|r| r.end > now);
            return;
        }
    }

    fn position(&self, id: &str) -> usize {
        let ahead = self.waiting.iter().position(|w| w == id).unwrap_or(0);
        1 + ahead + usize::from(self.running.is_some())
    }

    fn occupancy(&self) -> usize {
        self.waiting.len() + usize::from(self.running.is_some())
    }
}

pub struct MockProvider {
    descriptor: ProviderDescriptor,
    clock: Arc<dyn Clock>,
    options: MockOptions,
    devices: HashMap<String, Mutex<DeviceQueue>>,
    /// remote id → device id
    handles: Mutex<HashMap<String, String>>,
    rng: Mutex<ChaCha8Rng>,
    seq: AtomicU64,
}

/// Drops qubits no instruction touches, relabelling the noise model with them.
fn compact(circuit: &Circuit, noise: &NoiseSpec) -> (Circuit, NoiseSpec) {
    let mut used: Vec<usize> = circuit.instructions.iter().flat_map(|i| i.qubits.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    if used.len() == circuit.num_qubits {
        return (circuit.clone(), noise.clone());
    }
    let mut map = vec![usize::MAX; circuit.num_qubits];
    for (new, &old) in used.iter().enumerate() {
        map[old] = new;
    }
    let mut out = circuit.clone();
    out.num_qubits = used.len();
    for inst in &mut out.instructions {
        inst.qubits.iter_mut().for_each(|q| *q = map[*q]);
    }
    (out, NoiseSpec { readout: used.iter().map(|&q| noise.for_qubit(q)).collect() })
}

/// Whether the device can run `circuit` without rewriting it.
fn is_native(circuit: &Circuit, device: &Device) -> bool {
    circuit.num_qubits <= device.num_qubits
        && circuit.instructions.iter().all(|i| {
            !i.kind.is_gate()
                || (device.basis.contains(i.kind)
                    && (i.qubits.len() < 2
                        || (i.qubits.len() == 2 && device.coupling.is_adjacent(i.qubits[0], i.qubits[1]))))
        })
}

impl MockProvider {
    pub fn new(descriptor: ProviderDescriptor, clock: Arc<dyn Clock>, options: MockOptions) -> Self {
        let now = clock.now();
        let seq = AtomicU64::new(0);
        let mut devices = HashMap::new();
        for d in &descriptor.devices {
            let mut q = DeviceQueue {
                device: d.clone(),
                t: now,
                jobs: HashMap::new(),
                waiting: Vec::new(),
                running: None,
                reservations: Vec::new(),
            };
            if options.background_jobs {
                for k in 0..d.queue_length {
                    let id = format!("{}-background-{k}", d.id);
                    q.jobs.insert(
                        id.clone(),
                        RemoteJob {
                            seq: seq.fetch_add(1, Ordering::Relaxed),
                            priority: false,
                            reservation: None,
                            duration: d.avg_exec_seconds_per_circuit * options.time_scale,
                            phase: Phase::Queued,
                            results: Vec::new(),
                            failure: None,
                        },
                    );
                    q.insert_waiting(id);
                }
                q.advance(now);
            }
            devices.insert(d.id.clone(), Mutex::new(q));
        }
        MockProvider {
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(options.seed)),
            descriptor,
            clock,
            options,
            devices,
            handles: Mutex::new(HashMap::new()),
            seq,
        }
    }

    fn queue(&self, device_id: &str) -> Result<&Mutex<DeviceQueue>, ProviderError> {
        self.devices.get(device_id).ok_or_else(|| ProviderError::UnknownDevice(device_id.into()))
    }

    /// Switches a device between ONLINE and MAINTENANCE.
    pub fn set_status(&self, device_id: &str, status: DeviceStatus) -> Result<(), ProviderError> {
        self.queue(device_id)?.lock().device.status = status;
        Ok(())
    }

    fn execute(
        &self,
        device: &Device,
        docs: &[SourceDocument],
        shots: u64,
        options: &SubmitOptions,
    ) -> Result<Vec<ExecutionResult>, ProviderError> {
        let invalid = |m: String| ProviderError::InvalidSubmission(m);
        let mut out = Vec::with_capacity(docs.len());
        for (k, doc) in docs.iter().enumerate() {
            let circuit = formats::parse(doc).map_err(|e| invalid(format!("document {k}: {e}")))?;
            let physical = if is_native(&circuit, device) {
                circuit
            } else {
                transpile(&circuit, &device.coupling, &device.basis)
                    .map_err(|e| invalid(format!("document {k}: {e}")))?
                    .circuit
            };
            let (runnable, noise) = compact(&physical, &device.readout_errors);
            let seed = options.seeds.get(k).copied().unwrap_or(k as u64);
            let counts =
                sample(&runnable, shots, seed, Some(&noise)).map_err(|e| invalid(format!("document {k}: {e}")))?;
            let (quasi, mitigation) = if options.mitigate {
                let model = ConfusionModel::for_measurements(&runnable, &noise);
                let q = mitigate(&counts, &model).map_err(|e| invalid(format!("document {k}: {e}")))?;
                let meta = MitigationMetadata {
                    applied: true,
                    locus: MitigationLocus::Provider,
                    negative_mass: q.negative_mass,
                };
                (Some(q), Some(meta))
            } else {
                (None, None)
            };
            out.push(ExecutionResult { counts, quasi, mitigation });
        }
        Ok(out)
    }
}

impl Connector for MockProvider {
    fn descriptor(&self) -> &ProviderDescriptor {
        &self.descriptor
    }

    fn device_live(&self, device_id: &str) -> Result<DeviceLive, ProviderError> {
        let mut q = self.queue(device_id)?.lock();
        q.advance(self.clock.now());
        Ok(DeviceLive { queue_length: q.occupancy(), status: q.device.status })
    }

    fn submit(
        &self,
        device_id: &str,
        docs: &[SourceDocument],
        shots: u64,
        options: &SubmitOptions,
    ) -> Result<ProviderJobHandle, ProviderError> {
        let d = &self.descriptor;
        if let Some(doc) = docs.iter().find(|doc| !d.accepts(doc.format)) {
            return Err(ProviderError::FormatRejected(doc.format));
        }
        if docs.is_empty() {
            return Err(ProviderError::InvalidSubmission("no documents".into()));
        }
        if docs.len() > 1 && !d.native_batch {
            return Err(ProviderError::AccessModelUnsupported("batch".into()));
        }
        if options.priority && !d.access_models.prioritized_queue {
            return Err(ProviderError::AccessModelUnsupported("prioritized_queue".into()));
        }
        if options.reservation.is_some() && !d.access_models.exclusive_slots {
            return Err(ProviderError::AccessModelUnsupported("exclusive_slots".into()));
        }
        if options.mitigate && !d.native_mitigation {
            return Err(ProviderError::AccessModelUnsupported("native_mitigation".into()));
        }
        if shots == 0 {
            return Err(ProviderError::InvalidSubmission("shots must be positive".into()));
        }
        let device = {
            let q = self.queue(device_id)?.lock();
            if q.device.status != DeviceStatus::Online {
                return Err(ProviderError::DeviceOffline(device_id.into()));
            }
            q.device.clone()
        };
        let results = self.execute(&device, docs, shots, options)?;
        let failure = {
            let mut rng = self.rng.lock();
            (rng.random::<f64>() < self.options.failure_rate).then(|| "injected device failure".to_string())
        };

        let now = self.clock.now();
        let scale = self.options.time_scale;
        let mut q = self.queue(device_id)?.lock();
        q.advance(now);
        let reservation = match &options.reservation {
            Some(w) => {
                if !(w.duration_s.is_finite() && w.duration_s > 0.0 && w.start_offset_s >= 0.0) {
                    return Err(ProviderError::InvalidSubmission("reservation needs a positive duration".into()));
                }
                let r = Reservation {
                    owner: w.owner.clone(),
                    start: now + w.start_offset_s * scale,
                    end: now + (w.start_offset_s + w.duration_s) * scale,
                };
                let clash = q.reservations.iter().any(|o| o.owner != r.owner && o.start < r.end && r.start < o.end);
                if clash {
                    return Err(ProviderError::ReservationConflict);
                }
                q.reservations.push(r.clone());
                Some(r)
            }
            None => None,
        };
        let seq = self.seq.fetch_add(1, Ordering::Relaxed);
        let remote_id = format!("{}-{}-{seq}", d.id, device_id);
        q.jobs.insert(
            remote_id.clone(),
            RemoteJob {
                seq,
                priority: options.priority,
                reservation,
                duration: device.avg_exec_seconds_per_circuit * docs.len() as f64 * scale,
                phase: Phase::Queued,
                results,
                failure,
            },
        );
        q.insert_waiting(remote_id.clone());
        q.advance(now);
        drop(q);
        self.handles.lock().insert(remote_id.clone(), device_id.into());
        Ok(ProviderJobHandle {
            provider_id: d.id.clone(),
            device_id: device_id.into(),
            remote_id,
            submitted_at: to_datetime(now),
        })
    }

    fn poll(&self, handle: &ProviderJobHandle) -> Result<PollStatus, ProviderError> {
        let device_id = self.handles.lock().get(&handle.remote_id).cloned();
        let device_id = device_id.ok_or_else(|| ProviderError::UnknownHandle(handle.remote_id.clone()))?;
        let mut q = self.queue(&device_id)?.lock();
        q.advance(self.clock.now());
        let job = &q.jobs[&handle.remote_id];
        Ok(match job.phase {
            Phase::Queued => PollStatus::Queued { position: q.position(&handle.remote_id) },
            Phase::Running => PollStatus::Running,
            Phase::Done => PollStatus::Done { results: job.results.clone() },
            Phase::Failed => PollStatus::Failed { reason: job.failure.clone().unwrap_or_default() },
            Phase::Cancelled => PollStatus::Cancelled,
        })
    }

    fn cancel(&self, handle: &ProviderJobHandle) -> Result<bool, ProviderError> {
        let device_id = self.handles.lock().get(&handle.remote_id).cloned();
        let device_id = device_id.ok_or_else(|| ProviderError::UnknownHandle(handle.remote_id.clone()))?;
        let mut q = self.queue(&device_id)?.lock();
        q.advance(self.clock.now());
        let job = q.jobs.get_mut(&handle.remote_id).expect("handle maps to a job");
        if job.phase != Phase::Queued {
            return Ok(false);
        }
        job.phase = Phase::Cancelled;
        let reservation = job.reservation.take();
        q.waiting.retain(|w| *w != handle.remote_id);
        if let Some(r) = reservation {
            if let Some(i) = q.reservations.iter().position(|o| *o == r) {
                q.reservations.remove(i);
            }
        }
        Ok(true)
    }
}
