// SPDX-License-Identifier: Apache-2.0

//! Periodic device snapshots. Error rates of mock devices drift by a seeded
//! multiplicative random walk; the drift is recorded here only and does not
//! feed back into execution.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use chrono::{DateTime, Utc};
use parking_lot::{Condvar, Mutex};
use qunicorn_core::catalog::DeviceStatus;
use qunicorn_core::simulator::ReadoutError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::{to_datetime, Clock};
use crate::provider::ProviderRegistry;
use crate::store::{Store, StoreError, Table, WriteBatch};

/// Largest relative step of the walk per tick.
pub const JITTER: f64 = 0.1;
const MAX_RATE: f64 = 0.499_999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSnapshot {
    pub device_id: String,
    pub taken_at: DateTime<Utc>,
    pub num_qubits: usize,
    pub queue_length: usize,
    pub readout_errors: Vec<ReadoutError>,
    pub gate_error_1q: f64,
    pub gate_error_2q: f64,
    pub status: DeviceStatus,
}

#[derive(Debug, Clone)]
struct Drift {
    readout: Vec<ReadoutError>,
    g1: f64,
    g2: f64,
    last: Option<DateTime<Utc>>,
}

fn key(device_id: &str, at: &DateTime<Utc>) -> String {
    format!("{device_id}/{:020}", at.timestamp_micros().max(0))
}

fn step(rng: &mut ChaCha8Rng, x: f64) -> f64 {
    (x * (1.0 + rng.random_range(-JITTER..=JITTER))).clamp(0.0, MAX_RATE)
}

pub struct ProvenanceCollector {
    store: Arc<Store>,
    registry: ProviderRegistry,
    clock: Arc<dyn Clock>,
    rng: ChaCha8Rng,
    drift: BTreeMap<String, Drift>,
}

impl ProvenanceCollector {
    pub fn new(store: Arc<Store>, registry: ProviderRegistry, clock: Arc<dyn Clock>, seed: u64) -> Self {
        let mut drift = BTreeMap::new();
        for c in registry.iter() {
            for d in &c.descriptor().devices {
                drift.insert(
                    d.id.clone(),
                    Drift {
                        readout: d.readout_errors.readout.clone(),
                        g1: d.gate_error_1q,
                        g2: d.gate_error_2q,
                        last: None,
                    },
                );
            }
        }
        ProvenanceCollector { store, registry, clock, rng: ChaCha8Rng::seed_from_u64(seed), drift }
    }

    /// Advances every device's walk and records one snapshot per device.
    pub fn tick(&mut self) -> Result<Vec<DeviceSnapshot>, StoreError> {
        let now = to_datetime(self.clock.now());
        let live = self.registry.live_catalog();
        let mut batch = WriteBatch::default();
        let mut out = Vec::new();
        for (id, d) in &mut self.drift {
            let Some((_, device)) = live.device(id) else { continue };
            for r in &mut d.readout {
                r.e0 = step(&mut self.rng, r.e0);
                r.e1 = step(&mut self.rng, r.e1);
            }
            d.g1 = step(&mut self.rng, d.g1);
            d.g2 = step(&mut self.rng, d.g2);
            let taken_at = match d.last {
                Some(last) if now <= last => last + chrono::Duration::microseconds(1),
                _ => now,
            };
            d.last = Some(taken_at);
            let snap = DeviceSnapshot {
                device_id: id.clone(),
                taken_at,
                num_qubits: device.num_qubits,
                queue_length: device.queue_length,
                readout_errors: d.readout.clone(),
                gate_error_1q: d.g1,
                gate_error_2q: d.g2,
                status: device.status,
            };
            batch.put(Table::Provenance, &key(id, &taken_at), &snap);
            out.push(snap);
        }
        self.store.commit(batch)?;
        Ok(out)
    }

    /// Ticks every `interval` on a background thread until the handle is stopped.
    pub fn spawn(mut self, interval: Duration) -> CollectorHandle {
        let stop = Arc::new((Mutex::new(false), Condvar::new()));
        let flag = stop.clone();
        let thread = std::thread::Builder::new()
            .name("qunicorn-provenance".into())
            .spawn(move || loop {
                if let Err(e) = self.tick() {
                    tracing::warn!(error = %e, "provenance collection failed");
                }
                let (lock, cv) = &*flag;
                let mut stopped = lock.lock();
                if !*stopped {
                    cv.wait_for(&mut stopped, interval);
                }
                if *stopped {
                    break;
                }
            })
            .expect("spawn collector");
        CollectorHandle { stop, thread: Some(thread) }
    }
}

pub struct CollectorHandle {
    stop: Arc<(Mutex<bool>, Condvar)>,
    thread: Option<JoinHandle<()>>,
}

impl CollectorHandle {
    pub fn stop(&mut self) {
        *self.stop.0.lock() = true;
        self.stop.1.notify_all();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for CollectorHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Snapshots of one device with `from <= taken_at <= to`, oldest first.
pub fn history(
    store: &Store,
    device_id: &str,
    from: Option<DateTime<Utc>>,
    to: Option<DateTime<Utc>>,
) -> Result<Vec<DeviceSnapshot>, StoreError> {
    let lo = match from {
        Some(t) => key(device_id, &t),
        None => format!("{device_id}/"),
    };
    // '0' follows '/', so this bounds the device's key prefix.
    let hi = format!("{device_id}0");
    let snaps = store.range::<DeviceSnapshot>(Table::Provenance, &lo, Some(&hi))?;
    Ok(snaps.into_iter().map(|(_, s)| s).filter(|s| to.is_none_or(|t| s.taken_at <= t)).collect())
}
