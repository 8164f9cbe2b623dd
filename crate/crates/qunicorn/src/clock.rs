// SPDX-License-Identifier: Apache-2.0

//! Time sources. Mock devices and the provenance collector read time
//! through [`Clock`] so tests can drive them deterministically.

use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use chrono::{DateTime, TimeZone, Utc};
use parking_lot::Mutex;

pub trait Clock: Send + Sync {
    /// Seconds since the Unix epoch.
    fn now(&self) -> f64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or(Duration::ZERO).as_secs_f64()
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Clone)]
pub struct ManualClock(Arc<Mutex<f64>>);

impl ManualClock {
    pub fn new(start: f64) -> Self {
        ManualClock(Arc::new(Mutex::new(start)))
    }

    pub fn advance(&self, seconds: f64) {
        *self.0.lock() += seconds;
    }

    pub fn set(&self, t: f64) {
        *self.0.lock() = t;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> f64 {
        *self.0.lock()
    }
}

pub fn to_datetime(t: f64) -> DateTime<Utc> {
    let micros = (t * 1e6).round() as i64;
    Utc.timestamp_micros(micros).single().unwrap_or_default()
}

pub fn from_datetime(t: &DateTime<Utc>) -> f64 {
    t.timestamp_micros() as f64 / 1e6
}

pub fn now_utc() -> DateTime<Utc> {
    Utc::now()
}
