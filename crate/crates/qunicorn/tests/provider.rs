// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use proptest::prelude::*;
use qunicorn::catalog::default_catalog;
use qunicorn::clock::{Clock, ManualClock};
use qunicorn::provider::{
    local_simulator_descriptor, Connector, MockOptions, MockProvider, PollStatus, ProviderError, ProviderJobHandle,
    ProviderRegistry, ReservationWindow, SubmitOptions,
};
use qunicorn_core::catalog::ProviderDescriptor;
use qunicorn_core::formats::emit;
use qunicorn_core::simulator::{sample, NoiseSpec};
use qunicorn_core::transpiler::CouplingMap;
use qunicorn_core::{Circuit, CircuitFormat, SourceDocument};

const DEV: &str = "local-statevector";
const STEP: f64 = 0.25;

fn doc() -> SourceDocument {
    let mut c = Circuit::new(1, 1);
    c.x(0).measure(0, 0);
    emit(&c, CircuitFormat::Qasm2)
}

fn mock(background: usize) -> (MockProvider, ManualClock) {
    let clock = ManualClock::new(1000.0);
    let mut d: ProviderDescriptor = local_simulator_descriptor();
    d.devices[0].num_qubits = 2;
    d.devices[0].coupling = CouplingMap::linear(2);
    d.devices[0].readout_errors = NoiseSpec::uniform(2, 0.0, 0.0);
    d.devices[0].avg_exec_seconds_per_circuit = 1.0;
    d.devices[0].queue_length = background;
    let opts = MockOptions { time_scale: 1.0, ..Default::default() };
    (MockProvider::new(d, Arc::new(clock.clone()), opts), clock)
}

#[derive(Debug, Default, Clone)]
struct Trace {
    start: Option<f64>,
    end: Option<f64>,
    terminal: Option<PollStatus>,
}

/// Polls every handle once, recording the first time each one was seen
/// running and terminal. Returns true when all are terminal.
fn observe(p: &MockProvider, now: f64, handles: &[ProviderJobHandle], traces: &mut Vec<Trace>) -> bool {
    traces.resize(handles.len(), Trace::default());
    let mut all_done = true;
    for (h, tr) in handles.iter().zip(traces.iter_mut()) {
        let status = p.poll(h).unwrap();
        if let Some(t) = &tr.terminal {
            assert_eq!(&status, t, "terminal state changed");
            continue;
        }
        match status {
            PollStatus::Running => {
                tr.start.get_or_insert(now);
                all_done = false;
            }
            s if s.is_terminal() => {
                if matches!(s, PollStatus::Done { .. }) {
                    tr.start.get_or_insert(now);
                }
                tr.end = Some(now);
                tr.terminal = Some(s);
            }
            _ => all_done = false,
        }
    }
    all_done
}

/// Advances `steps` grid steps, observing after each.
fn step(p: &MockProvider, clock: &ManualClock, steps: u8, handles: &[ProviderJobHandle], traces: &mut Vec<Trace>) {
    for _ in 0..steps {
        clock.advance(STEP);
        observe(p, clock.now(), handles, traces);
    }
}

fn run_to_completion(p: &MockProvider, clock: &ManualClock, handles: &[ProviderJobHandle], traces: &mut Vec<Trace>) {
    for _ in 0..100_000 {
        if observe(p, clock.now(), handles, traces) {
            return;
        }
        clock.advance(STEP);
    }
    panic!("jobs did not finish");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fifo_without_priority(sizes in prop::collection::vec(1usize..4, 1..12), gaps in prop::collection::vec(0u8..6, 12), background in 0usize..3) {
        let (p, clock) = mock(background);
        let mut handles = Vec::new();
        let mut traces = Vec::new();
        for (i, &n) in sizes.iter().enumerate() {
            handles.push(p.submit(DEV, &vec![doc(); n], 10, &SubmitOptions::default()).unwrap());
            observe(&p, clock.now(), &handles, &mut traces);
            step(&p, &clock, gaps[i], &handles, &mut traces);
        }
        run_to_completion(&p, &clock, &handles, &mut traces);
        for w in traces.windows(2) {
            prop_assert!(w[0].end.unwrap() < w[1].end.unwrap());
        }
    }

    #[test]
    fn priority_never_waits_behind_later_jobs(flags in prop::collection::vec(any::<bool>(), 2..12), gaps in prop::collection::vec(0u8..4, 12)) {
        let (p, clock) = mock(2);
        let mut handles = Vec::new();
        let mut traces = Vec::new();
        for (i, &priority) in flags.iter().enumerate() {
            let opts = SubmitOptions { priority, ..Default::default() };
            handles.push(p.submit(DEV, &[doc()], 10, &opts).unwrap());
            observe(&p, clock.now(), &handles, &mut traces);
            step(&p, &clock, gaps[i], &handles, &mut traces);
        }
        run_to_completion(&p, &clock, &handles, &mut traces);
        for (i, &pi) in flags.iter().enumerate() {
            for j in i + 1..flags.len() {
                if pi && !flags[j] {
                    prop_assert!(traces[i].start.unwrap() < traces[j].start.unwrap(), "priority {i} started after {j}");
                }
            }
        }
    }

    #[test]
    fn only_owner_starts_inside_window(offset in 0u8..8, length in 2u8..12, public in 1usize..6, owned in 1usize..4) {
        let (p, clock) = mock(1);
        let t0 = clock.now();
        let window = ReservationWindow { owner: "owner".into(), start_offset_s: offset as f64 * STEP, duration_s: length as f64 * STEP };
        let (start, end) = (t0 + window.start_offset_s, t0 + window.start_offset_s + window.duration_s);
        let mut handles = Vec::new();
        let mut traces = Vec::new();
        let mut is_owner = Vec::new();
        for _ in 0..owned {
            handles.push(p.submit(DEV, &[doc()], 10, &SubmitOptions { reservation: Some(window.clone()), ..Default::default() }).unwrap());
            is_owner.push(true);
        }
        for _ in 0..public {
            handles.push(p.submit(DEV, &[doc()], 10, &SubmitOptions::default()).unwrap());
            is_owner.push(false);
        }
        run_to_completion(&p, &clock, &handles, &mut traces);
        for (tr, &own) in traces.iter().zip(&is_owner) {
            if let Some(s) = tr.start {
                // Every event time lies on the step grid, so `s` is the exact start.
                let inside = start <= s && s < end;
                prop_assert!(own || !inside, "public job started at {s} inside [{start}, {end})");
            }
            if !own {
                prop_assert!(matches!(tr.terminal, Some(PollStatus::Done { .. })), "public job did not finish");
            }
        }
    }

    #[test]
    fn every_handle_reaches_one_terminal_state(ops in prop::collection::vec((0u8..3, any::<bool>(), 0u8..4), 1..20), seed in any::<u64>()) {
        let clock = ManualClock::new(1000.0);
        let mut d = local_simulator_descriptor();
        d.devices[0].num_qubits = 2;
        d.devices[0].coupling = CouplingMap::linear(2);
        d.devices[0].avg_exec_seconds_per_circuit = 1.0;
        let opts = MockOptions { time_scale: 1.0, failure_rate: 0.3, seed, background_jobs: false };
        let p = MockProvider::new(d, Arc::new(clock.clone()), opts);
        let mut handles = Vec::new();
        let mut traces = Vec::new();
        for (n, cancel_one, gap) in ops {
            handles.push(p.submit(DEV, &vec![doc(); n as usize + 1], 10, &SubmitOptions::default()).unwrap());
            if cancel_one {
                let victim = &handles[(seed as usize + handles.len()) % handles.len()];
                let before = p.poll(victim).unwrap();
                let cancelled = p.cancel(victim).unwrap();
                prop_assert_eq!(cancelled, matches!(before, PollStatus::Queued { .. }));
            }
            observe(&p, clock.now(), &handles, &mut traces);
            step(&p, &clock, gap, &handles, &mut traces);
        }
        run_to_completion(&p, &clock, &handles, &mut traces);
        prop_assert!(traces.iter().all(|t| t.terminal.is_some()));
        prop_assert_eq!(p.device_live(DEV).unwrap().queue_length, 0);
    }
}

#[test]
fn native_batch_returns_results_in_order() {
    let (p, clock) = mock(0);
    let mut docs = Vec::new();
    for k in 0..3 {
        let mut c = Circuit::new(2, 2);
        if k & 1 == 1 {
            c.x(0);
        }
        if k & 2 == 2 {
            c.x(1);
        }
        c.measure_all();
        docs.push(emit(&c, CircuitFormat::Qasm2));
    }
    let h = p.submit(DEV, &docs, 50, &SubmitOptions::default()).unwrap();
    clock.advance(3.0);
    let PollStatus::Done { results } = p.poll(&h).unwrap() else { panic!("not done") };
    let keys: Vec<&str> = results.iter().map(|r| r.counts.ranked()[0].0).collect();
    assert_eq!(keys, ["00", "01", "10"]);
}

#[test]
fn local_simulator_matches_direct_sampling() {
    let clock = ManualClock::new(0.0);
    let desc = local_simulator_descriptor();
    let noise = desc.devices[0].readout_errors.clone();
    let p = MockProvider::new(desc, Arc::new(clock.clone()), MockOptions { time_scale: 1.0, ..Default::default() });
    let mut c = Circuit::new(3, 3);
    c.h(0).cx(0, 1).ry(0.7, 2).cx(1, 2).t(2).swap(0, 2).measure_all();
    let opts = SubmitOptions { seeds: vec![77, 78], ..Default::default() };
    let docs = [emit(&c, CircuitFormat::Qjson), emit(&c, CircuitFormat::Qasm2)];
    let h = p.submit(DEV, &docs, 2000, &opts).unwrap();
    clock.advance(10.0);
    let PollStatus::Done { results } = p.poll(&h).unwrap() else { panic!("not done") };
    assert_eq!(results[0].counts, sample(&c, 2000, 77, Some(&noise)).unwrap());
    assert_eq!(results[1].counts, sample(&c, 2000, 78, Some(&noise)).unwrap());
}

#[test]
fn registry_exposes_catalog_providers() {
    let catalog = default_catalog();
    let reg = ProviderRegistry::from_catalog(&catalog, Arc::new(ManualClock::new(0.0)), &MockOptions::default());
    assert_eq!(reg.descriptors().len(), 8);
    let ibm = reg.for_device("ibmq-line-5").unwrap();
    assert_eq!(ibm.descriptor().id, "ibmq");
    let live = reg.live_catalog();
    let (_, dev) = live.device("ibmq-line-5").unwrap();
    assert_eq!(dev.queue_length, catalog.device("ibmq-line-5").unwrap().1.queue_length);
    let inspire = reg.get("quantum-inspire").unwrap();
    let err = inspire.submit("inspire-line-3", &[doc()], 10, &SubmitOptions::default()).unwrap_err();
    assert_eq!(err, ProviderError::DeviceOffline("inspire-line-3".into()));
}
