// SPDX-License-Identifier: Apache-2.0

//! Job orchestration. Jobs advance through their lifecycle in small
//! steps executed by a worker pool; each step loads the job from the
//! store, does its work under a per-job lock and persists the outcome
//! before anything else can observe it.

pub mod model;
pub mod plan;
mod postprocess;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};
use qunicorn_core::catalog::Catalog;
use qunicorn_core::formats::translate;
use qunicorn_core::job::{check_transition, IllegalTransition, JobState};
use qunicorn_core::mitigation::MitigationLocus;
use qunicorn_core::scheduling::CostEstimate;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::clock::{to_datetime, Clock};
use crate::provider::{PollStatus, ProviderError, ProviderRegistry, SubmitOptions};
use crate::store::{Store, StoreError, Table, WriteBatch};
use model::{CancelOutcome, ItemResult, ItemState, Job, JobItem, JobRequest, JobSummary, SubmissionStatus, Transition};
use plan::{plan_job, validate_request, PlanError};

#[derive(Debug, Clone)]
pub struct OrchestratorConfig {
    pub worker_count: usize,
    pub poll_interval: Duration,
}

impl Default for OrchestratorConfig {
    fn default() -> Self {
        OrchestratorConfig { worker_count: 4, poll_interval: Duration::from_millis(20) }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("unknown job {0}")]
    UnknownJob(Uuid),
    #[error("job {id} is {state}; results are available once it is FINISHED")]
    NotFinished { id: Uuid, state: JobState },
    #[error(transparent)]
    IllegalTransition(#[from] IllegalTransition),
    #[error(transparent)]
    Invalid(#[from] PlanError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Cost and placement of a request, computed without running it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    #[serde(flatten)]
    pub cost: CostEstimate,
    pub devices: Vec<String>,
    /// Circuits that would be executed, counting cut fragments.
    pub circuits_executed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balanced_makespan_seconds: Option<f64>,
}

enum Next {
    Now,
    After(Duration),
    Done,
}

#[derive(Default)]
struct Schedule {
    ready: VecDeque<Uuid>,
    delayed: BinaryHeap<Reverse<(Instant, Uuid)>>,
    stopping: bool,
}

struct Inner {
    store: Arc<Store>,
    registry: ProviderRegistry,
    clock: Arc<dyn Clock>,
    config: OrchestratorConfig,
    schedule: Mutex<Schedule>,
    wake: Condvar,
    job_locks: Mutex<HashMap<Uuid, Arc<Mutex<()>>>>,
}

pub struct Orchestrator {
    inner: Arc<Inner>,
    workers: Mutex<Vec<JoinHandle<()>>>,
}

fn key(id: Uuid) -> String {
    id.to_string()
}

fn transition(job: &mut Job, to: JobState, clock: &dyn Clock) {
    check_transition(job.state, to).expect("the pipeline only takes legal edges");
    let at = to_datetime(clock.now());
    job.state = to;
    job.updated_at = at;
    job.history.push(Transition { state: to, at });
}

impl Orchestrator {
    /// Resumes every unfinished job found in the store, then starts the workers.
    pub fn start(
        store: Arc<Store>,
        registry: ProviderRegistry,
        clock: Arc<dyn Clock>,
        config: OrchestratorConfig,
    ) -> Result<Orchestrator, StoreError> {
        let inner = Arc::new(Inner {
            store,
            registry,
            clock,
            config,
            schedule: Mutex::new(Schedule::default()),
            wake: Condvar::new(),
            job_locks: Mutex::new(HashMap::new()),
        });
        let mut resumed = 0;
        for (_, job) in inner.store.scan::<Job>(Table::Jobs)? {
            if !job.state.is_terminal() {
                inner.schedule_now(job.id);
                resumed += 1;
            }
        }
        if resumed > 0 {
            tracing::info!(resumed, "resuming unfinished jobs");
        }
        let workers = (0..inner.config.worker_count.max(1))
            .map(|i| {
                let inner = inner.clone();
                std::thread::Builder::new()
                    .name(format!("qunicorn-worker-{i}"))
                    .spawn(move || inner.work())
                    .expect("spawn worker")
            })
            .collect();
        Ok(Orchestrator { inner, workers: Mutex::new(workers) })
    }

    pub fn registry(&self) -> &ProviderRegistry {
        &self.inner.registry
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.inner.store
    }

    /// Catalog with live queue lengths and device status.
    pub fn live_catalog(&self) -> Catalog {
        self.inner.registry.live_catalog()
    }

    /// Records the job as RECEIVED and hands it to the workers.
    pub fn submit(&self, request: JobRequest) -> Result<Uuid, OrchestratorError> {
        validate_request(&request, &self.live_catalog())?;
        let id = Uuid::new_v4();
        let now = to_datetime(self.inner.clock.now());
        let seed = request.seed.unwrap_or_else(|| u64::from_le_bytes(id.as_bytes()[..8].try_into().expect("8 bytes")));
        let job = Job {
            id,
            created_at: now,
            updated_at: now,
            state: JobState::Received,
            items: (0..request.circuits.len()).map(JobItem::pending).collect(),
            request,
            seed,
            error: None,
            history: vec![Transition { state: JobState::Received, at: now }],
            batch: None,
            cost: None,
            plan: None,
        };
        self.inner.store.put(Table::Jobs, &key(id), &job)?;
        self.inner.schedule_now(id);
        Ok(id)
    }

    fn load(&self, id: Uuid) -> Result<Job, OrchestratorError> {
        self.inner.store.get::<Job>(Table::Jobs, &key(id))?.ok_or(OrchestratorError::UnknownJob(id))
    }

    /// Public view: bookkeeping removed, results attached once finished.
    pub fn job(&self, id: Uuid) -> Result<Job, OrchestratorError> {
        let mut job = self.load(id)?;
        job.plan = None;
        if job.state == JobState::Finished {
            let results: Vec<ItemResult> = self.inner.store.get(Table::Results, &key(id))?.unwrap_or_default();
            for (item, r) in job.items.iter_mut().zip(results) {
                item.result = Some(r);
            }
        }
        Ok(job)
    }

    pub fn results(&self, id: Uuid) -> Result<Vec<ItemResult>, OrchestratorError> {
        let job = self.load(id)?;
        if job.state != JobState::Finished {
            return Err(OrchestratorError::NotFinished { id, state: job.state });
        }
        Ok(self.inner.store.get(Table::Results, &key(id))?.unwrap_or_default())
    }

    /// Jobs newest first, optionally filtered by state; returns the page and the total count.
    pub fn list(
        &self,
        state: Option<JobState>,
        limit: usize,
        offset: usize,
    ) -> Result<(Vec<JobSummary>, usize), OrchestratorError> {
        let mut jobs: Vec<JobSummary> = self
            .inner
            .store
            .scan::<Job>(Table::Jobs)?
            .iter()
            .map(|(_, j)| JobSummary::from(j))
            .filter(|j| state.is_none_or(|s| j.state == s))
            .collect();
        jobs.sort_by(|a, b| b.created_at.cmp(&a.created_at).then(a.id.cmp(&b.id)));
        let total = jobs.len();
        Ok((jobs.into_iter().skip(offset).take(limit).collect(), total))
    }

    pub fn estimate(&self, request: &JobRequest) -> Result<EstimateReport, PlanError> {
        let planned = plan_job(request, request.seed.unwrap_or(0), &self.live_catalog())?;
        Ok(EstimateReport {
            cost: planned.cost,
            devices: planned.batch.lanes.iter().map(|l| l.device_id.clone()).collect(),
            circuits_executed: planned.plan.tasks.len(),
            balanced_makespan_seconds: planned.batch.balanced_makespan_seconds,
        })
    }

    /// Cancels a job that has not started running. Already-cancelled jobs
    /// report `false`; finished or failed jobs cannot be cancelled.
    pub fn cancel(&self, id: Uuid) -> Result<CancelOutcome, OrchestratorError> {
        let lock = self.inner.job_lock(id);
        let _guard = lock.lock();
        let mut job = self.load(id)?;
        let clock = self.inner.clock.as_ref();
        let cancelled = match job.state {
            JobState::Finished | JobState::Error => {
                return Err(IllegalTransition { from: job.state, to: JobState::Cancelled }.into());
            }
            JobState::Cancelled | JobState::Running | JobState::Postprocessing => false,
            JobState::Received | JobState::Queued | JobState::Preparing => {
                transition(&mut job, JobState::Cancelled, clock);
                true
            }
            JobState::Submitted => self.inner.cancel_submitted(&mut job),
        };
        if cancelled {
            for item in &mut job.items {
                item.state = ItemState::Cancelled;
                item.queue_position = None;
            }
        }
        self.inner.store.put(Table::Jobs, &key(id), &job)?;
        Ok(CancelOutcome { cancelled })
    }

    /// Blocks until the job is terminal or the timeout passes.
    pub fn wait_terminal(&self, id: Uuid, timeout: Duration) -> Result<Job, OrchestratorError> {
        let deadline = Instant::now() + timeout;
        loop {
            let job = self.job(id)?;
            if job.state.is_terminal() || Instant::now() >= deadline {
                return Ok(job);
            }
            std::thread::sleep(Duration::from_millis(5));
        }
    }

    /// Stops the workers after their current step. Unfinished jobs stay in
    /// the store and resume on the next start.
    pub fn shutdown(&self) {
        self.inner.schedule.lock().stopping = true;
        self.inner.wake.notify_all();
        for w in self.workers.lock().drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for Orchestrator {
    fn drop(&mut self) {
        self.shutdown();
    }
}

impl Inner {
    fn job_lock(&self, id: Uuid) -> Arc<Mutex<()>> {
        self.job_locks.lock().entry(id).or_default().clone()
    }

    fn schedule_now(&self, id: Uuid) {
        self.schedule.lock().ready.push_back(id);
        self.wake.notify_one();
    }

    fn schedule_after(&self, id: Uuid, delay: Duration) {
        self.schedule.lock().delayed.push(Reverse((Instant::now() + delay, id)));
        self.wake.notify_one();
    }

    fn next_job(&self) -> Option<Uuid> {
        let mut s = self.schedule.lock();
        loop {
            if s.stopping {
                return None;
            }
            let now = Instant::now();
            while s.delayed.peek().is_some_and(|Reverse((t, _))| *t <= now) {
                let Reverse((_, id)) = s.delayed.pop().expect("peeked");
                s.ready.push_back(id);
            }
            if let Some(id) = s.ready.pop_front() {
                return Some(id);
            }
            match s.delayed.peek() {
                Some(Reverse((t, _))) => {
                    let t = *t;
                    self.wake.wait_until(&mut s, t);
                }
                None => self.wake.wait(&mut s),
            }
        }
    }

    fn work(&self) {
        while let Some(id) = self.next_job() {
            let next = match self.step(id) {
                Ok(n) => n,
                Err(e) => {
                    tracing::error!(job = %id, error = %e, "step failed; retrying");
                    Next::After(Duration::from_secs(1))
                }
            };
            match next {
                Next::Now => self.schedule_now(id),
                Next::After(d) => self.schedule_after(id, d),
                Next::Done => {
                    self.job_locks.lock().remove(&id);
                }
            }
        }
    }

    fn save(&self, job: &Job) -> Result<(), StoreError> {
        self.store.put(Table::Jobs, &key(job.id), job)
    }

    fn step(&self, id: Uuid) -> Result<Next, StoreError> {
        let lock = self.job_lock(id);
        let _guard = lock.lock();
        let Some(mut job) = self.store.get::<Job>(Table::Jobs, &key(id))? else {
            return Ok(Next::Done);
        };
        let clock = self.clock.as_ref();
        match job.state {
            JobState::Received => {
                transition(&mut job, JobState::Queued, clock);
                self.save(&job)?;
                Ok(Next::Now)
            }
            JobState::Queued => {
                transition(&mut job, JobState::Preparing, clock);
                self.save(&job)?;
                Ok(Next::Now)
            }
            JobState::Preparing => self.prepare(job),
            JobState::Submitted | JobState::Running => self.advance(job),
            JobState::Postprocessing => self.postprocess(job),
            JobState::Finished | JobState::Error | JobState::Cancelled => Ok(Next::Done),
        }
    }

    fn fail(&self, job: &mut Job, stage: &str, message: impl std::fmt::Display) {
        tracing::warn!(job = %job.id, stage, %message, "job failed");
        job.error = Some(format!("{stage}: {message}"));
        if let Some(plan) = &mut job.plan {
            for lane in &mut plan.lanes {
                for sub in &mut lane.submissions {
                    if sub.status == SubmissionStatus::Queued {
                        if let (Some(h), Some(c)) = (&sub.handle, self.registry.get(&lane.provider_id)) {
                            if c.cancel(h).unwrap_or(false) {
                                sub.status = SubmissionStatus::Cancelled;
                            }
                        }
                    }
                }
            }
        }
        for item in &mut job.items {
            if item.state != ItemState::Done {
                item.state = ItemState::Failed;
                item.queue_position = None;
            }
        }
        transition(job, JobState::Error, self.clock.as_ref());
    }

    fn prepare(&self, mut job: Job) -> Result<Next, StoreError> {
        // A restart in this state simply plans again.
        match plan_job(&job.request, job.seed, &self.registry.live_catalog()) {
            Err(e) => {
                self.fail(&mut job, e.stage(), &e);
                self.save(&job)?;
                Ok(Next::Done)
            }
            Ok(planned) => {
                job.plan = Some(planned.plan);
                job.items = planned.items;
                job.batch = Some(planned.batch);
                job.cost = Some(planned.cost);
                if let Err((stage, e)) = self.pump(&mut job) {
                    self.fail(&mut job, stage, e);
                    self.save(&job)?;
                    return Ok(Next::Done);
                }
                transition(&mut job, JobState::Submitted, self.clock.as_ref());
                self.refresh_items(&mut job);
                self.save(&job)?;
                Ok(Next::After(self.config.poll_interval))
            }
        }
    }

    /// Submits a lane's head submission.
    fn submit_head(&self, job: &mut Job, lane: usize) -> Result<(), String> {
        let opts = &job.request.options;
        let shots = job.request.shots;
        let plan = job.plan.as_mut().expect("planned");
        let (provider_id, device_id) = (plan.lanes[lane].provider_id.clone(), plan.lanes[lane].device_id.clone());
        let connector = self.registry.get(&provider_id).ok_or_else(|| format!("unknown provider {provider_id}"))?;
        let head =
            plan.lanes[lane].submissions.iter().position(|s| s.status != SubmissionStatus::Done).expect("pending head");
        let tasks = plan.lanes[lane].submissions[head].tasks.clone();
        let options = SubmitOptions {
            seeds: tasks.iter().map(|&t| plan.tasks[t].seed).collect(),
            priority: opts.priority,
            reservation: opts.reservation.clone(),
            mitigate: opts.mitigation.enabled && opts.mitigation.locus == MitigationLocus::Provider,
        };
        let mut translated = false;
        let handle = loop {
            let docs: Vec<_> = tasks.iter().map(|&t| plan.tasks[t].doc.clone()).collect();
            match connector.submit(&device_id, &docs, shots, &options) {
                Ok(h) => break h,
                Err(ProviderError::FormatRejected(f)) if !translated => {
                    let target = connector.descriptor().accepted_formats[0];
                    tracing::debug!(job = %job.id, from = %f, to = %target, "translating for provider");
                    for &t in &tasks {
                        plan.tasks[t].doc = translate(&plan.tasks[t].doc, target).map_err(|e| e.to_string())?;
                    }
                    translated = true;
                }
                Err(e) => return Err(e.to_string()),
            }
        };
        let sub = &mut plan.lanes[lane].submissions[head];
        sub.handle = Some(handle);
        sub.status = SubmissionStatus::Queued;
        Ok(())
    }

    /// Submits pending heads and polls outstanding ones, lane by lane.
    fn pump(&self, job: &mut Job) -> Result<(), (&'static str, String)> {
        let lanes = job.plan.as_ref().expect("planned").lanes.len();
        for lane in 0..lanes {
            loop {
                let plan = job.plan.as_mut().expect("planned");
                let l = &mut plan.lanes[lane];
                let connector = self.registry.get(&l.provider_id).cloned();
                let Some(sub) = l.head_mut() else { break };
                match sub.status {
                    SubmissionStatus::Pending => {
                        // Poll right away so the queue position is known.
                        self.submit_head(job, lane).map_err(|e| ("submit", e))?;
                    }
                    SubmissionStatus::Queued | SubmissionStatus::Running => {
                        let connector = connector.ok_or(("poll", "provider vanished".to_string()))?;
                        let handle = sub.handle.clone().expect("submitted");
                        match connector.poll(&handle) {
                            Ok(PollStatus::Queued { position }) => {
                                sub.status = SubmissionStatus::Queued;
                                sub.queue_position = Some(position);
                                break;
                            }
                            Ok(PollStatus::Running) => {
                                sub.status = SubmissionStatus::Running;
                                sub.started = true;
                                sub.queue_position = None;
                                break;
                            }
                            Ok(PollStatus::Done { results }) => {
                                sub.status = SubmissionStatus::Done;
                                sub.started = true;
                                sub.queue_position = None;
                                sub.results = results;
                            }
                            Ok(PollStatus::Failed { reason }) => return Err(("execute", reason)),
                            Ok(PollStatus::Cancelled) => return Err(("execute", "provider cancelled the job".into())),
                            Err(ProviderError::UnknownHandle(_)) => {
                                // The provider forgot the job (e.g. it restarted): run it again.
                                sub.status = SubmissionStatus::Pending;
                                sub.handle = None;
                                sub.queue_position = None;
                            }
                            Err(e) => return Err(("poll", e.to_string())),
                        }
                    }
                    SubmissionStatus::Done | SubmissionStatus::Failed | SubmissionStatus::Cancelled => break,
                }
            }
        }
        Ok(())
    }

    /// Mirrors submission progress into the per-item view.
    fn refresh_items(&self, job: &mut Job) {
        let Some(plan) = &job.plan else { return };
        for (i, item) in job.items.iter_mut().enumerate() {
            if matches!(item.state, ItemState::Done | ItemState::Failed | ItemState::Cancelled) {
                continue;
            }
            let tasks = plan.items[i].tasks();
            let mut first_handle = None;
            let (mut any_started, mut any_submitted, mut position) = (false, false, None::<usize>);
            for lane in &plan.lanes {
                for sub in &lane.submissions {
                    if !sub.tasks.iter().any(|t| tasks.contains(t)) {
                        continue;
                    }
                    if first_handle.is_none() && sub.tasks.contains(&tasks[0]) {
                        first_handle = sub.handle.clone();
                    }
                    any_started |= sub.started;
                    any_submitted |= sub.handle.is_some();
                    if let Some(p) = sub.queue_position {
                        position = Some(position.map_or(p, |q| q.min(p)));
                    }
                }
            }
            item.state = if any_started {
                ItemState::Running
            } else if any_submitted {
                ItemState::Queued
            } else {
                ItemState::Pending
            };
            item.queue_position = if any_started { None } else { position };
            if first_handle.is_some() {
                item.handle = first_handle;
            }
            item.translated_doc = Some(plan.tasks[tasks[0]].doc.clone());
        }
    }

    fn advance(&self, mut job: Job) -> Result<Next, StoreError> {
        let before = job.clone();
        if let Err((stage, e)) = self.pump(&mut job) {
            self.fail(&mut job, stage, e);
            self.save(&job)?;
            return Ok(Next::Done);
        }
        self.refresh_items(&mut job);
        let plan = job.plan.as_ref().expect("planned");
        let started = plan.submissions().any(|s| s.started);
        let all_done = plan.submissions().all(|s| s.status == SubmissionStatus::Done);
        let clock = self.clock.as_ref();
        if started && job.state == JobState::Submitted {
            transition(&mut job, JobState::Running, clock);
            self.save(&job)?;
        }
        if all_done {
            transition(&mut job, JobState::Postprocessing, clock);
            self.save(&job)?;
            return Ok(Next::Now);
        }
        if job != before {
            job.updated_at = to_datetime(clock.now());
            self.save(&job)?;
        }
        Ok(Next::After(self.config.poll_interval))
    }

    fn postprocess(&self, mut job: Job) -> Result<Next, StoreError> {
        let plan = job.plan.as_ref().expect("planned");
        match postprocess::item_results(&job.request, plan, &self.registry.live_catalog()) {
            Err(e) => {
                self.fail(&mut job, "postprocess", e);
                self.save(&job)?;
            }
            Ok(results) => {
                for item in &mut job.items {
                    item.state = ItemState::Done;
                    item.queue_position = None;
                }
                transition(&mut job, JobState::Finished, self.clock.as_ref());
                let mut batch = WriteBatch::default();
                batch.put(Table::Results, &key(job.id), &results).put(Table::Jobs, &key(job.id), &job);
                self.store.commit(batch)?;
            }
        }
        Ok(Next::Done)
    }

    /// Withdraws every queued submission. If one has already started, the
    /// withdrawn ones are resubmitted and the job carries on running.
    fn cancel_submitted(&self, job: &mut Job) -> bool {
        let clock = self.clock.clone();
        let _ = self.pump(job);
        let plan = job.plan.as_mut().expect("submitted jobs are planned");
        if plan.submissions().any(|s| s.started) {
            transition(job, JobState::Running, clock.as_ref());
            return false;
        }
        let mut withdrawn = Vec::new();
        let mut refused = false;
        for (li, lane) in plan.lanes.iter_mut().enumerate() {
            let Some(connector) = self.registry.get(&lane.provider_id) else { continue };
            for (si, sub) in lane.submissions.iter_mut().enumerate() {
                if let (SubmissionStatus::Queued, Some(h)) = (sub.status, &sub.handle) {
                    if connector.cancel(h).unwrap_or(false) {
                        withdrawn.push((li, si));
                    } else {
                        refused = true;
                    }
                }
            }
        }
        if refused {
            for (li, si) in withdrawn {
                let sub = &mut plan.lanes[li].submissions[si];
                sub.status = SubmissionStatus::Pending;
                sub.handle = None;
                sub.queue_position = None;
            }
            transition(job, JobState::Running, clock.as_ref());
            return false;
        }
        for (li, si) in withdrawn {
            plan.lanes[li].submissions[si].status = SubmissionStatus::Cancelled;
        }
        transition(job, JobState::Cancelled, clock.as_ref());
        true
    }
}
