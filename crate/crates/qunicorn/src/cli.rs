// SPDX-License-Identifier: Apache-2.0

//! Command-line client and server launcher.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qunicorn_core::circuit::PauliObservable;
use qunicorn_core::formats::emit;
use qunicorn_core::job::JobState;
use qunicorn_core::mitigation::{MitigationLocus, MitigationOptions};
use qunicorn_core::scenarios::{
    edge_observables, grover_circuit, path_graph, qaoa_maxcut, ring_graph, vqe_batch, Formula, DEFAULT_FORMULA,
};
use qunicorn_core::simulator::expectation;
use qunicorn_core::{CircuitFormat, SourceDocument};
use serde::Serialize;
use serde_json::json;

use crate::api::Service;
use crate::client::{Client, ClientError, DEFAULT_URL, URL_ENV};
use crate::config::Config;
use crate::orchestrator::model::{CuttingOptions, ItemResult, Job, JobOptions, JobRequest, AUTO_TARGET};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_JOB_ERROR: u8 = 3;
pub const EXIT_CANCELLED: u8 = 4;
pub const EXIT_CONNECTION: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "qunicorn", version, about = "Run quantum circuits on many cloud offerings through one API")]
pub struct Cli {
    /// Service base URL.
    #[arg(long, global = true, env = URL_ENV, default_value = DEFAULT_URL)]
    pub endpoint: String,
    #[arg(long, global = true, value_enum, default_value_t = Output::Human)]
    pub output: Output,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Human,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Qasm2,
    Qjson,
}

impl From<FormatArg> for CircuitFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Qasm2 => CircuitFormat::Qasm2,
            FormatArg::Qjson => CircuitFormat::Qjson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LocusArg {
    Middleware,
    Provider,
}

impl From<LocusArg> for MitigationLocus {
    fn from(l: LocusArg) -> Self {
        match l {
            LocusArg::Middleware => MitigationLocus::Middleware,
            LocusArg::Provider => MitigationLocus::Provider,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the service.
    Serve {
        /// Config file; falls back to $QUNICORN_CONFIG, then defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Submit circuits and print the job id.
    Submit(JobArgs),
    /// Show a job's state.
    Status {
        job: String,
        /// Poll until the job is terminal.
        #[arg(long)]
        watch: bool,
    },
    /// Show a finished job's results.
    Results { job: String },
    /// Cancel a job that has not started running.
    Cancel { job: String },
    /// List jobs, newest first.
    Jobs {
        #[arg(long)]
        state: Option<String>,
        #[arg(long, default_value_t = 20)]
        limit: usize,
        #[arg(long, default_value_t = 0)]
        offset: usize,
    },
    /// List devices with live queue lengths.
    Devices {
        /// Only devices of this provider.
        #[arg(long)]
        provider: Option<String>,
    },
    /// List providers and their features.
    Providers,
    /// Estimate the cost of a job without running it.
    Estimate(JobArgs),
    /// Run a reference workload end to end against a running service.
    Scenario {
        #[command(subcommand)]
        which: Scenario,
    },
}

#[derive(Debug, Clone, Args)]
pub struct JobArgs {
    /// Circuit file; repeat for a batch.
    #[arg(short = 'f', long = "file", required = true)]
    pub files: Vec<PathBuf>,
    /// Source format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, default_value = AUTO_TARGET)]
    pub device: String,
    #[arg(long, default_value_t = 1024)]
    pub shots: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mitigate: Option<LocusArg>,
    /// Cut circuits wider than this many qubits.
    #[arg(long = "cut", value_name = "MAXW", requires = "observables")]
    pub cut: Option<usize>,
    /// Pauli observable such as "Z0 Z1"; repeatable.
    #[arg(long = "observable", value_name = "SPEC")]
    pub observables: Vec<String>,
    #[arg(long)]
    pub priority: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Scenario {
    /// Grover search for a 3-SAT formula, sent as QJSON to a QASM2-only device.
    #[command(name = "grover-3sat")]
    Grover3sat {
        #[arg(long, default_value = DEFAULT_FORMULA)]
        formula: String,
        #[arg(long, default_value = "ibmq-grid-16")]
        device: String,
        #[arg(long, default_value_t = 4096)]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum)]
        mitigate: Option<LocusArg>,
    },
    /// A batch of VQE ansatz circuits under one job.
    VqeBatch {
        #[arg(long, default_value_t = 12)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        qubits: usize,
        /// A provider without native batching gets a virtual batch.
        #[arg(long, default_value = "azure-line-6")]
        device: String,
        #[arg(long, default_value_t = 1024)]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// QAOA max-cut cut into narrower fragments, checked against the uncut value.
    QaoaCut {
        #[arg(long, default_value_t = 4)]
        nodes: usize,
        #[arg(long)]
        ring: bool,
        #[arg(long, default_value_t = 2)]
        max_width: usize,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = AUTO_TARGET)]
        device: String,
        /// Skip readout mitigation of the fragment results.
        #[arg(long)]
        raw: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        let code = match e {
            ClientError::Connection { .. } => EXIT_CONNECTION,
            _ => EXIT_JOB_ERROR,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult = Result<u8, Failure>;

struct Ctx {
    client: Client,
    output: Output,
}

impl Ctx {
    fn print<T: Serialize>(&self, value: &T, human: impl FnOnce() -> String) {
        let text = match self.output {
            Output::Json => serde_json::to_string_pretty(value).expect("serializable"),
            Output::Human => human(),
        };
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        let _ = writeln!(std::io::stdout().lock(), "{text}");
    }
}

fn read_doc(path: &PathBuf, format: Option<FormatArg>) -> Result<SourceDocument, Failure> {
    let format: CircuitFormat = match format {
        Some(f) => f.into(),
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("qasm") => CircuitFormat::Qasm2,
            Some("json") | Some("qjson") => CircuitFormat::Qjson,
            _ => return Err(Failure::usage(format!("cannot infer the format of {}; pass --format", path.display()))),
        },
    };
    let payload =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(SourceDocument::new(format, payload))
}

fn job_request(a: &JobArgs) -> Result<JobRequest, Failure> {
    let circuits = a.files.iter().map(|f| read_doc(f, a.format)).collect::<Result<Vec<_>, _>>()?;
    let observables = a
        .observables
        .iter()
        .map(|s| s.parse::<PauliObservable>().map_err(|e| Failure::usage(format!("bad observable {s:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut options = JobOptions { priority: a.priority, ..Default::default() };
    if let Some(l) = a.mitigate {
        options.mitigation = MitigationOptions { enabled: true, locus: l.into() };
    }
    if let Some(max_width) = a.cut {
        options.cutting = CuttingOptions { enabled: true, max_width, observables };
    } else if !observables.is_empty() {
        return Err(Failure::usage("--observable needs --cut"));
    }
    Ok(JobRequest { circuits, target: a.device.clone(), shots: a.shots, seed: a.seed, options })
}

fn state_code(state: JobState) -> u8 {
    match state {
        JobState::Error => EXIT_JOB_ERROR,
        JobState::Cancelled => EXIT_CANCELLED,
        _ => EXIT_OK,
    }
}

fn job_line(job: &Job) -> String {
    let mut line = format!("{}  {}", job.id, job.state);
    let queued: Vec<String> =
        job.items.iter().filter_map(|i| i.queue_position.map(|p| format!("#{}:{p}", i.index))).collect();
    if !queued.is_empty() {
        line.push_str(&format!("  queue {}", queued.join(" ")));
    }
    if let Some(e) = &job.error {
        line.push_str(&format!("  ({e})"));
    }
    line
}

fn render_result(r: &ItemResult) -> String {
    let mut out = format!("circuit {}", r.index);
    if let Some(c) = &r.counts {
        out.push_str(&format!("  shots {}\n", c.shots));
        for (k, n) in c.ranked().into_iter().take(16) {
            out.push_str(&format!("  {k}  {n}\n"));
        }
    } else {
        out.push('\n');
    }
    if let Some(q) = &r.quasi {
        out.push_str("  mitigated:\n");
        let mut v: Vec<_> = q.probs.iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
        for (k, p) in v.into_iter().take(16) {
            out.push_str(&format!("  {k}  {p:.4}\n"));
        }
    }
    for e in r.expectations.iter().flatten() {
        out.push_str(&format!("  <{}> = {:+.6} ± {:.6}\n", e.observable, e.value, e.std_error));
    }
    if let Some(m) = &r.mitigation {
        out.push_str(&format!("  mitigation: {:?}, clipped mass {:.3e}\n", m.locus, m.negative_mass));
    }
    if let Some(c) = &r.cutting {
        match &c.reason {
            None => out.push_str(&format!("  cut: {} fragment circuits\n", c.subcircuits)),
            Some(reason) => out.push_str(&format!("  not cut: {reason}\n")),
        }
    }
    out.trim_end().to_string()
}

fn watch(ctx: &Ctx, id: &str) -> Result<Job, Failure> {
    let mut last = None;
    let job = ctx.client.wait_for(id, |job| {
        if ctx.output == Output::Human && last != Some(job.state) {
            eprintln!("{}", job_line(job));
            last = Some(job.state);
        }
    })?;
    Ok(job)
}

fn run_command(ctx: &Ctx, command: Command) -> CliResult {
    match command {
        Command::Serve { .. } => unreachable!("handled before connecting"),
        Command::Submit(a) => {
            let id = ctx.client.submit(&job_request(&a)?)?;
            ctx.print(&json!({ "job_id": id }), || id.to_string());
            Ok(EXIT_OK)
        }
        Command::Status { job, watch: follow } => {
            let job = if follow { watch(ctx, &job)? } else { ctx.client.job(&job)? };
            ctx.print(&job, || job_line(&job));
            Ok(state_code(job.state))
        }
        Command::Results { job } => {
            let r = ctx.client.results(&job)?;
            ctx.print(&r, || r.results.iter().map(render_result).collect::<Vec<_>>().join("\n"));
            Ok(EXIT_OK)
        }
        Command::Cancel { job } => {
            let r = ctx.client.cancel(&job)?;
            ctx.print(&r, || {
                if r.cancelled {
                    "cancelled".into()
                } else {
                    "not cancelled: the job is already running or done".into()
                }
            });
            Ok(EXIT_OK)
        }
        Command::Jobs { state, limit, offset } => {
            let list = ctx.client.list(state.as_deref(), limit, offset)?;
            ctx.print(&list, || {
                let mut s = format!("{} jobs", list.total);
                for j in &list.jobs {
                    s.push_str(&format!(
                        "\n{}  {:<14} {}  {} circuit(s) -> {}",
                        j.id,
                        j.state.name(),
                        j.created_at.to_rfc3339(),
                        j.circuits,
                        j.target
                    ));
                }
                s
            });
            Ok(EXIT_OK)
        }
        Command::Devices { provider } => {
            let devices = match &provider {
                Some(p) => serde_json::to_value(ctx.client.provider_devices(p)?).expect("serializable"),
                None => serde_json::to_value(ctx.client.devices()?).expect("serializable"),
            };
            ctx.print(&devices, || {
                let mut s = format!("{:<22} {:>6} {:>6} {:<12} {:>9}", "DEVICE", "QUBITS", "QUEUE", "STATUS", "ERR_2Q");
                for d in devices.as_array().into_iter().flatten() {
                    let text = |k: &str| match &d[k] {
                        serde_json::Value::String(v) => v.clone(),
                        v => v.to_string(),
                    };
                    s.push_str(&format!(
                        "\n{:<22} {:>6} {:>6} {:<12} {:>9}",
                        text("id"),
                        text("num_qubits"),
                        text("queue_length"),
                        text("status"),
                        text("gate_error_2q")
                    ));
                }
                s
            });
            Ok(EXIT_OK)
        }
        Command::Providers => {
            let providers = ctx.client.providers()?;
            ctx.print(&providers, || {
                let mut s = String::new();
                for p in &providers {
                    let formats: Vec<&str> = p.accepted_formats.iter().map(|f| f.name()).collect();
                    let pricing: Vec<String> = p.pricing.iter().map(|m| format!("{}@{}", m.kind.name(), m.rate)).collect();
                    s.push_str(&format!(
                        "{:<20} formats={:<12} batch={:<5} mitigation={:<5} priority={:<5} slots={:<5} pricing={}  devices={}\n",
                        p.id,
                        formats.join(","),
                        p.native_batch,
                        p.native_mitigation,
                        p.access_models.prioritized_queue,
                        p.access_models.exclusive_slots,
                        pricing.join(","),
                        p.devices.len()
                    ));
                }
                s.trim_end().to_string()
            });
            Ok(EXIT_OK)
        }
        Command::Estimate(a) => {
            let e = ctx.client.estimate(&job_request(&a)?)?;
            ctx.print(&e, || {
                let mut s = format!(
                    "{:.4} {}  ({} circuit(s) on {})",
                    e.cost.amount,
                    e.cost.currency_unit,
                    e.circuits_executed,
                    e.devices.join(", ")
                );
                for line in &e.cost.breakdown {
                    let applied = if line.applied { "*" } else { " " };
                    s.push_str(&format!(
                        "\n {applied} {:<20} {:<14} rate {:<8} {:.4}",
                        line.device_id,
                        line.kind.name(),
                        line.rate,
                        line.amount
                    ));
                }
                s
            });
            Ok(EXIT_OK)
        }
        Command::Scenario { which } => scenario(ctx, which),
    }
}

fn finished(ctx: &Ctx, req: &JobRequest) -> Result<(Job, Vec<ItemResult>), Failure> {
    let id = ctx.client.submit(req)?.to_string();
    if ctx.output == Output::Human {
        eprintln!("submitted {id}");
    }
    let job = watch(ctx, &id)?;
    if job.state != JobState::Finished {
        return Err(Failure { code: state_code(job.state), message: job_line(&job) });
    }
    Ok((job, ctx.client.results(&id)?.results))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn scenario(ctx: &Ctx, which: Scenario) -> CliResult {
    let (pass, report) = match which {
        Scenario::Grover3sat { formula, device, shots, seed, mitigate } => {
            let f: Formula = formula.parse().map_err(|e| Failure::usage(format!("{e}")))?;
            let (circuit, layout) = grover_circuit(&f, None).map_err(|e| Failure::usage(format!("{e}")))?;
            let mut options = JobOptions::default();
            if let Some(l) = mitigate {
                options.mitigation = MitigationOptions { enabled: true, locus: l.into() };
            }
            let req = JobRequest {
                circuits: vec![emit(&circuit, CircuitFormat::Qjson)],
                target: device,
                shots,
                seed: Some(seed),
                options,
            };
            let (job, results) = finished(ctx, &req)?;
            let counts = results[0].counts.clone().unwrap_or_default();
            let mut expected: Vec<String> = f.solutions().into_iter().map(|a| f.key(a)).collect();
            let mut top: Vec<String> =
                counts.ranked().into_iter().take(expected.len()).map(|(k, _)| k.to_string()).collect();
            expected.sort();
            top.sort();
            let pass = top == expected;
            let report = json!({
                "scenario": "grover-3sat",
                "job_id": job.id,
                "formula": f.to_string(),
                "qubits": circuit.num_qubits,
                "iterations": layout.iterations,
                "device": job.items[0].device_id,
                "submitted_format": "qjson",
                "executed_format": job.items[0].translated_doc.as_ref().map(|d| d.format),
                "solutions": expected,
                "top": top,
                "mitigation": results[0].mitigation,
                "pass": pass,
            });
            (pass, report)
        }
        Scenario::VqeBatch { count, qubits, device, shots, seed } => {
            let circuits = vqe_batch(qubits, count, seed).iter().map(|c| emit(c, CircuitFormat::Qasm2)).collect();
            let req = JobRequest { circuits, target: device, shots, seed: Some(seed), options: JobOptions::default() };
            let (job, results) = finished(ctx, &req)?;
            let in_order = results.len() == count && results.iter().enumerate().all(|(i, r)| r.index == i);
            let states: Vec<JobState> = job.history.iter().map(|t| t.state).collect();
            let monotone = states.windows(2).all(|w| w[0].can_transition_to(w[1]));
            let top: Vec<String> = results
                .iter()
                .map(|r| {
                    r.counts.as_ref().and_then(|c| c.ranked().first().map(|(k, _)| k.to_string())).unwrap_or_default()
                })
                .collect();
            let pass = in_order && monotone;
            let report = json!({
                "scenario": "vqe-batch",
                "job_id": job.id,
                "batch": job.batch,
                "states": states,
                "results": results.len(),
                "most_likely": top,
                "pass": pass,
            });
            (pass, report)
        }
        Scenario::QaoaCut { nodes, ring, max_width, shots, seed, device, raw } => {
            let edges = if ring { ring_graph(nodes) } else { path_graph(nodes) };
            let circuit = qaoa_maxcut(nodes, &edges, &[0.4], &[0.3]);
            let observables = edge_observables(&edges);
            let options = JobOptions {
                cutting: CuttingOptions { enabled: true, max_width, observables: observables.clone() },
                mitigation: MitigationOptions { enabled: !raw, locus: MitigationLocus::Middleware },
                ..Default::default()
            };
            let req = JobRequest {
                circuits: vec![emit(&circuit, CircuitFormat::Qasm2)],
                target: device,
                shots,
                seed: Some(seed),
                options,
            };
            let (job, results) = finished(ctx, &req)?;
            let mut rows = Vec::new();
            let mut pass = true;
            for e in results[0].expectations.iter().flatten() {
                let reference = expectation(&circuit, &e.observable).map_err(|err| Failure::usage(err.to_string()))?;
                let ok = (e.value - reference).abs() <= 5.0 * e.std_error + 1e-9;
                pass &= ok;
                rows.push(json!({ "observable": e.observable.to_string(), "cut": e.value, "std_error": e.std_error, "uncut": reference, "ok": ok }));
            }
            let cut_applied = results[0].cutting.as_ref().is_some_and(|c| c.applied);
            pass &= cut_applied && rows.len() == observables.len();
            (
                pass,
                json!({ "scenario": "qaoa-cut", "job_id": job.id, "cutting": results[0].cutting, "edges": rows, "pass": pass }),
            )
        }
    };
    ctx.print(&report, || {
        let mut s = String::new();
        for (k, v) in report.as_object().into_iter().flatten() {
            if k != "pass" {
                s.push_str(&format!("{k}: {v}\n"));
            }
        }
        s.push_str(verdict(pass));
        s
    });
    Ok(if pass { EXIT_OK } else { EXIT_JOB_ERROR })
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        match signal(SignalKind::terminate()) {
            Ok(mut term) => {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = term.recv() => {}
                }
            }
            Err(_) => {
                let _ = tokio::signal::ctrl_c().await;
            }
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
    tracing::info!("shutting down");
}

fn serve(config: Option<PathBuf>) -> CliResult {
    let config = Config::resolve(config.as_deref()).map_err(|e| Failure::usage(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure { code: 1, message: e.to_string() })?;
    let service = Service::start(&config).map_err(|message| Failure { code: 1, message })?;
    let app = service.router();
    let addr = std::net::SocketAddr::new(config.bind_address, config.port);
    let served = runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(%addr, "listening");
        axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await
    });
    service.shutdown();
    served.map_err(|e| Failure { code: EXIT_CONNECTION, message: format!("cannot serve on {addr}: {e}") })?;
    Ok(EXIT_OK)
}

pub fn run(cli: Cli) -> ExitCode {
    let ctx = Ctx { client: Client::new(&cli.endpoint), output: cli.output };
    let result = match cli.command {
        Command::Serve { config } => serve(config),
        command => run_command(&ctx, command),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
