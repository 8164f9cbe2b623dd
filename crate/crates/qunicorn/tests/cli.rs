// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use qunicorn::api::Service;
use qunicorn::config::Config;
use serde_json::Value;

struct Server {
    url: String,
    _dir: tempfile::TempDir,
}

fn server() -> Server {
    server_with(0.0005)
}

fn server_with(time_scale: f64) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let config = Config { persistence_path: dir.path().join("q.redb"), time_scale, ..Config::default() };
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        let service = Service::start(&config).unwrap();
        let app = service.router();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    Server { url: format!("http://{}", rx.recv().unwrap()), _dir: dir }
}

fn cli(url: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qunicorn"))
        .arg("--endpoint")
        .arg(url)
        .args(args)
        .env("QUNICORN_LOG", "off")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn write_bell(dir: &Path) -> String {
    let path = dir.join("bell.qasm");
    std::fs::write(
        &path,
        "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[2];\nh q[0];\ncx q[0],q[1];\nmeasure q -> c;\n",
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn submit_watch_and_results() {
    let s = server();
    let dir = tempfile::tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = cli(&s.url, &["submit", "-f", &bell, "--format", "qasm2", "--device", "auto", "--shots", "1000"]);
    assert!(out.status.success(), "{out:?}");
    let id = stdout(&out);
    assert_eq!(id.len(), 36);

    let out = cli(&s.url, &["status", &id, "--watch"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("FINISHED"));

    let out = cli(&s.url, &["--output", "json", "results", &id]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["results"][0]["counts"]["shots"], 1000);

    let out = cli(&s.url, &["results", &id]);
    assert!(stdout(&out).contains("shots 1000"));

    // Finished jobs cannot be cancelled.
    let out = cli(&s.url, &["cancel", &id]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_codes_for_expected_failures() {
    let s = server();
    let out = cli(&s.url, &["results", "UNKNOWN"]);
    assert_ne!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown job"), "{err}");
    assert!(!err.contains("panicked"));

    let dir = tempfile::tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = cli(&s.url, &["submit", "-f", &bell, "--device", "inspire-line-3"]);
    let id = stdout(&out);
    let out = cli(&s.url, &["status", &id, "--watch"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("device offline"));

    assert_eq!(cli(&s.url, &["submit"]).status.code(), Some(2));
    assert_eq!(cli(&s.url, &["submit", "-f", "/no/such/file.qasm"]).status.code(), Some(2));
    assert_eq!(cli("http://127.0.0.1:1", &["providers"]).status.code(), Some(5));
}

#[test]
fn cancelled_jobs_exit_with_four() {
    // Slow devices keep the job queued long enough to cancel.
    let s = server_with(1.0);
    let url = s.url.clone();
    let dir = tempfile::tempdir().unwrap();
    let bell = write_bell(dir.path());
    let id = stdout(&cli(&url, &["submit", "-f", &bell, "--device", "ibmq-heavyhex-7"]));
    let out = cli(&url, &["--output", "json", "cancel", &id]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["cancelled"], true);
    let out = cli(&url, &["status", &id]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn catalog_and_estimate_commands() {
    let s = server();
    let out = cli(&s.url, &["--output", "json", "providers"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 8);
    let out = cli(&s.url, &["devices", "--provider", "ibmq"]);
    assert_eq!(stdout(&out).lines().count(), 4);

    let dir = tempfile::tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = cli(
        &s.url,
        &[
            "--output",
            "json",
            "estimate",
            "-f",
            &bell,
            "-f",
            &bell,
            "-f",
            &bell,
            "-f",
            &bell,
            "--device",
            "ionq-aria-11",
        ],
    );
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["amount"], 1.2);
}

#[test]
fn scenarios_pass_against_a_live_service() {
    let s = server();
    for args in [
        &["scenario", "grover-3sat", "--mitigate", "middleware"][..],
        &["scenario", "vqe-batch"][..],
        &["scenario", "qaoa-cut"][..],
    ] {
        let mut full = vec!["--output", "json"];
        full.extend_from_slice(args);
        let out = cli(&s.url, &full);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["pass"], true, "{v}");
    }
}
