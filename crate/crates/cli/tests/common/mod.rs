#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use smsp_core::ontology::save_ontology;
use smsp_service::{router, Store};
use smsp_testkit::fixture;
use smsp_testkit::fixtures::{read, security_core};
use tower::ServiceExt;

pub fn smsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smsp")).args(args).output().expect("spawn smsp")
}

/// Writes a pipeline config for the two cloud clauses into `dir`.
pub fn cloud_config(dir: &Path, b: &str) -> std::path::PathBuf {
    let cfg = json!({
        "support": fixture("security-core.json"),
        "policies": [
            {"lang": "rei", "domain_id": "A", "path": fixture("cloud/domain-a.rei")},
            {"lang": b.split('.').next_back().unwrap(), "domain_id": "B", "path": fixture(b)},
        ],
        "output_dir": "out",
    });
    let path = dir.join("pipeline.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    path
}

pub fn service() -> (Router, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    (router(store), dir)
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

pub async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

pub fn cloud_request() -> Value {
    json!({
        "support": serde_json::from_slice::<Value>(&save_ontology(&security_core())).unwrap(),
        "policies": [
            {"lang": "rei", "domain_id": "A", "text": read("cloud/domain-a.rei")},
            {"lang": "rei", "domain_id": "B", "text": read("cloud/domain-b.rei")},
        ]
    })
}

/// Export queries compared between the CLI and the service.
pub const EXPORTS: &[(&str, &str, Option<&str>)] = &[
    ("report", "canonical", None),
    ("correspondences", "canonical", None),
    ("enriched_ontology", "canonical", None),
    ("enriched_ontology", "turtle", None),
    ("harmonized_policies", "canonical", None),
    ("harmonized_policies", "canonical", Some("B")),
];

/// Runs the cloud example through the binary and through the service,
/// applying the first proposal of the single conflict in both, and returns
/// the mismatching export names (empty when everything is byte-identical).
pub async fn cli_service_mismatches() -> Result<Vec<String>, String> {
    let (app, _store) = service();
    let (status, created) = call_json(&app, "POST", "/sessions", Some(cloud_request())).await;
    if status != StatusCode::CREATED {
        return Err(format!("create: {status} {created}"));
    }
    let id = created["session_id"].as_str().unwrap().to_string();
    let (_, list) = call_json(&app, "GET", &format!("/sessions/{id}/conflicts"), None).await;
    let cid = list[0]["id"].as_str().ok_or("no conflict")?.to_string();
    let action = list[0]["proposals"][0].clone();
    let (status, out) = call_json(&app, "POST", &format!("/sessions/{id}/conflicts/{cid}/decision"), Some(action.clone())).await;
    if status != StatusCode::OK {
        return Err(format!("decision: {status} {out}"));
    }

    let tmp = tempfile::tempdir().unwrap();
    let cfg = cloud_config(tmp.path(), "cloud/domain-b.rei");
    let decisions = tmp.path().join("decisions.json");
    std::fs::write(&decisions, serde_json::to_vec(&json!([action])).unwrap()).unwrap();
    let run = smsp(&["resolve", "--config", cfg.to_str().unwrap(), "--decisions", decisions.to_str().unwrap()]);
    if run.status.code() != Some(0) {
        return Err(format!("cli resolve exited {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr)));
    }
    let session = tmp.path().join("out/session.json");

    let mut bad = Vec::new();
    for (what, format, domain) in EXPORTS {
        let mut uri = format!("/sessions/{id}/export?what={what}&format={format}");
        let mut args = vec!["export", "--session", session.to_str().unwrap(), "--what", what, "--format", format];
        if let Some(d) = domain {
            uri.push_str(&format!("&domain={d}"));
            args.extend(["--domain", d]);
        }
        let (status, from_service) = call(&app, "GET", &uri, None).await;
        let from_cli = smsp(&args);
        if status != StatusCode::OK || from_cli.status.code() != Some(0) || from_cli.stdout != from_service {
            bad.push(format!("{what}/{format}/{}", domain.unwrap_or("-")));
        }
    }
    Ok(bad)
}
