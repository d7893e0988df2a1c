use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use smsp_core::ontology::{load_ontology, save_ontology};
use smsp_core::session::SessionState;
use smsp_service::{router, Store};
use smsp_testkit::fixtures::{read, security_core};
use tower::ServiceExt;

struct Harness {
    app: Router,
    store: Arc<Store>,
    _dir: tempfile::TempDir,
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    Harness { app: router(store.clone()), store, _dir: dir }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

fn support() -> Value {
    serde_json::from_slice(&save_ontology(&security_core())).unwrap()
}

fn cloud_request() -> Value {
    json!({
        "support": support(),
        "policies": [
            {"lang": "rei", "domain_id": "A", "text": read("cloud/domain-a.rei")},
            {"lang": "rei", "domain_id": "B", "text": read("cloud/domain-b.rei")},
        ]
    })
}

async fn cloud_session(h: &Harness) -> String {
    let (status, body) = call_json(&h.app, "POST", "/sessions", Some(cloud_request())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

fn stored(h: &Harness, id: &str) -> Vec<u8> {
    std::fs::read(h.store.dir().join(format!("{id}.json"))).unwrap()
}

#[tokio::test]
async fn create_reports_counts_and_is_idempotent() {
    let h = harness();
    let (status, body) = call_json(&h.app, "POST", "/sessions", Some(cloud_request())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["summary"]["open"], json!({"naming_synonym": 1, "naming_homonym": 0, "modality_opposition": 0}));
    let (status, again) = call_json(&h.app, "POST", "/sessions", Some(cloud_request())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, body);
}

#[tokio::test]
async fn create_errors() {
    let h = harness();
    let mut one = cloud_request();
    one["policies"].as_array_mut().unwrap().pop();
    let (status, body) = call_json(&h.app, "POST", "/sessions", Some(one)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "bad_request");

    let mut broken = cloud_request();
    broken["policies"][1]["text"] = json!("has(Q, allow(x, [])");
    let (status, body) = call_json(&h.app, "POST", "/sessions", Some(broken)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "parse_error");
    assert_eq!(body["location"]["domain_id"], "B");
    assert_eq!(body["location"]["line"], 1);

    let mut bad_so = cloud_request();
    bad_so["support"]["relations"]
        .as_array_mut()
        .unwrap()
        .push(json!({"source": "so#Nope", "target": "so#Permit", "type": "is_a", "provenance": "authored", "confidence": 1.0}));
    let (status, body) = call_json(&h.app, "POST", "/sessions", Some(bad_so)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_ontology");

    let (status, body) = call_json(&h.app, "POST", "/sessions", Some(json!({"nope": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "bad_request");
}

#[tokio::test]
async fn identical_domains_have_no_conflicts() {
    let h = harness();
    let mut req = cloud_request();
    req["policies"][1]["text"] = json!(read("cloud/domain-a.rei"));
    let (status, body) = call_json(&h.app, "POST", "/sessions", Some(req)).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["summary"]["open_total"], 0);
    let id = body["session_id"].as_str().unwrap();
    let (_, corr) = call_json(&h.app, "GET", &format!("/sessions/{id}/correspondences"), None).await;
    for r in corr["relations"].as_array().unwrap() {
        assert_eq!(r["type"], "equivalent_to");
    }
}

#[tokio::test]
async fn conflicts_carry_proposals() {
    let h = harness();
    let id = cloud_session(&h).await;
    let before = stored(&h, &id);
    let (status, list) = call_json(&h.app, "GET", &format!("/sessions/{id}/conflicts"), None).await;
    assert_eq!(status, StatusCode::OK);
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), 1);
    let c = &list[0];
    assert_eq!(c["kind"], "naming_synonym");
    assert_eq!(c["form"], "vertical");
    let proposals = c["proposals"].as_array().unwrap();
    assert_eq!(proposals.len(), 4);
    assert_eq!(
        proposals[0],
        json!({
            "conflict_id": c["id"],
            "decided_by": "auto_default",
            "op": "rename",
            "targets": [{"sop_id": "sop-B", "concept_id": "sop-B#deontic-allow"}],
            "new_label": "permit",
        })
    );
    call(&h.app, "GET", &format!("/sessions/{id}"), None).await;
    call(&h.app, "GET", &format!("/sessions/{id}/export?what=report"), None).await;
    assert_eq!(stored(&h, &id), before, "GET endpoints must not write");
}

#[tokio::test]
async fn unknown_session() {
    let h = harness();
    for uri in ["/sessions/s-0000000000000000", "/sessions/s-0000000000000000/conflicts", "/sessions/x/export?what=report"] {
        let (status, body) = call_json(&h.app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(body["code"], "unknown_session");
    }
}

#[tokio::test]
async fn decision_flow() {
    let h = harness();
    let id = cloud_session(&h).await;
    let (_, list) = call_json(&h.app, "GET", &format!("/sessions/{id}/conflicts"), None).await;
    let cid = list[0]["id"].as_str().unwrap().to_string();
    let action = list[0]["proposals"][0].clone();
    let uri = format!("/sessions/{id}/conflicts/{cid}/decision");

    let (status, out) = call_json(&h.app, "POST", &uri, Some(action.clone())).await;
    assert_eq!(status, StatusCode::OK, "{out}");
    assert_eq!(out["summary"]["open_total"], 0);
    assert_eq!(out["effects"]["renamed"][0]["new_label"], "permit");

    let (_, list) = call_json(&h.app, "GET", &format!("/sessions/{id}/conflicts"), None).await;
    assert_eq!(list, json!([]));

    let (status, body) = call_json(&h.app, "POST", &uri, Some(action)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "already_resolved");

    let (status, b) = call(&h.app, "GET", &format!("/sessions/{id}/export?what=harmonized_policies&domain=B"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(b).unwrap().contains("permit(usePrintingService"));

    let bytes = stored(&h, &id);
    let state = SessionState::from_bytes(&bytes).unwrap();
    assert_eq!(state.to_bytes(), bytes);
    assert_eq!(state.decision_log.len(), 1);
}

#[tokio::test]
async fn rejected_decision_leaves_state_alone() {
    let h = harness();
    let id = cloud_session(&h).await;
    let before = stored(&h, &id);
    let (_, list) = call_json(&h.app, "GET", &format!("/sessions/{id}/conflicts"), None).await;
    let cid = list[0]["id"].as_str().unwrap();
    let bad = json!({"op": "rename", "targets": [{"sop_id": "sop-B", "concept_id": "sop-B#deontic-allow"}], "new_label": "X"});
    let (status, body) = call_json(&h.app, "POST", &format!("/sessions/{id}/conflicts/{cid}/decision"), Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "invalid_action");
    assert!(body["message"].as_str().unwrap().contains("variable"), "{body}");
    assert_eq!(stored(&h, &id), before);

    let mismatch = json!({"conflict_id": "c-other", "op": "delete", "concept": {"sop_id": "sop-B", "concept_id": "sop-B#deontic-allow"}});
    let (status, _) = call_json(&h.app, "POST", &format!("/sessions/{id}/conflicts/{cid}/decision"), Some(mismatch)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body) = call_json(&h.app, "POST", &format!("/sessions/{id}/conflicts/c-000000000000/decision"), Some(json!({"op": "delete", "concept": {"sop_id": "sop-B", "concept_id": "sop-B#deontic-allow"}}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "unknown_conflict");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_decisions_apply_once() {
    let h = harness();
    let id = cloud_session(&h).await;
    let (_, list) = call_json(&h.app, "GET", &format!("/sessions/{id}/conflicts"), None).await;
    let cid = list[0]["id"].as_str().unwrap().to_string();
    let action = list[0]["proposals"][0].clone();
    let uri = format!("/sessions/{id}/conflicts/{cid}/decision");
    let tasks: Vec<_> = (0..4)
        .map(|_| {
            let (app, uri, action) = (h.app.clone(), uri.clone(), action.clone());
            tokio::spawn(async move { call(&app, "POST", &uri, Some(action)).await.0 })
        })
        .collect();
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap());
    }
    assert_eq!(statuses.iter().filter(|s| **s == StatusCode::OK).count(), 1, "{statuses:?}");
    assert_eq!(statuses.iter().filter(|s| **s == StatusCode::CONFLICT).count(), 3);
    let state = SessionState::from_bytes(&stored(&h, &id)).unwrap();
    assert_eq!(state.decision_log.len(), 1);
}

#[tokio::test]
async fn exports() {
    let h = harness();
    let id = cloud_session(&h).await;
    let (status, b) = call(&h.app, "GET", &format!("/sessions/{id}/export?what=enriched_ontology"), None).await;
    assert_eq!(status, StatusCode::OK);
    let o = load_ontology(&b).unwrap();
    assert!(o.contains_relations_of(&security_core()));

    let (status, b) = call(&h.app, "GET", &format!("/sessions/{id}/export?what=enriched_ontology&format=turtle"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(String::from_utf8(b).unwrap().starts_with("@prefix"));

    let (status, body) = call_json(&h.app, "GET", &format!("/sessions/{id}/export?what=report&format=turtle"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "bad_request");

    let (_, report) = call_json(&h.app, "GET", &format!("/sessions/{id}/export?what=report"), None).await;
    assert_eq!(report["summary"]["open_total"], 1);
    assert_eq!(report["decisions"], json!([]));

    let (status, _) = call(&h.app, "GET", &format!("/sessions/{id}/export?what=nothing"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&h.app, "GET", &format!("/sessions/{id}/export?what=harmonized_policies&domain=Z"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
