use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use riskpref::service::router;
use riskpref::session::SessionStore;
use riskpref_core::elicitation::tasks_json;
use riskpref_core::synthdata::{from_csv_str, TargetKind};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    text: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply { status, text: String::from_utf8(bytes.to_vec()).unwrap() }
}

async fn create(app: &Router) -> String {
    let r = call(app, Method::POST, "/sessions", None).await;
    assert_eq!(r.status, StatusCode::CREATED);
    r.json()["id"].as_str().unwrap().to_string()
}

fn sheet(task_id: u32, c: &str) -> Value {
    json!({ "task_id": task_id, "choices": vec![c; 10] })
}

fn likert(general: i64) -> Value {
    json!({ "likert": { "general": general, "occupation": 3, "health": "NA", "personal_finances": 4, "job_finances": 2 } })
}

async fn run_script(app: &Router, id: &str, choice: &str, general: i64) {
    for t in 1..=5 {
        let r = call(app, Method::POST, &format!("/sessions/{id}/choices"), Some(sheet(t, choice))).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    }
    let r = call(app, Method::POST, &format!("/sessions/{id}/choices"), Some(likert(general))).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text);
    assert_eq!(r.json()["status"], "complete");
}

fn memory_app() -> Router {
    router(Arc::new(SessionStore::in_memory()))
}

fn logged_app(path: &Path) -> Router {
    router(Arc::new(SessionStore::open(path).unwrap()))
}

#[tokio::test]
async fn fresh_session_starts_with_first_list() {
    let app = memory_app();
    let id = create(&app).await;
    let task = call(&app, Method::GET, &format!("/sessions/{id}/task"), None).await.json();
    assert_eq!(task["kind"], "mpl");
    assert_eq!(task["task_id"], 1);
    assert_eq!(task["step"], 1);
    assert_eq!(task["rows"].as_array().unwrap().len(), 10);
    // First row, option B: 10% chance of €154, 90% chance of €4.
    assert_eq!(
        task["rows"][0]["option_b"],
        json!([
            { "probability": { "num": 1, "den": 10 }, "cents": 15400 },
            { "probability": { "num": 9, "den": 10 }, "cents": 400 }
        ])
    );
}

#[tokio::test]
async fn scripted_safe_session_scores() {
    let app = memory_app();
    let id = create(&app).await;
    run_script(&app, &id, "A", 5).await;
    let s = call(&app, Method::GET, &format!("/sessions/{id}/scores"), None).await;
    assert_eq!(s.status, StatusCode::OK);
    let s = s.json();
    assert_eq!(s["mpl_avg_safe"], 10.0);
    assert_eq!(s["risk_grq"], 5);
    assert_eq!(s["likert"]["health"], Value::Null);
    // All-A on list 1 passes up the certain €154 in the last row.
    assert_eq!(s["consistency"][0]["dominated_choices"], json!([9]));
    let t = call(&app, Method::GET, &format!("/sessions/{id}/task"), None).await.json();
    assert_eq!(t["kind"], "complete");
}

#[tokio::test]
async fn likert_step_follows_lists() {
    let app = memory_app();
    let id = create(&app).await;
    for t in 1..=5 {
        call(&app, Method::POST, &format!("/sessions/{id}/choices"), Some(sheet(t, "B"))).await;
    }
    let task = call(&app, Method::GET, &format!("/sessions/{id}/task"), None).await.json();
    assert_eq!(task["kind"], "likert");
    assert_eq!(task["items"].as_array().unwrap().len(), 6);
    assert_eq!(task["scale"]["min_label"], "not at all willing to take risks");
}

#[tokio::test]
async fn incomplete_session_has_no_scores() {
    let app = memory_app();
    let id = create(&app).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/scores"), None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["message"], "session incomplete");
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let app = memory_app();
    for (m, uri) in [
        (Method::GET, "/sessions/nope"),
        (Method::GET, "/sessions/nope/task"),
        (Method::GET, "/sessions/nope/scores"),
        (Method::POST, "/sessions/nope/choices"),
        (Method::GET, "/export?ids=nope"),
    ] {
        let body = (m == Method::POST).then(|| sheet(1, "A"));
        let r = call(&app, m, uri, body).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(r.json()["error"], "not_found");
    }
}

#[tokio::test]
async fn order_and_duplicates_conflict() {
    let app = memory_app();
    let id = create(&app).await;
    let uri = format!("/sessions/{id}/choices");
    assert_eq!(call(&app, Method::POST, &uri, Some(sheet(2, "A"))).await.status, StatusCode::CONFLICT);
    assert_eq!(call(&app, Method::POST, &uri, Some(likert(1))).await.status, StatusCode::CONFLICT);
    assert_eq!(call(&app, Method::POST, &uri, Some(sheet(1, "A"))).await.status, StatusCode::OK);
    let dup = call(&app, Method::POST, &uri, Some(sheet(1, "B"))).await;
    assert_eq!(dup.status, StatusCode::CONFLICT);
    assert_eq!(dup.json()["error"], "conflict");
    let progress = call(&app, Method::GET, &format!("/sessions/{id}"), None).await.json();
    assert_eq!(progress["completed"], 1);
    assert_eq!(progress["next_task"], json!({ "kind": "mpl", "task_id": 2 }));
}

#[tokio::test]
async fn completed_session_is_immutable() {
    let app = memory_app();
    let id = create(&app).await;
    run_script(&app, &id, "B", 0).await;
    let r = call(&app, Method::POST, &format!("/sessions/{id}/choices"), Some(likert(9))).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let s = call(&app, Method::GET, &format!("/sessions/{id}/scores"), None).await.json();
    assert_eq!((s["mpl_avg_safe"].as_f64(), s["risk_grq"].as_u64()), (Some(0.0), Some(0)));
}

#[tokio::test]
async fn validation_errors_name_the_field() {
    let app = memory_app();
    let id = create(&app).await;
    let uri = format!("/sessions/{id}/choices");
    let mut bad = sheet(1, "A");
    bad["choices"][3] = json!("C");
    let cases = [
        (bad, "choices[3]"),
        (json!({ "task_id": 1, "choices": vec!["A"; 9] }), "choices"),
        (json!({ "task_id": "one", "choices": vec!["A"; 10] }), "task_id"),
        (json!({ "task_id": 77, "choices": vec!["A"; 10] }), "task_id"),
        (json!({ "choices": vec!["A"; 10] }), "task_id"),
        (json!([1, 2]), "body"),
    ];
    for (body, field) in cases {
        let r = call(&app, Method::POST, &uri, Some(body)).await;
        assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY, "{field}: {}", r.text);
        assert_eq!(r.json()["field"], field);
    }
    for t in 1..=5 {
        call(&app, Method::POST, &uri, Some(sheet(t, "A"))).await;
    }
    let mut l = likert(4);
    l["likert"]["occupation"] = json!("NA");
    let r = call(&app, Method::POST, &uri, Some(l)).await;
    assert_eq!(r.json()["field"], "likert.occupation");
    let mut l = likert(4);
    l["likert"]["general"] = json!(11);
    assert_eq!(call(&app, Method::POST, &uri, Some(l)).await.json()["field"], "likert.general");
    let mut l = likert(4);
    l["likert"].as_object_mut().unwrap().remove("job_finances");
    assert_eq!(call(&app, Method::POST, &uri, Some(l)).await.json()["field"], "likert.job_finances");

    let req = Request::builder().method(Method::POST).uri(&uri).body(Body::from("{not json")).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
    let progress = call(&app, Method::GET, &format!("/sessions/{id}"), None).await.json();
    assert_eq!(progress["completed"], 5);
}

#[tokio::test]
async fn export_lists_complete_sessions() {
    let app = memory_app();
    let a = create(&app).await;
    let b = create(&app).await;
    let c = create(&app).await;
    run_script(&app, &a, "A", 5).await;
    run_script(&app, &c, "B", 2).await;
    let r = call(&app, Method::GET, "/export", None).await;
    assert_eq!(r.status, StatusCode::OK);
    let table = from_csv_str(&r.text, None).unwrap();
    assert_eq!(table.ids().unwrap(), [a.clone(), c.clone()]);
    assert_eq!(table.target(TargetKind::MplAvgSafe).unwrap(), [10.0, 0.0]);
    assert_eq!(table.target(TargetKind::RiskGrq).unwrap(), [5.0, 2.0]);

    let only = call(&app, Method::GET, &format!("/export?ids={c}"), None).await;
    assert_eq!(from_csv_str(&only.text, None).unwrap().ids().unwrap(), [c]);
    assert_eq!(call(&app, Method::GET, &format!("/export?ids={b}"), None).await.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn tasks_document_is_canonical() {
    let r = call(&memory_app(), Method::GET, "/tasks", None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.text, tasks_json());
}

#[tokio::test]
async fn restart_replays_the_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let app = logged_app(&path);
    let done = create(&app).await;
    let partial = create(&app).await;
    run_script(&app, &done, "A", 7).await;
    call(&app, Method::POST, &format!("/sessions/{partial}/choices"), Some(sheet(1, "B"))).await;
    // Rejected submissions never reach the log.
    call(&app, Method::POST, &format!("/sessions/{partial}/choices"), Some(sheet(4, "B"))).await;

    let probes = [
        format!("/sessions/{done}"),
        format!("/sessions/{done}/scores"),
        format!("/sessions/{partial}"),
        format!("/sessions/{partial}/task"),
        format!("/sessions/{partial}/scores"),
        "/export".to_string(),
    ];
    let mut before = Vec::new();
    for p in &probes {
        let r = call(&app, Method::GET, p, None).await;
        before.push((r.status, r.text));
    }
    drop(app);

    let restarted = logged_app(&path);
    for (p, (status, text)) in probes.iter().zip(&before) {
        let r = call(&restarted, Method::GET, p, None).await;
        assert_eq!((&r.status, &r.text), (status, text), "{p}");
    }
    let r = call(&restarted, Method::POST, &format!("/sessions/{partial}/choices"), Some(sheet(2, "A"))).await;
    assert_eq!(r.json()["completed"], 2);
}
