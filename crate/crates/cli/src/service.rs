//! JSON-over-HTTP front end for elicitation sessions.
//!
//! | method | path                     | body / query            |
//! |--------|--------------------------|-------------------------|
//! | POST   | `/sessions`              |                         |
//! | GET    | `/sessions/{id}`         |                         |
//! | GET    | `/sessions/{id}/task`    |                         |
//! | POST   | `/sessions/{id}/choices` | sheet or Likert answers |
//! | GET    | `/sessions/{id}/scores`  |                         |
//! | GET    | `/export`                | `?ids=a,b` (optional)   |
//! | GET    | `/tasks`                 |                         |
//!
//! Money is integer euro-cents and probabilities are `{num, den}` pairs.
//! Errors are `{"error": kind, "message": ..., "field": ...}` with 404 for
//! unknown sessions, 409 for out-of-order, duplicate or premature requests,
//! 422 for invalid payloads and 400 for malformed JSON.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use riskpref_core::elicitation::{
    builtin_tasks, likert_battery, task, tasks_json, Choice, ChoiceSheet, LikertAnswers, LikertQuestion,
    LikertResponse, Lottery, ROWS_PER_TASK, SCALE_MAX, SCALE_MIN,
};
use serde_json::{json, Map, Value};

use crate::session::{Pending, Session, SessionError, SessionStore, Submission, STEPS};

/// Environment variable holding the bind address of `serve`.
pub const BIND_ENV: &str = "RISKPREF_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(summary))
        .route("/sessions/{id}/task", get(next_task))
        .route("/sessions/{id}/choices", post(submit))
        .route("/sessions/{id}/scores", get(scores))
        .route("/export", get(export))
        .route("/tasks", get(tasks))
        .with_state(store)
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self.0 {
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::Conflict(_) | SessionError::Incomplete => (StatusCode::CONFLICT, "conflict"),
            SessionError::Validation { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            SessionError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let mut body = json!({ "error": kind, "message": self.0.to_string() });
        if let SessionError::Validation { field, message } = &self.0 {
            body["field"] = json!(field);
            body["message"] = json!(message);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn pending_json(p: Option<Pending>) -> Value {
    serde_json::to_value(p).expect("pending serializes")
}

fn progress(s: &Session) -> Value {
    json!({
        "id": s.id,
        "status": s.status(),
        "created_at": s.created_at,
        "completed": s.completed_steps(),
        "steps": STEPS,
        "next_task": pending_json(s.pending()),
    })
}

async fn create(State(store): State<Arc<SessionStore>>) -> ApiResult<(StatusCode, Json<Value>)> {
    let s = store.create()?;
    Ok((StatusCode::CREATED, Json(progress(&s))))
}

async fn summary(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    Ok(Json(progress(&store.session(&id)?)))
}

fn lottery_json(l: &Lottery) -> Value {
    l.outcomes()
        .iter()
        .map(|o| {
            json!({
                "probability": { "num": o.probability.numer(), "den": o.probability.denom() },
                "cents": o.payoff.cents(),
            })
        })
        .collect()
}

/// Payload of one list, rows numbered from 1 as in the printed tables.
pub fn mpl_payload(task_id: u32) -> Value {
    let t = task(task_id).expect("pending tasks are built in");
    let rows: Vec<Value> = t
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| json!({ "row": i + 1, "option_a": lottery_json(&r.option_a), "option_b": lottery_json(&r.option_b) }))
        .collect();
    let step = builtin_tasks().iter().position(|x| x.id() == task_id).expect("built in") + 1;
    json!({ "kind": "mpl", "task_id": task_id, "step": step, "steps": STEPS, "rows": rows })
}

pub fn likert_payload() -> Value {
    let b = likert_battery();
    json!({
        "kind": "likert",
        "step": STEPS,
        "steps": STEPS,
        "scale": { "min": SCALE_MIN, "max": SCALE_MAX, "min_label": b.scale_min_label, "max_label": b.scale_max_label },
        "items": b.items,
    })
}

async fn next_task(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = store.session(&id)?;
    Ok(Json(match s.pending() {
        Some(Pending::Mpl { task_id }) => mpl_payload(task_id),
        Some(Pending::Likert) => likert_payload(),
        None => json!({ "kind": "complete", "steps": STEPS }),
    }))
}

/// Reads a submission body: `{"task_id": 1, "choices": ["A", ...]}` or
/// `{"likert": {"general": 5, ..., "health": "NA"}}`. Errors name the
/// offending field path.
pub fn parse_submission(body: &[u8]) -> Result<Submission, SessionError> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| SessionError::validation("body", format!("malformed JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| SessionError::validation("body", "expected a JSON object"))?;
    match obj.get("likert") {
        Some(l) => parse_likert(l).map(|answers| Submission::Likert { answers }),
        None => parse_sheet(obj).map(|sheet| Submission::Mpl { sheet }),
    }
}

fn parse_sheet(obj: &Map<String, Value>) -> Result<ChoiceSheet, SessionError> {
    let task_id = obj
        .get("task_id")
        .ok_or_else(|| SessionError::validation("task_id", "missing"))?
        .as_u64()
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| SessionError::validation("task_id", "expected a task id"))?;
    let raw = obj
        .get("choices")
        .ok_or_else(|| SessionError::validation("choices", "missing"))?
        .as_array()
        .ok_or_else(|| SessionError::validation("choices", "expected an array"))?;
    if raw.len() != ROWS_PER_TASK {
        return Err(SessionError::validation(
            "choices",
            format!("expected {ROWS_PER_TASK} choices, got {}", raw.len()),
        ));
    }
    let choices = raw
        .iter()
        .enumerate()
        .map(|(i, c)| match c.as_str() {
            Some("A") => Ok(Choice::A),
            Some("B") => Ok(Choice::B),
            _ => Err(SessionError::validation(format!("choices[{i}]"), format!("expected \"A\" or \"B\", got {c}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    ChoiceSheet::new(task_id, choices).map_err(|e| SessionError::validation("choices", e.to_string()))
}

fn parse_likert(value: &Value) -> Result<LikertAnswers, SessionError> {
    let obj = value.as_object().ok_or_else(|| SessionError::validation("likert", "expected an object"))?;
    let answer = |q: LikertQuestion| -> Result<LikertResponse, SessionError> {
        let field = format!("likert.{}", q.key());
        match obj.get(q.key()) {
            None => Err(SessionError::validation(field, "missing")),
            Some(Value::String(s)) if s == "NA" => Ok(LikertResponse::NA),
            Some(v) => v
                .as_i64()
                .map(LikertResponse::Value)
                .ok_or_else(|| SessionError::validation(field, format!("expected an integer or \"NA\", got {v}"))),
        }
    };
    Ok(LikertAnswers {
        general: answer(LikertQuestion::General)?,
        occupation: answer(LikertQuestion::Occupation)?,
        health: answer(LikertQuestion::Health)?,
        personal_finances: answer(LikertQuestion::PersonalFinances)?,
        job_finances: answer(LikertQuestion::JobFinances)?,
    })
}

async fn submit(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, Response> {
    // Unknown sessions are reported before payload problems.
    store.session(&id).map_err(|e| ApiError(e).into_response())?;
    let submission = parse_submission(&body).map_err(|e| {
        let malformed = serde_json::from_slice::<serde::de::IgnoredAny>(&body).is_err();
        let mut r = ApiError(e).into_response();
        if malformed {
            *r.status_mut() = StatusCode::BAD_REQUEST;
        }
        r
    })?;
    let s = store.submit(&id, submission).map_err(|e| ApiError(e).into_response())?;
    Ok(Json(progress(&s)))
}

async fn scores(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = store.scores(&id)?;
    Ok(Json(serde_json::to_value(s).map_err(|e| SessionError::Internal(e.to_string()))?))
}

async fn export(State(store): State<Arc<SessionStore>>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Response> {
    let ids: Vec<String> = q
        .get("ids")
        .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
        .unwrap_or_default();
    let csv = store.export(&ids)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn tasks() -> Response {
    ([(header::CONTENT_TYPE, "application/json")], tasks_json()).into_response()
}

/// Serves until the process is stopped.
pub async fn serve(store: Arc<SessionStore>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}
