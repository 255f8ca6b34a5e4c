//! HTTP front end for sessions.
//!
//! | route | body | answer |
//! |---|---|---|
//! | `POST /sessions` | `{"source": ..., "budget"?: ...}` | `{id, view}` |
//! | `GET /sessions/{id}` | | view |
//! | `GET /sessions/{id}/moves` | | menu |
//! | `POST /sessions/{id}/moves` | a move | view |
//! | `POST /sessions/{id}/cursor` | `{"node": n}` | view |
//! | `GET /sessions/{id}/verify` | | replay report |
//! | `GET /sessions/{id}/export` | | move log, JSON lines |

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};

use super::{parse_move, Session, SessionError, Sessions};
use crate::sls::MoveBudget;
use crate::wire::move_to_json;

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        let (status, body) = match &self {
            SessionError::Source(e) => {
                let pos = e.pos().map(|p| json!({ "line": p.line, "col": p.col }));
                (StatusCode::UNPROCESSABLE_ENTITY, json!({ "kind": "SourceError", "message": message, "pos": pos }))
            }
            SessionError::Move(e) => (StatusCode::UNPROCESSABLE_ENTITY, json!({ "kind": e.kind(), "message": message })),
            SessionError::Wire(_) | SessionError::MissingSource => {
                (StatusCode::BAD_REQUEST, json!({ "kind": "MalformedMove", "message": message }))
            }
            SessionError::NotSystemTurn(_) => (StatusCode::CONFLICT, json!({ "kind": "NotSystemTurn", "message": message })),
            SessionError::UnknownNode(_) => (StatusCode::NOT_FOUND, json!({ "kind": "UnknownNode", "message": message })),
            SessionError::UnknownSession(_) => {
                (StatusCode::NOT_FOUND, json!({ "kind": "UnknownSession", "message": message }))
            }
        };
        (status, Json(json!({ "error": body }))).into_response()
    }
}

type Shared = Arc<Sessions>;
type Answer = Result<Json<JsonValue>, SessionError>;

#[derive(Deserialize)]
struct CreateBody {
    source: String,
    #[serde(default)]
    budget: Option<MoveBudget>,
}

#[derive(Deserialize)]
struct CursorBody {
    node: usize,
}

pub fn router(sessions: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(view))
        .route("/sessions/{id}/moves", get(menu).post(apply))
        .route("/sessions/{id}/cursor", post(cursor))
        .route("/sessions/{id}/verify", get(verify))
        .route("/sessions/{id}/export", get(export))
        .with_state(sessions)
}

async fn create(State(st): State<Shared>, Json(body): Json<CreateBody>) -> Result<(StatusCode, Json<JsonValue>), SessionError> {
    let s = Session::with_budget(&body.source, body.budget.unwrap_or_default())?;
    let v = s.view();
    let id = st.insert(s);
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "view": v }))))
}

async fn view(State(st): State<Shared>, Path(id): Path<String>) -> Answer {
    Ok(Json(st.get(&id)?.read().expect("session lock").view()))
}

async fn menu(State(st): State<Shared>, Path(id): Path<String>) -> Answer {
    let menu = st.get(&id)?.read().expect("session lock").menu();
    Ok(Json(JsonValue::Array(menu.iter().map(move_to_json).collect())))
}

async fn apply(State(st): State<Shared>, Path(id): Path<String>, Json(body): Json<JsonValue>) -> Answer {
    let mv = parse_move(&body)?;
    let s = st.get(&id)?;
    let mut s = s.write().expect("session lock");
    s.apply(&mv)?;
    Ok(Json(s.view()))
}

async fn cursor(State(st): State<Shared>, Path(id): Path<String>, Json(body): Json<CursorBody>) -> Answer {
    let s = st.get(&id)?;
    let mut s = s.write().expect("session lock");
    s.navigate(body.node)?;
    Ok(Json(s.view()))
}

async fn verify(State(st): State<Shared>, Path(id): Path<String>) -> Answer {
    let report = st.get(&id)?.read().expect("session lock").verify();
    Ok(Json(serde_json::to_value(report).expect("report serializes")))
}

async fn export(State(st): State<Shared>, Path(id): Path<String>) -> Result<Response, SessionError> {
    let log = st.get(&id)?.read().expect("session lock").export();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], log).into_response())
}

/// Serves the session API until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(Sessions::new()))).await
}
