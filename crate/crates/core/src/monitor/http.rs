//! JSON HTTP API over a [`Monitor`].
//!
//! `POST /session` exchanges an identity token for a session id; every
//! other endpoint needs that id in the `x-fbac-session` header.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AuditFilter, Monitor, MonitorError, Principal, ProjectionQuery, Role};
use crate::adoc::AdocError;
use crate::guarded::Request;
use crate::projections::ProjectionKind;

pub const SESSION_HEADER: &str = "x-fbac-session";

#[derive(Debug)]
pub struct ApiState {
    monitor: Arc<Monitor>,
    sessions: RwLock<HashMap<String, Principal>>,
}

#[derive(Debug)]
pub struct ApiError(MonitorError);

impl From<MonitorError> for ApiError {
    fn from(e: MonitorError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            MonitorError::Unauthenticated => StatusCode::UNAUTHORIZED,
            MonitorError::Forbidden(_) => StatusCode::FORBIDDEN,
            MonitorError::UnknownDocument(_) | MonitorError::Adoc(AdocError::UnknownAtom(_)) => StatusCode::NOT_FOUND,
            MonitorError::Io(_) | MonitorError::Config { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn bad_query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v).map_err(|e| MonitorError::BadRequest(e.body_text()).into())
}

fn bad_body<T>(b: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    b.map(|Json(v)| v).map_err(|e| MonitorError::BadRequest(e.body_text()).into())
}

fn principal(state: &ApiState, headers: &HeaderMap) -> Result<Principal, ApiError> {
    let id = headers.get(SESSION_HEADER).and_then(|v| v.to_str().ok()).ok_or(MonitorError::Unauthenticated)?;
    Ok(state.sessions.read().get(id).cloned().ok_or(MonitorError::Unauthenticated)?)
}

fn admin(state: &ApiState, headers: &HeaderMap) -> Result<Principal, ApiError> {
    let p = principal(state, headers)?;
    if p.role != Role::Admin {
        return Err(MonitorError::Forbidden(p.role).into());
    }
    Ok(p)
}

#[derive(Debug, Deserialize)]
pub struct SessionBody {
    pub token: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionReply {
    pub session: String,
    pub subject: String,
    pub role: Role,
}

async fn create_session(
    State(state): State<Arc<ApiState>>,
    body: Result<Json<SessionBody>, JsonRejection>,
) -> ApiResult<SessionReply> {
    let body = bad_body(body)?;
    let p = state.monitor.authenticate(&body.token)?;
    let session = uuid::Uuid::new_v4().to_string();
    let reply = SessionReply { session: session.clone(), subject: p.subject.to_string(), role: p.role };
    state.sessions.write().insert(session, p);
    Ok(Json(reply))
}

async fn documents(State(state): State<Arc<ApiState>>, headers: HeaderMap) -> ApiResult<serde_json::Value> {
    principal(&state, &headers)?;
    Ok(Json(json!({ "documents": state.monitor.documents() })))
}

async fn view(
    State(state): State<Arc<ApiState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> ApiResult<serde_json::Value> {
    let p = principal(&state, &headers)?;
    let (sequence, v) = state.monitor.view(&p, &id)?;
    Ok(Json(json!({ "sequence": sequence, "document": v.document, "segments": v.segments })))
}

async fn atom_functions(
    State(state): State<Arc<ApiState>>,
    headers: HeaderMap,
    Path((id, aid)): Path<(String, String)>,
) -> ApiResult<serde_json::Value> {
    let p = principal(&state, &headers)?;
    let list = state.monitor.function_list(&p, &id, &aid)?;
    let rows: Vec<serde_json::Value> = list
        .entries
        .iter()
        .map(|(f, e)| json!({ "function": f, "entry": e.to_string(), "grants": e.is_grant() }))
        .collect();
    Ok(Json(json!({ "subject": list.subject, "object": list.object, "functions": rows })))
}

/// Body of `POST /invoke`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InvokeBody {
    pub function: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub options: BTreeMap<String, String>,
    #[serde(default)]
    pub stdin: String,
}

impl From<InvokeBody> for Request {
    fn from(b: InvokeBody) -> Self {
        Request { function: b.function, args: b.args, options: b.options.into_iter().collect(), stdin: b.stdin.into_bytes() }
    }
}

async fn invoke(
    State(state): State<Arc<ApiState>>,
    headers: HeaderMap,
    body: Result<Json<InvokeBody>, JsonRejection>,
) -> ApiResult<super::InvokeResponse> {
    let p = principal(&state, &headers)?;
    let body = bad_body(body)?;
    Ok(Json(state.monitor.invoke(&p, &body.into())?))
}

async fn projection(
    State(state): State<Arc<ApiState>>,
    headers: HeaderMap,
    Path(kind): Path<String>,
    q: Result<Query<ProjectionQuery>, QueryRejection>,
) -> ApiResult<crate::projections::Projection> {
    admin(&state, &headers)?;
    let q = bad_query(q)?;
    let kind: ProjectionKind = kind.parse().map_err(MonitorError::from)?;
    Ok(Json(state.monitor.projection(kind, &q)?))
}

async fn audit(
    State(state): State<Arc<ApiState>>,
    headers: HeaderMap,
    f: Result<Query<AuditFilter>, QueryRejection>,
) -> ApiResult<serde_json::Value> {
    admin(&state, &headers)?;
    let f = bad_query(f)?;
    Ok(Json(json!({ "records": state.monitor.audit_query(&f) })))
}

pub fn router(monitor: Arc<Monitor>) -> Router {
    let state = Arc::new(ApiState { monitor, sessions: RwLock::new(HashMap::new()) });
    Router::new()
        .route("/session", post(create_session))
        .route("/documents", get(documents))
        .route("/documents/{id}/view", get(view))
        .route("/documents/{id}/atoms/{aid}/functions", get(atom_functions))
        .route("/invoke", post(invoke))
        .route("/projections/{kind}", get(projection))
        .route("/audit", get(audit))
        .with_state(state)
}

pub async fn serve(monitor: Arc<Monitor>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(monitor)).await
}
