//! HTTP interface. Experts authenticate with their session token (in the
//! path for session routes, as a bearer token for images); admin routes
//! need the `X-Admin-Token` header.

pub mod wire;

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::domain::{StudyConfig, TaskId};
use crate::report::{export, render, ExportFormat, ReportError, ReportInput, ReportKind};
use crate::session::{Clock, Engine, EngineError};
use crate::storage::{DataDir, StorageError};

use wire::{EnrollRequest, ErrorBody, ErrorDetail, SubmitRequest, WireNext, WireReceipt, WireState};

pub const ADMIN_TOKEN_ENV: &str = "CEMIS_ADMIN_TOKEN";
pub const ADMIN_HEADER: &str = "x-admin-token";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub category: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, category: &str, message: impl Into<String>) -> Self {
        Self { status, category: category.to_string(), message: message.into() }
    }

    fn from_category(category: &str, message: String) -> Self {
        let status = match category {
            "auth.invalid_token" => StatusCode::UNAUTHORIZED,
            "auth.forbidden" => StatusCode::FORBIDDEN,
            "not_found" | "storage.not_found" => StatusCode::NOT_FOUND,
            "session.ordering" | "session.immutable" | "storage.conflict" | "report.empty" => StatusCode::CONFLICT,
            c if c == "validation"
                || c.ends_with(".validation")
                || c.starts_with("config.")
                || c == "storage.invalid" =>
            {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            c if c.starts_with("sampling.") || c.starts_with("manifest.") => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, category, message)
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        Self::from_category(e.category(), e.to_string())
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        Self::from_category(e.category(), e.to_string())
    }
}

impl From<ReportError> for ApiError {
    fn from(e: ReportError) -> Self {
        Self::from_category(e.category(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: ErrorDetail { category: self.category, message: self.message } };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Shared server state: every study under the data directory, opened once.
pub struct AppState {
    data: DataDir,
    admin_digest: [u8; 32],
    clock: Arc<dyn Clock>,
    engines: RwLock<BTreeMap<String, Arc<Engine>>>,
}

impl AppState {
    /// Opens (and replays) every study in `data`.
    pub fn open(data: DataDir, admin_token: &str, clock: Arc<dyn Clock>) -> Result<Self, EngineError> {
        if admin_token.is_empty() {
            return Err(EngineError::Validation(format!("{ADMIN_TOKEN_ENV} must be set to a non-empty value")));
        }
        let mut engines = BTreeMap::new();
        for id in data.list_studies()? {
            let engine = Engine::open(&data, &id, clock.clone())?;
            engines.insert(id, Arc::new(engine));
        }
        Ok(Self {
            data,
            admin_digest: Sha256::digest(admin_token.as_bytes()).into(),
            clock,
            engines: RwLock::new(engines),
        })
    }

    pub fn engine(&self, study_id: &str) -> ApiResult<Arc<Engine>> {
        self.engines.read().expect("engines lock").get(study_id).cloned().ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("study `{study_id}` does not exist"))
        })
    }

    fn engine_for_token(&self, token: &str) -> ApiResult<Arc<Engine>> {
        self.engines
            .read()
            .expect("engines lock")
            .values()
            .find(|e| e.authenticate(token).is_ok())
            .cloned()
            .ok_or_else(|| EngineError::Auth.into())
    }

    fn check_admin(&self, headers: &HeaderMap) -> ApiResult<()> {
        let given = headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok()).unwrap_or_default();
        let digest: [u8; 32] = Sha256::digest(given.as_bytes()).into();
        if given.is_empty() || digest != self.admin_digest {
            return Err(ApiError::new(StatusCode::UNAUTHORIZED, "auth.invalid_token", "missing or wrong admin token"));
        }
        Ok(())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/healthz", get(healthz))
        .route("/api/studies", post(create_study))
        .route("/api/studies/{id}/experts", post(enroll))
        .route("/api/studies/{id}/reports/{kind}", get(report))
        .route("/api/sessions/{token}/state", get(session_state))
        .route("/api/sessions/{token}/task", get(session_task))
        .route("/api/sessions/{token}/responses", post(submit))
        .route("/api/images/{handle}", get(image))
        .with_state(state)
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", e.to_string()))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create_study(State(st): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    st.check_admin(&headers)?;
    let config: StudyConfig = parse_json(&body)?;
    let id = config.study_id.clone();
    let state = st.clone();
    let engine = tokio::task::spawn_blocking(move || Engine::create(&state.data, config, state.clock.clone()))
        .await
        .expect("create task runs to completion")?;
    let summary = engine.study().summary();
    st.engines.write().expect("engines lock").insert(id, Arc::new(engine));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn enroll(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    st.check_admin(&headers)?;
    let req: EnrollRequest = parse_json(&body)?;
    let engine = st.engine(&id)?;
    let enrollment = tokio::task::spawn_blocking(move || engine.enroll(req.years_experience))
        .await
        .expect("enroll task runs to completion")?;
    Ok((StatusCode::CREATED, Json(enrollment)).into_response())
}

async fn session_state(State(st): State<Arc<AppState>>, Path(token): Path<String>) -> ApiResult<Json<WireState>> {
    let engine = st.engine_for_token(&token)?;
    Ok(Json(engine.state(&token)?.into()))
}

async fn session_task(State(st): State<Arc<AppState>>, Path(token): Path<String>) -> ApiResult<Json<WireNext>> {
    let engine = st.engine_for_token(&token)?;
    let next = engine.next_task(&token)?;
    Ok(Json(WireNext::new(engine.study(), &next)))
}

async fn submit(
    State(st): State<Arc<AppState>>,
    Path(token): Path<String>,
    body: Bytes,
) -> ApiResult<Json<WireReceipt>> {
    let engine = st.engine_for_token(&token)?;
    let req: SubmitRequest = parse_json(&body)?;
    let receipt = tokio::task::spawn_blocking(move || {
        let task_id: TaskId = req.task_id;
        engine.submit(&token, &task_id, &req.answer).map(|r| WireReceipt::new(engine.study(), &r))
    })
    .await
    .expect("submit task runs to completion")?;
    Ok(Json(receipt))
}

fn bearer(headers: &HeaderMap) -> ApiResult<&str> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "auth.invalid_token", "missing bearer token"))
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("bmp") => "image/bmp",
        Some("tif" | "tiff") => "image/tiff",
        _ => "application/octet-stream",
    }
}

async fn image(State(st): State<Arc<AppState>>, Path(handle): Path<String>, headers: HeaderMap) -> ApiResult<Response> {
    let token = bearer(&headers)?;
    let engine = st.engine_for_token(token)?;
    let path = engine.current_task_image(token, &handle)?;
    let bytes = tokio::fs::read(&path).await.map_err(|e| {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage.io", format!("image unavailable: {e}"))
    })?;
    Ok(([(header::CONTENT_TYPE, content_type(&path)), (header::CACHE_CONTROL, "no-store")], Body::from(bytes))
        .into_response())
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn report(
    State(st): State<Arc<AppState>>,
    Path((id, kind)): Path<(String, String)>,
    Query(q): Query<ReportQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    st.check_admin(&headers)?;
    let kind: ReportKind = kind.parse()?;
    let format: ExportFormat = q.format.as_deref().unwrap_or("json").parse()?;
    let engine = st.engine(&id)?;
    let (responses, profiles) = (engine.responses(), engine.profiles());
    let envelope = render(
        kind,
        ReportInput { study: engine.study(), responses: &responses, profiles: &profiles },
        st.clock.now(),
    )?;
    let bytes = export(&envelope, format)?;
    Ok(([(header::CONTENT_TYPE, format.content_type())], bytes).into_response())
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
