//! Local HTTP service behind the wizard UI.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/api/defaults` | [`api::DefaultsBody`] |
//! | POST | `/api/validate` | spec as JSON or spec-file text → [`api::ValidateBody`] |
//! | POST | `/api/generate` | multipart `spec` + `structure` → zip of the bundle |
//! | POST | `/api/analyze` | [`api::AnalyzeBody`] → [`api::JobCreated`] |
//! | GET | `/api/jobs/{id}` | [`api::AnalysisJob`] |
//! | GET | `/api/jobs/{id}/files/{name}` | a CSV or SVG result |
//! | GET | `/` | UI assets |
//!
//! Errors are JSON [`api::ErrorBody`] values. Jobs live in memory only and
//! vanish on restart.

pub mod api;
mod archive;
mod jobs;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use deckforge::deck::{generate_bundle, GenerateError};
use deckforge::spec::{parse_spec_text, validate_with, DefaultsLedger, LedgerError, SimulationSpec};
use thiserror::Error;

pub use archive::bundle_zip;
pub use jobs::JobStore;

use api::{BundleBody, DefaultsBody, ErrorBody, ValidateBody};

pub const DEFAULT_PORT: u16 = 8765;
pub const DEFAULT_UPLOAD_CAP: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Alternate defaults ledger; the built-in one otherwise.
    pub defaults_path: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub max_upload_bytes: usize,
    /// Concurrent analysis jobs; at least 1.
    pub workers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            defaults_path: None,
            static_dir: None,
            max_upload_bytes: DEFAULT_UPLOAD_CAP,
            workers: cores.saturating_sub(1).max(1),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    pub config: ServiceConfig,
    pub ledger: DefaultsLedger,
    pub jobs: JobStore,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        let ledger = match &config.defaults_path {
            Some(p) => DefaultsLedger::from_path(p)?,
            None => DefaultsLedger::builtin(),
        };
        let jobs = JobStore::new(config.workers)?;
        Ok(Arc::new(AppState { config, ledger, jobs }))
    }
}

/// A JSON error response.
pub struct ApiError(pub StatusCode, pub ErrorBody);

impl ApiError {
    fn new(status: StatusCode, code: &str, detail: impl Into<String>) -> Self {
        ApiError(status, ErrorBody::new(code, detail))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes.saturating_add(1024 * 1024);
    let api = Router::new()
        .route("/defaults", get(defaults))
        .route("/validate", post(validate_spec))
        .route("/generate", post(generate))
        .route("/analyze", post(jobs::submit))
        .route("/jobs/{id}", get(jobs::status))
        .route("/jobs/{id}/files/{name}", get(jobs::file))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .layer(DefaultBodyLimit::max(limit));
    let ui = match &state.config.static_dir {
        Some(dir) => Router::new().fallback_service(tower_http::services::ServeDir::new(dir)),
        None => Router::new().route("/", get(|| async { Html(INDEX_HTML) })),
    };
    Router::new().nest("/api", api).merge(ui).with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let addr = config.bind;
    if !addr.ip().is_loopback() {
        log::warn!("listening on {addr}: the service has no authentication and is reachable from the network");
    }
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr, source })?;
    log::info!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

const INDEX_HTML: &str = r#"<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>deckforge</title></head>
<body>
<h1>deckforge</h1>
<p>The wizard UI is not bundled with this build. Start the service with
<code>--static &lt;dir&gt;</code> to serve it, or use the JSON API under <code>/api</code>.</p>
</body>
</html>
"#;

async fn defaults(State(state): State<Arc<AppState>>) -> Json<DefaultsBody> {
    Json(DefaultsBody::new(&state.ledger))
}

fn is_json(headers: &HeaderMap) -> bool {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.trim_start().starts_with("application/json"))
}

/// Reads a spec as JSON when flagged or when it looks like an object, else as spec-file text.
fn parse_spec(bytes: &[u8], json: bool) -> Result<SimulationSpec, ApiError> {
    let bad = |detail: String| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", detail);
    let text = std::str::from_utf8(bytes).map_err(|_| bad("spec is not UTF-8".into()))?;
    if json || text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| bad(format!("spec JSON: {e}")))
    } else {
        parse_spec_text(text).map_err(|e| bad(e.to_string()))
    }
}

async fn validate_spec(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<ValidateBody>, ApiError> {
    let spec = parse_spec(&body, is_json(&headers))?;
    Ok(Json(validate_with(&spec, &state.ledger).into()))
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    let status = e.status();
    let code = if status == StatusCode::PAYLOAD_TOO_LARGE { "upload_too_large" } else { "malformed_body" };
    ApiError::new(status, code, e.body_text())
}

async fn generate(State(state): State<Arc<AppState>>, mut form: Multipart) -> Result<Response, ApiError> {
    let mut spec = None;
    let mut structure: Option<(String, Bytes)> = None;
    let mut structure_name = None;
    while let Some(field) = form.next_field().await.map_err(multipart_error)? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "spec" => {
                let json = field.content_type().is_some_and(|c| c.starts_with("application/json"));
                let bytes = field.bytes().await.map_err(multipart_error)?;
                spec = Some(parse_spec(&bytes, json)?);
            }
            "structure" => {
                let file_name = field.file_name().unwrap_or_default().to_string();
                let bytes = field.bytes().await.map_err(multipart_error)?;
                structure = Some((file_name, bytes));
            }
            "structure_name" => structure_name = Some(field.text().await.map_err(multipart_error)?),
            _ => {}
        }
    }
    let spec = spec.ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", "missing `spec` field"))?;
    let (file_name, bytes) = structure
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", "missing `structure` field"))?;
    if bytes.len() > state.config.max_upload_bytes {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "upload_too_large",
            format!("structure is {} bytes; the limit is {}", bytes.len(), state.config.max_upload_bytes),
        ));
    }
    let name = structure_name.filter(|n| !n.is_empty()).unwrap_or(file_name);
    if name.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", "structure upload has no file name"));
    }

    let ledger = &state.ledger;
    let (bundle, warnings) = generate_bundle(&spec, ledger, &name, &bytes).map_err(|e| match e {
        GenerateError::Invalid(report) => ApiError(
            StatusCode::UNPROCESSABLE_ENTITY,
            ErrorBody { error: "invalid_spec".into(), detail: report.summary(), findings: report.findings },
        ),
        GenerateError::Bundle(e) => ApiError::new(StatusCode::BAD_REQUEST, "structure_unreadable", e.to_string()),
        GenerateError::Resolve(e) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_spec", e.to_string()),
    })?;
    let zip = tokio::task::spawn_blocking(move || bundle_zip(&bundle).map(|z| (z, bundle)))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let (zip, bundle) = zip;
    let summary = BundleBody::new(&bundle, &warnings);
    let disposition = format!("attachment; filename=\"{}.zip\"", bundle.resolved.source.job_name);
    let mut response = (StatusCode::OK, zip).into_response();
    let h = response.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/zip"));
    if let Ok(v) = HeaderValue::from_str(&disposition) {
        h.insert(header::CONTENT_DISPOSITION, v);
    }
    if let Ok(v) = HeaderValue::from_str(&summary.content_sha256) {
        h.insert("x-deckforge-sha256", v);
    }
    Ok(response)
}

/// Convenience for handlers returning a 404 for an unknown path segment.
pub(crate) fn not_found(what: &str, id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id:?}"))
}
