//! HTTP front end for decoding payloads and running sessions.
//!
//! | method | path                   | body                                   |
//! |--------|------------------------|----------------------------------------|
//! | POST   | `/decode`              | payload (see below)                    |
//! | POST   | `/sessions`            | payload, optional reference table      |
//! | POST   | `/sessions/{id}/answer`| `{"value": "..."}`                     |
//! | GET    | `/sessions/{id}`       |                                        |
//! | GET    | `/health`              |                                        |
//!
//! A payload is sent as `application/octet-stream` bytes, as an `image/png`
//! holding the QR code, or as JSON `{"payload_hex": "..."}`. JSON session
//! requests may add `"refs"`: either `n=text` lines or an object mapping
//! reference numbers to text.

mod store;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use qrscript::codec::{decode_payload, measure, CodecError, Payload, SizeReport};
use qrscript::ir::format_tac;
use qrscript::qrio::{self, MAX_PAYLOAD_BYTES};
use qrscript::vm::{ReferenceTable, Session, SessionEvent, SessionState, VmError};

pub use store::SessionStore;

/// Largest request body accepted, which bounds PNG uploads.
const MAX_BODY_BYTES: usize = 8 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub session_ttl: Duration,
    pub max_payload: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            session_ttl: Duration::from_secs(30 * 60),
            max_payload: MAX_PAYLOAD_BYTES,
        }
    }
}

#[derive(Clone)]
struct AppState {
    config: ServiceConfig,
    store: Arc<SessionStore>,
}

pub fn router(config: ServiceConfig) -> Router {
    let store = Arc::new(SessionStore::new(config.session_ttl));
    router_with_store(config, store)
}

/// Router sharing an existing store, e.g. one purged by a background task.
pub fn router_with_store(config: ServiceConfig, store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/decode", post(decode))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/answer", post(answer))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(AppState { config, store })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(ErrorBody {
                error: self.message,
            }),
        )
            .into_response()
    }
}

impl From<CodecError> for ApiError {
    fn from(e: CodecError) -> Self {
        let status = match e {
            CodecError::UnsupportedDialect(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<VmError> for ApiError {
    fn from(e: VmError) -> Self {
        let status = match e {
            VmError::InvalidProgram(_) => StatusCode::BAD_REQUEST,
            VmError::NotRunning(_) | VmError::NotAwaiting(_) => StatusCode::CONFLICT,
        };
        ApiError::new(status, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RefsBody {
    Text(String),
    Map(BTreeMap<String, String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayloadJson {
    payload_hex: String,
    #[serde(default)]
    refs: Option<RefsBody>,
}

fn content_type(headers: &HeaderMap) -> String {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.split(';').next())
        .unwrap_or("application/octet-stream")
        .trim()
        .to_ascii_lowercase()
}

/// Extracts the payload (and any reference table) from a request body.
fn read_payload(
    config: &ServiceConfig,
    headers: &HeaderMap,
    body: &[u8],
) -> Result<(Payload, Option<ReferenceTable>), ApiError> {
    let (payload, refs) = match content_type(headers).as_str() {
        "application/json" => {
            let req: PayloadJson = serde_json::from_slice(body)
                .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
            let bytes = hex::decode(req.payload_hex.trim())
                .map_err(|e| ApiError::bad_request(format!("payload_hex: {e}")))?;
            let refs = match req.refs {
                None => None,
                Some(RefsBody::Text(text)) => Some(
                    ReferenceTable::parse(&text)
                        .map_err(|e| ApiError::bad_request(e.to_string()))?,
                ),
                Some(RefsBody::Map(map)) => Some(
                    map.into_iter()
                        .map(|(k, v)| {
                            k.trim().parse::<u32>().map(|n| (n, v)).map_err(|_| {
                                ApiError::bad_request(format!("bad reference number `{k}`"))
                            })
                        })
                        .collect::<Result<ReferenceTable, _>>()?,
                ),
            };
            (Payload(bytes), refs)
        }
        "application/octet-stream" => (Payload(body.to_vec()), None),
        "image/png" => {
            let payload =
                qrio::png_to_payload(body).map_err(|e| ApiError::bad_request(e.to_string()))?;
            (payload, None)
        }
        other => {
            return Err(ApiError::new(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                format!("unsupported content type `{other}`"),
            ))
        }
    };
    if payload.len() > config.max_payload {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!(
                "payload of {} bytes exceeds the {}-byte limit",
                payload.len(),
                config.max_payload
            ),
        ));
    }
    Ok((payload, refs))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecodeResponse {
    pub dialect: u64,
    pub tac: String,
    pub instructions: Vec<String>,
    pub bytes: usize,
    pub size: SizeSummary,
}

/// The size report without the full capacity table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub header_bits: usize,
    pub instruction_bits: Vec<usize>,
    pub total_bits: usize,
    pub padding_bits: usize,
    pub padded_bytes: usize,
    /// Smallest version per error-correction level, if any fits.
    pub versions: BTreeMap<String, Option<u8>>,
}

impl From<&SizeReport> for SizeSummary {
    fn from(r: &SizeReport) -> Self {
        SizeSummary {
            header_bits: r.header_bits,
            instruction_bits: r.instruction_bits.clone(),
            total_bits: r.total_bits,
            padding_bits: r.padding_bits,
            padded_bytes: r.padded_bytes,
            versions: qrio::EcLevel::ALL
                .iter()
                .map(|&ec| (ec.to_string(), r.smallest_version(ec)))
                .collect(),
        }
    }
}

async fn decode(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<DecodeResponse>, ApiError> {
    let (payload, _) = read_payload(&state.config, &headers, &body)?;
    let (dialect, program) = decode_payload(&payload)?;
    let tac = format_tac(&program);
    Ok(Json(DecodeResponse {
        dialect: dialect.0,
        instructions: tac.lines().map(str::to_string).collect(),
        tac,
        bytes: payload.len(),
        size: SizeSummary::from(&measure(&program)),
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionResponse {
    pub id: String,
    pub state: String,
    pub event: SessionEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub id: String,
    pub state: String,
    pub pc: usize,
}

fn state_name(state: SessionState) -> String {
    serde_json::to_value(state)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

async fn create_session(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionResponse>), ApiError> {
    let (payload, refs) = read_payload(&state.config, &headers, &body)?;
    let (_, program) = decode_payload(&payload)?;
    let mut session = Session::new(program, refs)?;
    let event = session.advance()?;
    let session_state = session.state();
    let id = state.store.insert(session);
    Ok((
        StatusCode::CREATED,
        Json(SessionResponse {
            id,
            state: state_name(session_state),
            event,
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    value: String,
}

fn not_found(id: &str) -> ApiError {
    ApiError::new(
        StatusCode::NOT_FOUND,
        format!("no session `{id}` (unknown or expired)"),
    )
}

async fn answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<SessionResponse>, ApiError> {
    if content_type(&headers) != "application/json" {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "answers are sent as JSON {\"value\": ...}",
        ));
    }
    let req: AnswerBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
    let entry = state.store.get(&id).ok_or_else(|| not_found(&id))?;
    let mut session = entry.lock().unwrap_or_else(|e| e.into_inner());
    let event = session.submit_answer(&req.value)?;
    Ok(Json(SessionResponse {
        id,
        state: state_name(session.state()),
        event,
    }))
}

async fn session_status(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionStatus>, ApiError> {
    let entry = state.store.get(&id).ok_or_else(|| not_found(&id))?;
    let session = entry.lock().unwrap_or_else(|e| e.into_inner());
    Ok(Json(SessionStatus {
        id,
        state: state_name(session.state()),
        pc: session.pc(),
    }))
}

/// Serves on `listener` until the future completes or errors, purging expired
/// sessions once a minute.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: ServiceConfig,
) -> std::io::Result<()> {
    let store = Arc::new(SessionStore::new(config.session_ttl));
    let purger = Arc::clone(&store);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            purger.purge_expired();
        }
    });
    axum::serve(listener, router_with_store(config, store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
