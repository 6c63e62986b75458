//! HTTP facade over the card engine.
//!
//! All routes live under `/v1/`:
//!
//! | method | path | |
//! |---|---|---|
//! | GET  | `/v1/taxonomies` | known versions |
//! | GET  | `/v1/taxonomies/{version}` | taxonomy document |
//! | POST | `/v1/sessions` | `{"taxonomyVersion":"1.0"}` → 201 `{id, revision, step}` |
//! | GET  | `/v1/sessions/{id}` | current state |
//! | POST | `/v1/sessions/{id}/answers` | `{"revision":0,"answer":{...}}` → 200 `{id, revision, step}` |
//! | POST | `/v1/sessions/{id}/back` | `{"revision":n}` |
//! | POST | `/v1/sessions/{id}/finalize` | → 201 `{cardId, report, links}` |
//! | GET  | `/v1/cards/{id}` | card metadata |
//! | GET  | `/v1/cards/{id}.{json,xml,csv,bib,tex}` | stored export |
//! | POST | `/v1/cards/{id}/dispatch` | `{"recipient":"a@b.org"}` → 202 receipt |
//! | POST | `/v1/validate` | card JSON → validation report |
//!
//! Errors are `{"error": code, "message": text, ...}` with extra fields
//! depending on the code (`path`, `step`, `missing`, `revision`, `cardId`).

pub mod dispatch;
pub mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use aiusage_core::codecs::{decode, ExportBundle, Format};
use aiusage_core::{
    assess, Answer, Registry, Session, SessionError, Step, Unmet, ValidationReport,
};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use dispatch::{Dispatcher, LogDispatcher, OutboxDispatcher, Receipt};
pub use store::{CardMeta, FileStore, StoreError, StoredCard};

/// Settings read from `AIUSAGE_*` environment variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    /// `outbox` (default) or `log`.
    pub dispatcher: String,
    pub outbox: PathBuf,
    /// Prefix for export links; defaults to `http://<listen>`.
    pub public_url: String,
}

impl Config {
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let listen: SocketAddr = get("AIUSAGE_LISTEN")
            .unwrap_or_else(|| "127.0.0.1:8080".into())
            .parse()
            .map_err(|e| format!("AIUSAGE_LISTEN: {e}"))?;
        let data_dir =
            PathBuf::from(get("AIUSAGE_DATA_DIR").unwrap_or_else(|| "aiusage-data".into()));
        let dispatcher = get("AIUSAGE_DISPATCHER").unwrap_or_else(|| "outbox".into());
        if !matches!(dispatcher.as_str(), "outbox" | "log") {
            return Err(format!(
                "AIUSAGE_DISPATCHER: unknown dispatcher `{dispatcher}`"
            ));
        }
        let outbox = get("AIUSAGE_OUTBOX")
            .map(PathBuf::from)
            .unwrap_or_else(|| data_dir.join("outbox"));
        let public_url = get("AIUSAGE_PUBLIC_URL")
            .unwrap_or_else(|| format!("http://{listen}"))
            .trim_end_matches('/')
            .to_string();
        Ok(Self {
            listen,
            data_dir,
            dispatcher,
            outbox,
            public_url,
        })
    }
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    registry: Registry,
    store: FileStore,
    dispatcher: Box<dyn Dispatcher>,
    public_url: String,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(
        registry: Registry,
        store: FileStore,
        dispatcher: Box<dyn Dispatcher>,
        public_url: impl Into<String>,
    ) -> Self {
        Self {
            inner: Arc::new(Inner {
                registry,
                store,
                dispatcher,
                public_url: public_url.into(),
                locks: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn from_config(config: &Config) -> std::io::Result<Self> {
        let store = FileStore::open(&config.data_dir)?;
        let dispatcher: Box<dyn Dispatcher> = match config.dispatcher.as_str() {
            "log" => Box::new(LogDispatcher),
            _ => Box::new(OutboxDispatcher::new(&config.outbox)?),
        };
        Ok(Self::new(
            Registry::builtin(),
            store,
            dispatcher,
            &config.public_url,
        ))
    }

    pub fn store(&self) -> &FileStore {
        &self.inner.store
    }

    pub fn registry(&self) -> &Registry {
        &self.inner.registry
    }

    fn lock_for(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.inner.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    fn links(&self, card_id: &str) -> Value {
        let mut links = serde_json::Map::new();
        for format in Format::ALL {
            links.insert(
                format.extension().to_string(),
                Value::String(format!(
                    "{}/v1/cards/{card_id}.{}",
                    self.inner.public_url,
                    format.extension()
                )),
            );
        }
        Value::Object(links)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/taxonomies", get(list_taxonomies))
        .route("/v1/taxonomies/{version}", get(get_taxonomy))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/answers", post(submit_answer))
        .route("/v1/sessions/{id}/back", post(go_back))
        .route("/v1/sessions/{id}/finalize", post(finalize))
        .route("/v1/cards/{file}", get(get_card))
        .route("/v1/cards/{id}/dispatch", post(dispatch_card))
        .route("/v1/validate", post(validate))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such route") })
        .with_state(state)
}

/// Binds and serves until ctrl-c.
pub async fn serve(config: Config) -> std::io::Result<()> {
    let state = AppState::from_config(&config)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, data = %config.data_dir.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": code, "message": message.into() }),
        }
    }

    fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.body[key] = serde_json::to_value(value).expect("error details serialize");
        self
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        tracing::error!(error = %e, "internal error");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound => {
                Self::new(StatusCode::NOT_FOUND, "not-found", "no such resource")
            }
            other => Self::internal(other),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::UnknownTaxonomy(v) => {
                Self::new(StatusCode::BAD_REQUEST, "unknown-taxonomy", message).with("version", v)
            }
            SessionError::TaxonomyMismatch { .. } => Self::internal(message),
            SessionError::Finalized => Self::new(StatusCode::CONFLICT, "finalized", message),
            SessionError::StepMismatch { expected, .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "step-mismatch", message)
                    .with("step", expected)
            }
            SessionError::PayloadInvalid { path, .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "payload-invalid", message)
                    .with("path", path)
            }
            SessionError::AtFirstStep => Self::new(StatusCode::CONFLICT, "at-first-step", message),
            SessionError::Incomplete { unmet, revisit } => {
                Self::new(StatusCode::CONFLICT, "incomplete", message)
                    .with("step", revisit)
                    .with("missing", unmet)
            }
        }
    }
}

/// Parses a JSON body, reporting the failing field path as a 422.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "payload-invalid",
            e.inner().to_string(),
        )
        .with("path", if path == "." { String::new() } else { path })
    })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub id: String,
    pub taxonomy_version: String,
    pub revision: u64,
    pub finalized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub card_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<Step>,
}

impl AppState {
    fn view(&self, session: &Session) -> Result<SessionView, ApiError> {
        let step = if session.finalized {
            None
        } else {
            let taxonomy = self
                .registry()
                .get(&session.taxonomy_version)
                .map_err(ApiError::internal)?;
            Some(session.current_step(taxonomy)?)
        };
        Ok(SessionView {
            id: session.id.clone(),
            taxonomy_version: session.taxonomy_version.clone(),
            revision: session.revision,
            finalized: session.finalized,
            card_id: session.card_id.clone(),
            step,
        })
    }

    /// Runs `change` on the stored session under its lock, saving the result.
    async fn mutate(
        &self,
        id: &str,
        revision: u64,
        change: impl FnOnce(&aiusage_core::Taxonomy, &Session) -> Result<Session, SessionError>,
    ) -> Result<SessionView, ApiError> {
        let lock = self.lock_for(id);
        let _guard = lock.lock().await;
        let session = self.store().load_session(id)?;
        if session.finalized {
            return Err(ApiError::from(SessionError::Finalized).with("cardId", &session.card_id));
        }
        if session.revision != revision {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "stale-revision",
                format!(
                    "revision {revision} is stale; current is {}",
                    session.revision
                ),
            )
            .with("revision", session.revision));
        }
        let taxonomy = self
            .registry()
            .get(&session.taxonomy_version)
            .map_err(ApiError::internal)?;
        let next = change(taxonomy, &session)?;
        self.store().save_session(&next)?;
        self.view(&next)
    }
}

async fn list_taxonomies(State(state): State<AppState>) -> Json<Value> {
    Json(json!({ "versions": state.registry().versions().collect::<Vec<_>>() }))
}

async fn get_taxonomy(State(state): State<AppState>, Path(version): Path<String>) -> Response {
    match state.registry().get(&version) {
        Ok(taxonomy) => (
            [(header::CONTENT_TYPE, "application/json")],
            aiusage_core::serialize_taxonomy(taxonomy),
        )
            .into_response(),
        Err(e) => {
            ApiError::new(StatusCode::NOT_FOUND, "unknown-taxonomy", e.to_string()).into_response()
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateSession {
    taxonomy_version: String,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: CreateSession = parse_body(&body)?;
    let session = Session::start(state.registry(), &request.taxonomy_version)?;
    state.store().save_session(&session)?;
    Ok((StatusCode::CREATED, Json(state.view(&session)?)).into_response())
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = state.store().load_session(&id)?;
    Ok(Json(state.view(&session)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitAnswer {
    revision: u64,
    answer: Answer,
}

async fn submit_answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    // Unknown sessions are 404 even when the body is malformed.
    state.store().load_session(&id)?;
    let request: SubmitAnswer = parse_body(&body)?;
    let view = state
        .mutate(&id, request.revision, |tax, s| {
            s.submit(tax, request.answer)
        })
        .await?;
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Revision {
    revision: u64,
}

async fn go_back(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    state.store().load_session(&id)?;
    let request: Revision = parse_body(&body)?;
    let view = state
        .mutate(&id, request.revision, |tax, s| s.go_back(tax))
        .await?;
    Ok(Json(view))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Finalized {
    pub card_id: String,
    pub report: ValidationReport,
    pub links: Value,
}

async fn finalize(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let lock = state.lock_for(&id);
    let _guard = lock.lock().await;
    let session = state.store().load_session(&id)?;
    if session.finalized {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "already-finalized",
            "session is already finalized",
        )
        .with("cardId", &session.card_id));
    }
    let taxonomy = state
        .registry()
        .get(&session.taxonomy_version)
        .map_err(ApiError::internal)?;
    let kind = session.current_kind(taxonomy);
    if kind != aiusage_core::StepKind::Review {
        let missing: Vec<Unmet> = session.card(taxonomy).unmet_conditions(taxonomy);
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "incomplete",
            format!("questionnaire is at {kind}, not review"),
        )
        .with("step", kind)
        .with("missing", missing));
    }
    let (mut done, card) = session.finalize(taxonomy)?;
    let report = assess(card.card());
    let bundle = ExportBundle::build(taxonomy, card.card()).map_err(ApiError::internal)?;
    let stored = state
        .store()
        .insert_card(card.card(), bundle, &report, Some(&session.id))?;
    done.card_id = Some(stored.card_id.clone());
    state.store().save_session(&done)?;
    let body = Finalized {
        links: state.links(&stored.card_id),
        card_id: stored.card_id,
        report,
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_card(
    State(state): State<AppState>,
    Path(file): Path<String>,
) -> Result<Response, ApiError> {
    let Some((id, ext)) = file.rsplit_once('.') else {
        let meta = state.store().meta(&file)?;
        let mut body = serde_json::to_value(&meta).expect("meta serializes");
        body["links"] = state.links(&meta.card_id);
        return Ok(Json(body).into_response());
    };
    let format: Format = ext
        .parse()
        .ok()
        .filter(|f: &Format| f.extension() == ext)
        .ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown-format",
                format!("no `{ext}` export"),
            )
        })?;
    let text = state.store().export(id, format)?;
    Ok((
        [
            (header::CONTENT_TYPE, format.media_type().to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("inline; filename=\"card.{}\"", format.extension()),
            ),
        ],
        text,
    )
        .into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DispatchBody {
    recipient: String,
}

async fn dispatch_card(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let request: DispatchBody = parse_body(&body)?;
    let stored = state.store().load_card(&id, state.registry())?;
    let envelope = dispatch::compose(
        &request.recipient,
        &stored.card_id,
        &stored.card.project.project_name,
        &stored.bundle,
    )
    .map_err(|e| match e {
        dispatch::DispatchError::InvalidRecipient(r) => ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid-recipient",
            format!("`{r}` is not an email address"),
        )
        .with("path", "recipient"),
        other => ApiError::internal(other),
    })?;
    let receipt = state
        .inner
        .dispatcher
        .dispatch(&envelope)
        .map_err(ApiError::internal)?;
    Ok((StatusCode::ACCEPTED, Json(receipt)).into_response())
}

async fn validate(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<Json<ValidationReport>, ApiError> {
    let text = std::str::from_utf8(&body).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "schema",
            format!("body is not UTF-8: {e}"),
        )
    })?;
    let card = decode(state.registry(), Format::Json, text).map_err(|e| {
        let error = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "schema", e.to_string());
        match e {
            aiusage_core::CodecError::Schema { path, .. } => error.with("path", path),
            aiusage_core::CodecError::Syntax { line, column, .. } => {
                error.with("line", line).with("column", column)
            }
            _ => error,
        }
    })?;
    Ok(Json(assess(&card)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let config = Config::from_lookup(|_| None).unwrap();
        assert_eq!(config.public_url, "http://127.0.0.1:8080");
        assert_eq!(config.outbox, PathBuf::from("aiusage-data/outbox"));
        let config = Config::from_lookup(|k| match k {
            "AIUSAGE_PUBLIC_URL" => Some("https://cards.example.org/".into()),
            "AIUSAGE_DISPATCHER" => Some("log".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(config.public_url, "https://cards.example.org");
        assert_eq!(config.dispatcher, "log");
        assert!(
            Config::from_lookup(|k| (k == "AIUSAGE_DISPATCHER").then(|| "smtp".into())).is_err()
        );
        assert!(
            Config::from_lookup(|k| (k == "AIUSAGE_LISTEN").then(|| "nowhere".into())).is_err()
        );
    }
}
