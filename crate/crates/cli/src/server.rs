//! HTTP JSON API over a [`TaskService`].
//!
//! Mutations (issuing, submitting, adding entities, loading the corpus)
//! take the write lock, so a single writer orders all assignment changes.
//! Statistics and exports share the read lock.

use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use groundcoref::dataset::export::conll_exports;
use groundcoref::service::{AssignmentPlan, ServiceError, SubmissionOutcome, TaskService};
use groundcoref::{write_corpus, AnnotationRecord, CorpusFile, Protocol};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Clone)]
pub struct AppState {
    service: Arc<RwLock<TaskService>>,
    clock: Clock,
}

impl AppState {
    pub fn new(service: TaskService) -> Self {
        Self::with_clock(service, Arc::new(Utc::now))
    }

    /// Tests drive deadlines through an injected clock.
    pub fn with_clock(service: TaskService, clock: Clock) -> Self {
        AppState { service: Arc::new(RwLock::new(service)), clock }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/task", get(next_task))
        .route("/api/annotation", post(submit))
        .route("/api/entity", post(add_entity))
        .route("/api/stats/times", get(timing_stats))
        .route("/api/stats/agreement", get(agreement_stats))
        .route("/api/corpus", post(load_corpus))
        .route("/api/export", get(export))
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub enum ApiError {
    Service(ServiceError),
    BadRequest(String),
    /// The request could not be decoded; keeps axum's status.
    Rejected(StatusCode, String),
    /// A handler panicked while holding the service lock.
    Poisoned,
    Internal(String),
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError::Service(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::Rejected(r.status(), r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::Rejected(r.status(), r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
            ApiError::Rejected(status, m) => (status, "invalid_request", m),
            ApiError::Poisoned => {
                (StatusCode::SERVICE_UNAVAILABLE, "unavailable", "service state is unavailable".into())
            }
            ApiError::Internal(m) => {
                tracing::error!(error = %m, "request failed");
                (StatusCode::INTERNAL_SERVER_ERROR, "internal", m)
            }
            ApiError::Service(e) => {
                let (status, code) = match &e {
                    ServiceError::NotEligible(_) => (StatusCode::FORBIDDEN, "not_eligible"),
                    ServiceError::Inactive(_) => (StatusCode::FORBIDDEN, "inactive"),
                    ServiceError::NotIssued { .. } => (StatusCode::CONFLICT, "not_issued"),
                    ServiceError::NoGroundedTask { .. } => (StatusCode::CONFLICT, "no_grounded_task"),
                    ServiceError::BlankEntityName => (StatusCode::UNPROCESSABLE_ENTITY, "blank_entity_name"),
                    ServiceError::CorpusAlreadyLoaded => (StatusCode::CONFLICT, "corpus_already_loaded"),
                    ServiceError::InvalidCorpus(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_corpus"),
                    ServiceError::InvalidGold { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_gold"),
                    _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
                };
                if status.is_server_error() {
                    tracing::error!(error = %e, "request failed");
                }
                (status, code, e.to_string())
            }
        };
        (status, Json(ErrorBody { error: code.into(), message })).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct TaskQuery {
    pub annotator: String,
    pub protocol: Option<Protocol>,
}

/// 200 with a task bundle, or 204 when nothing is left for this annotator.
async fn next_task(State(s): State<AppState>, q: Result<Query<TaskQuery>, QueryRejection>) -> Result<Response, ApiError> {
    let Query(q) = q?;
    let now = (s.clock)();
    let mut service = s.service.write().map_err(|_| ApiError::Poisoned)?;
    Ok(match service.next_task(&q.annotator, q.protocol, now)? {
        Some(bundle) => Json(bundle).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

/// Rejected submissions answer 422 with the same outcome body.
async fn submit(
    State(s): State<AppState>,
    record: Result<Json<AnnotationRecord>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(record) = record?;
    let now = (s.clock)();
    let outcome = s.service.write().map_err(|_| ApiError::Poisoned)?.submit(record, now)?;
    let status = match outcome {
        SubmissionOutcome::Rejected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::OK,
    };
    Ok((status, Json(outcome)).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NewEntity {
    pub annotator: String,
    pub document_id: String,
    pub name: String,
}

async fn add_entity(State(s): State<AppState>, req: Result<Json<NewEntity>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(req) = req?;
    let now = (s.clock)();
    let entity = s.service.write().map_err(|_| ApiError::Poisoned)?.add_entity(&req.annotator, &req.document_id, &req.name, now)?;
    Ok((StatusCode::CREATED, Json(entity)).into_response())
}

async fn timing_stats(State(s): State<AppState>) -> Result<Response, ApiError> {
    let service = s.service.read().map_err(|_| ApiError::Poisoned)?;
    Ok(Json(service.timing_stats()).into_response())
}

async fn agreement_stats(State(s): State<AppState>) -> Result<Response, ApiError> {
    let service = s.service.read().map_err(|_| ApiError::Poisoned)?;
    Ok(Json(service.agreement_report()?).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusLoaded {
    pub documents: usize,
    pub plan: AssignmentPlan,
}

/// Accepts an ingested corpus file. Records are refused: annotations enter
/// only through submissions.
async fn load_corpus(State(s): State<AppState>, corpus: Result<Json<CorpusFile>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(corpus) = corpus?;
    if !corpus.records.is_empty() {
        return Err(ApiError::BadRequest("an ingested corpus must not carry annotation records".into()));
    }
    let mut service = s.service.write().map_err(|_| ApiError::Poisoned)?;
    service.load_corpus(corpus.documents)?;
    let body = CorpusLoaded { documents: service.documents().len(), plan: service.plan().clone() };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Json,
    Conll,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    pub format: ExportFormat,
}

/// `json` returns the corpus file; `conll` returns one entry per grounded
/// record with the CoNLL text and its sidecar.
async fn export(State(s): State<AppState>, q: Result<Query<ExportQuery>, QueryRejection>) -> Result<Response, ApiError> {
    let Query(q) = q?;
    let corpus = s.service.read().map_err(|_| ApiError::Poisoned)?.export();
    Ok(match q.format {
        ExportFormat::Json => {
            let bytes = write_corpus(&corpus).map_err(|e| ApiError::Internal(e.to_string()))?;
            ([(header::CONTENT_TYPE, "application/json")], bytes).into_response()
        }
        ExportFormat::Conll => Json(conll_exports(&corpus)).into_response(),
    })
}

/// Bind and serve until ctrl-c.
pub async fn serve(state: AppState, addr: std::net::SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
