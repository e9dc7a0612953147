//! JSON over HTTP for the annotation store.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/sessions` | `{"annotator_id", "order_seed"?}` |
//! | GET | `/sessions/{id}` | |
//! | GET | `/sessions/{id}/next` | |
//! | POST | `/sessions/{id}/labels` | `{"tweet_id", "label"}` |
//! | POST | `/sessions/{id}/labels/{tweet_id}/revise` | `{"label"}` |
//! | GET | `/agreement?a=&b=` | |
//! | POST | `/merge` | `{"a", "b", "policy"}` |
//! | GET | `/guidelines` | |
//!
//! Errors are returned as `{"code", "message"}`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::AnnotationError;
use crate::guidelines::guidelines;
use crate::store::{MergePolicy, Store};

/// Header used to name the annotator when the body does not.
pub const ANNOTATOR_HEADER: &str = "x-annotator-id";

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError(AnnotationError);

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            AnnotationError::NotFound { .. } => StatusCode::NOT_FOUND,
            AnnotationError::Conflict(_) => StatusCode::CONFLICT,
            AnnotationError::Validation(_) | AnnotationError::Incomplete { .. } | AnnotationError::CorpusMismatch => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            AnnotationError::Core(_) => StatusCode::BAD_REQUEST,
            AnnotationError::Storage { .. } | AnnotationError::CorruptLog { .. } => {
                log::error!("{}", self.0);
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let mut body = json!({ "code": self.0.code(), "message": self.0.to_string() });
        if let AnnotationError::Incomplete { missing } = &self.0 {
            body["missing"] = json!(missing);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parses a JSON body ourselves so malformed input gets the same error shape
/// as every other failure.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| AnnotationError::Validation(format!("invalid request body: {e}")).into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    annotator_id: Option<String>,
    order_seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitLabel {
    tweet_id: String,
    label: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviseLabel {
    label: i64,
}

#[derive(Deserialize)]
struct PairQuery {
    a: String,
    b: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MergeRequest {
    a: String,
    b: String,
    #[serde(default = "default_policy")]
    policy: MergePolicy,
}

fn default_policy() -> MergePolicy {
    MergePolicy::RequireAgreement
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_item))
        .route("/sessions/{id}/labels", post(submit_label))
        .route("/sessions/{id}/labels/{tweet_id}/revise", post(revise_label))
        .route("/agreement", get(agreement))
        .route("/merge", post(merge))
        .route("/guidelines", get(get_guidelines))
        .with_state(store)
}

async fn create_session(State(store): State<Arc<Store>>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = if body.is_empty() {
        CreateSession {
            annotator_id: None,
            order_seed: None,
        }
    } else {
        parse_body(&body)?
    };
    let annotator = req
        .annotator_id
        .or_else(|| {
            headers
                .get(ANNOTATOR_HEADER)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        })
        .ok_or_else(|| AnnotationError::Validation("annotator_id is required".into()))?;
    let order_seed = req.order_seed.unwrap_or_else(rand::random);
    let s = store.create_session(&annotator, order_seed)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "session_id": s.session_id,
            "annotator_id": s.annotator_id,
            "order_seed": s.order_seed,
            "guideline_version": s.guideline_version,
            "total": s.queue.len(),
        })),
    )
        .into_response())
}

async fn get_session(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = store.session(&id)?;
    Ok(Json(json!({
        "session_id": s.session_id,
        "annotator_id": s.annotator_id,
        "order_seed": s.order_seed,
        "guideline_version": s.guideline_version,
        "progress": s.progress(),
    }))
    .into_response())
}

async fn next_item(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(store.next_item(&id)?).into_response())
}

async fn submit_label(State(store): State<Arc<Store>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: SubmitLabel = parse_body(&body)?;
    let progress = store.submit_label(&id, &req.tweet_id, req.label)?;
    Ok(Json(json!({ "ok": true, "progress": progress })).into_response())
}

async fn revise_label(
    State(store): State<Arc<Store>>,
    Path((id, tweet_id)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: ReviseLabel = parse_body(&body)?;
    let progress = store.revise_label(&id, &tweet_id, req.label)?;
    Ok(Json(json!({ "ok": true, "progress": progress })).into_response())
}

async fn agreement(
    State(store): State<Arc<Store>>,
    query: Result<Query<PairQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query.map_err(|e| AnnotationError::Validation(format!("query parameters a and b are required: {e}")))?;
    Ok(Json(store.live_kappa(&q.a, &q.b)?).into_response())
}

async fn merge(State(store): State<Arc<Store>>, body: Bytes) -> ApiResult<Response> {
    let req: MergeRequest = parse_body(&body)?;
    Ok(Json(store.merge_annotations(&req.a, &req.b, req.policy)?).into_response())
}

async fn get_guidelines() -> Response {
    Json(guidelines()).into_response()
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: SocketAddr, store: Arc<Store>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}
