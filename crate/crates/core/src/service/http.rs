//! JSON-over-HTTP front of [`Service`].

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use super::{EventKind, Service, ServiceError};
use crate::pipeline::Stage;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::Invalid { .. } => StatusCode::BAD_REQUEST,
            ServiceError::NotFound { .. } => StatusCode::NOT_FOUND,
            ServiceError::Expired(_) => StatusCode::GONE,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{self}");
        }
        let body = json!({"error": {"stage": self.stage(), "message": self.message()}});
        (status, Json(body)).into_response()
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Invalid {
        stage: Stage::Validate,
        message: format!("invalid request body: {e}"),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default = "anonymous")]
    user: String,
    query: String,
}

fn anonymous() -> String {
    "anonymous".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Expand {
    entity: String,
}

#[derive(Deserialize)]
struct GraphParams {
    k: Option<usize>,
}

type Shared = State<Arc<Service>>;

async fn create_session(State(svc): Shared, body: Bytes) -> Result<Response, ServiceError> {
    let req: CreateSession = parse_body(&body)?;
    let payload = svc.create_session(&req.user, &req.query).await?;
    Ok((StatusCode::CREATED, Json(payload)).into_response())
}

async fn graph(
    State(svc): Shared,
    UrlPath(id): UrlPath<String>,
    Query(params): Query<GraphParams>,
) -> Result<Response, ServiceError> {
    Ok(Json(svc.graph(&id, params.k)?).into_response())
}

async fn tab(State(svc): Shared, UrlPath((id, source)): UrlPath<(String, String)>) -> Result<Response, ServiceError> {
    Ok(Json(svc.tab(&id, &source)?).into_response())
}

async fn expand(State(svc): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Response, ServiceError> {
    let req: Expand = parse_body(&body)?;
    Ok(Json(svc.expand(&id, &req.entity).await?).into_response())
}

async fn event(State(svc): Shared, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Response, ServiceError> {
    let kind: EventKind = parse_body(&body)?;
    svc.log_event(&id, kind)?;
    Ok(Json(json!({"ok": true})).into_response())
}

async fn metrics(State(svc): Shared) -> Result<Response, ServiceError> {
    Ok(Json(svc.metrics()?).into_response())
}

async fn doc(State(svc): Shared, UrlPath((id, doc_id)): UrlPath<(String, String)>) -> Result<Response, ServiceError> {
    Ok(Json(svc.doc(&id, &doc_id)?).into_response())
}

async fn not_found() -> ServiceError {
    ServiceError::NotFound {
        stage: Stage::Validate,
        message: "no such endpoint".into(),
    }
}

/// All API routes.
pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/api/session", post(create_session))
        .route("/api/session/{id}/graph", get(graph))
        .route("/api/session/{id}/tab/{source}", get(tab))
        .route("/api/session/{id}/expand", post(expand))
        .route("/api/session/{id}/event", post(event))
        .route("/api/metrics", get(metrics))
        .route("/api/doc/{session}/{doc_id}", get(doc))
        .fallback(not_found)
        .with_state(service)
}

/// API routes plus static front-end assets served from `dir`.
pub fn router_with_assets(service: Arc<Service>, dir: &Path) -> Router {
    let api = router(service);
    let assets = tower_http::services::ServeDir::new(dir);
    Router::new().merge(api.fallback_service(assets))
}

/// Binds `addr` and serves until the task is cancelled.
pub async fn serve(router: Router, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router).await
}
