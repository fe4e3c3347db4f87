use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::services::ServeDir;

use super::{ReviewService, ServiceError};

const BUILTIN_INDEX: &str = include_str!("index.html");

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let code = match &self {
            ServiceError::InvalidStatus(_) | ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::UnknownItem(_) | ServiceError::UnknownQueue(_) => StatusCode::NOT_FOUND,
            ServiceError::ReadOnly(_) => StatusCode::CONFLICT,
            ServiceError::FileVanished(_) => StatusCode::GONE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        (code, Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct VerdictBody {
    item_id: String,
    status: String,
    #[serde(default)]
    note: String,
    #[serde(default)]
    user: Option<String>,
}

type Svc = State<Arc<ReviewService>>;

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn list_queues(State(svc): Svc) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(blocking(move || svc.list_queues()).await?))
}

async fn get_queue(State(svc): Svc, Path((dataset, pipeline)): Path<(String, String)>) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(blocking(move || svc.get_queue(&dataset, &pipeline)).await?))
}

async fn get_progress(
    State(svc): Svc,
    Path((dataset, pipeline)): Path<(String, String)>,
) -> Result<impl IntoResponse, ServiceError> {
    Ok(Json(blocking(move || svc.get_progress(&dataset, &pipeline)).await?))
}

async fn post_verdict(State(svc): Svc, body: Result<Json<VerdictBody>, axum::extract::rejection::JsonRejection>) -> Result<impl IntoResponse, ServiceError> {
    let Json(b) = body.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    Ok(Json(
        blocking(move || svc.post_verdict(&b.item_id, &b.status, &b.note, b.user.as_deref())).await?,
    ))
}

fn etag_matches(headers: &HeaderMap, etag: &str) -> bool {
    headers
        .get_all(header::IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .map(|t| t.trim().trim_start_matches("W/"))
        .any(|t| t == etag || t == "*")
}

async fn get_png(State(svc): Svc, Path(item_id): Path<String>, headers: HeaderMap) -> Result<Response, ServiceError> {
    let hit = {
        let svc = svc.clone();
        let id = item_id.clone();
        blocking(move || svc.get_png(&id)).await?
    };
    // keep the window ahead of the reader warm
    let ahead = svc.following(&item_id);
    if ahead.iter().any(|id| !svc.cache().contains(id)) {
        let svc = svc.clone();
        tokio::task::spawn_blocking(move || svc.warm(&ahead));
    }

    let etag = HeaderValue::from_str(&hit.png.etag).expect("hex etag is a valid header");
    let x_cache = HeaderValue::from_static(if hit.cached { "hit" } else { "miss" });
    let mut resp = if etag_matches(&headers, &hit.png.etag) {
        Response::builder().status(StatusCode::NOT_MODIFIED).body(Body::empty())
    } else {
        Response::builder()
            .status(StatusCode::OK)
            .header(header::CONTENT_TYPE, "image/png")
            .body(Body::from(bytes_of(&hit.png.bytes)))
    }
    .map_err(|e| ServiceError::Internal(e.to_string()))?;
    let h = resp.headers_mut();
    h.insert(header::ETAG, etag);
    h.insert(header::CACHE_CONTROL, HeaderValue::from_static("no-cache"));
    h.insert("x-cache", x_cache);
    Ok(resp)
}

fn bytes_of(b: &Arc<[u8]>) -> axum::body::Bytes {
    axum::body::Bytes::from_owner(ArcBytes(b.clone()))
}

struct ArcBytes(Arc<[u8]>);

impl AsRef<[u8]> for ArcBytes {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

async fn builtin_index() -> Html<&'static str> {
    Html(BUILTIN_INDEX)
}

/// The `/api` routes plus static assets at `/`: files from `ui_dir` when
/// given, otherwise a minimal built-in page.
pub fn router(svc: Arc<ReviewService>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/queues", get(list_queues))
        .route("/api/queues/{dataset}/{pipeline}", get(get_queue))
        .route("/api/progress/{dataset}/{pipeline}", get(get_progress))
        .route("/api/png/{*item_id}", get(get_png))
        .route("/api/verdict", post(post_verdict))
        .with_state(svc);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.route("/", get(builtin_index)),
    }
}

/// Serve until the process is stopped.
pub async fn serve(svc: Arc<ReviewService>, bind: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("review service on http://{}", listener.local_addr()?);
    axum::serve(listener, router(svc, ui_dir)).await
}
