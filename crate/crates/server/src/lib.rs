//! HTTP tier: a read-only JSON API over one loaded KML dataset, plus the
//! canonical KML export, view-sync fixtures and the static viewer.

use std::any::Any;
use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use axum::body::Body;
use axum::extract::Request;
use axum::middleware::{self, Next};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;
use tower_http::catch_panic::CatchPanicLayer;
use tower_http::services::ServeDir;

pub mod api;
pub mod state;

pub use api::{ApiError, ErrorCode};
pub use state::{load_state, AppState, LoadError, StateHandle};

const DEFAULT_INDEX_HTML: &str = r#"<!doctype html>
<html>
<head><meta charset="utf-8"><title>geoatlas</title></head>
<body>
<h1>geoatlas</h1>
<ul>
<li><a href="/api/placemarks">/api/placemarks</a></li>
<li><a href="/api/document.kml">/api/document.kml</a></li>
<li><a href="/api/fixtures">/api/fixtures</a></li>
<li><a href="/healthz">/healthz</a></li>
</ul>
</body>
</html>
"#;

fn panic_response(err: Box<dyn Any + Send + 'static>) -> Response<Body> {
    let detail = err
        .downcast_ref::<String>()
        .map(String::as_str)
        .or_else(|| err.downcast_ref::<&str>().copied())
        .unwrap_or("unknown panic");
    log::error!("handler panicked: {detail}");
    ApiError::internal("internal server error").into_response()
}

async fn log_request(req: Request, next: Next) -> Response {
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let start = Instant::now();
    let response = next.run(req).await;
    log::info!(
        "{method} {path} {} {:.3}ms",
        response.status().as_u16(),
        start.elapsed().as_secs_f64() * 1e3
    );
    response
}

/// All routes. With `static_dir`, unmatched non-API paths are served from
/// that directory; otherwise `/` is a small index page.
pub fn router(handle: Arc<StateHandle>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/placemarks", get(api::placemarks_handler))
        .route("/api/placemarks/{id}", get(api::placemark_handler))
        .route(
            "/api/placemarks/{id}/attributes",
            get(api::attributes_handler),
        )
        .route("/api/nearest", get(api::nearest_handler))
        .route("/api/document.kml", get(api::document_handler))
        .route(
            "/api/viewsync/convert",
            get(api::convert_get_handler).post(api::convert_post_handler),
        )
        .route("/api/fixtures", get(api::fixtures_handler))
        .route("/healthz", get(api::health_handler))
        .with_state(handle);

    let app = match static_dir {
        Some(dir) => {
            let files = ServeDir::new(dir)
                .append_index_html_on_directories(true)
                .not_found_service(get(api::not_found_handler).with_state(()));
            api.fallback_service(files)
        }
        None => api
            .route("/", get(|| async { Html(DEFAULT_INDEX_HTML) }))
            .fallback(api::not_found_handler),
    };

    harden(app)
}

/// Error-shaped 405s, panics mapped to `INTERNAL`, one log line per request.
pub fn harden(app: Router) -> Router {
    app.method_not_allowed_fallback(api::method_not_allowed_handler)
        .layer(CatchPanicLayer::custom(panic_response))
        .layer(middleware::from_fn(log_request))
}

/// Reloads the dataset whenever the process receives SIGHUP.
#[cfg(unix)]
pub fn spawn_reload_on_sighup(
    handle: Arc<StateHandle>,
) -> std::io::Result<tokio::task::JoinHandle<()>> {
    use tokio::signal::unix::{signal, SignalKind};
    let mut hangups = signal(SignalKind::hangup())?;
    Ok(tokio::spawn(async move {
        while hangups.recv().await.is_some() {
            match handle.reload() {
                Ok(state) => log::info!(
                    "reloaded {} ({} placemarks)",
                    state.data_path.display(),
                    state.index.len()
                ),
                Err(e) => log::error!("reload failed, keeping previous data: {e}"),
            }
        }
    }))
}

pub async fn serve(
    listener: TcpListener,
    handle: Arc<StateHandle>,
    static_dir: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(handle, static_dir))
        .with_graceful_shutdown(shutdown)
        .await
}
