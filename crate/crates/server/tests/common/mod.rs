//! Golden-file harness for the HTTP endpoints over the bundled Ede dataset.
//!
//! Set `GEOATLAS_UPDATE_GOLDEN=1` to rewrite the files under `tests/golden`.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use geoatlas_core::kml::{AxisOrder, ParseMode, ParseOptions};
use geoatlas_server::{load_state, router, StateHandle};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub struct Case {
    pub name: &'static str,
    pub method: Method,
    pub uri: &'static str,
    pub body: Option<&'static str>,
    pub status: StatusCode,
}

const fn get(name: &'static str, uri: &'static str, status: StatusCode) -> Case {
    Case {
        name,
        method: Method::GET,
        uri,
        body: None,
        status,
    }
}

pub const DEFAULT_CAMERA_REQUEST: &str = r#"{"direction":"to-mapview","view":{"target":{"lat":7.73687489,"lng":4.43611944},"altitude_m":10,"altitude_mode":"relative-to-ground","heading_deg":5,"tilt_deg":70,"range_m":300}}"#;
pub const ZOOM_ONE_REQUEST: &str =
    r#"{"direction":"to-lookat","view":{"center":{"lat":7.73687489,"lng":4.43611944},"zoom":1}}"#;

pub fn cases() -> Vec<Case> {
    vec![
        get("healthz", "/healthz", StatusCode::OK),
        get("root", "/", StatusCode::OK),
        get("placemarks", "/api/placemarks", StatusCode::OK),
        get(
            "placemarks_bbox_town_hall",
            "/api/placemarks?bbox=4.4360,7.7368,4.4362,7.7370",
            StatusCode::OK,
        ),
        get("placemarks_bbox_empty", "/api/placemarks?bbox=0,0,1,1", StatusCode::OK),
        get("placemarks_bbox_malformed", "/api/placemarks?bbox=abc", StatusCode::BAD_REQUEST),
        get(
            "placemarks_bbox_inverted",
            "/api/placemarks?bbox=4.5,7.8,4.4,7.7",
            StatusCode::BAD_REQUEST,
        ),
        get("placemark_town_hall", "/api/placemarks/town-hall", StatusCode::OK),
        get("placemark_old_palace", "/api/placemarks/old-palace", StatusCode::OK),
        get("placemark_unknown", "/api/placemarks/no-such-place", StatusCode::NOT_FOUND),
        get("attributes_mosque", "/api/placemarks/mosque/attributes", StatusCode::OK),
        get("attributes_old_palace", "/api/placemarks/old-palace/attributes", StatusCode::OK),
        get(
            "attributes_unknown",
            "/api/placemarks/no-such-place/attributes",
            StatusCode::NOT_FOUND,
        ),
        get(
            "nearest_town_hall",
            "/api/nearest?lat=7.73687489&lng=4.43611944&k=1",
            StatusCode::OK,
        ),
        get("nearest_all", "/api/nearest?lat=7.7360&lng=4.4360&k=10", StatusCode::OK),
        get("nearest_k0", "/api/nearest?lat=7.7&lng=4.4&k=0", StatusCode::BAD_REQUEST),
        get("nearest_missing_lat", "/api/nearest?lng=4.4", StatusCode::BAD_REQUEST),
        get("nearest_bad_lat", "/api/nearest?lat=95&lng=4.4", StatusCode::BAD_REQUEST),
        get("document_kml", "/api/document.kml", StatusCode::OK),
        Case {
            name: "convert_default_camera",
            method: Method::POST,
            uri: "/api/viewsync/convert",
            body: Some(DEFAULT_CAMERA_REQUEST),
            status: StatusCode::OK,
        },
        Case {
            name: "convert_zoom_one",
            method: Method::POST,
            uri: "/api/viewsync/convert",
            body: Some(ZOOM_ONE_REQUEST),
            status: StatusCode::OK,
        },
        get(
            "convert_get",
            "/api/viewsync/convert?direction=to-lookat&view=%7B%22center%22%3A%7B%22lat%22%3A7.73687489%2C%22lng%22%3A4.43611944%7D%2C%22zoom%22%3A2%7D",
            StatusCode::OK,
        ),
        Case {
            name: "convert_malformed",
            method: Method::POST,
            uri: "/api/viewsync/convert",
            body: Some(r#"{"direction":"to-mapview","view":{"zoom":3}}"#),
            status: StatusCode::BAD_REQUEST,
        },
        Case {
            name: "convert_not_json",
            method: Method::POST,
            uri: "/api/viewsync/convert",
            body: Some("not json"),
            status: StatusCode::BAD_REQUEST,
        },
        get("fixtures", "/api/fixtures", StatusCode::OK),
        get("unknown_route", "/api/nothing-here", StatusCode::NOT_FOUND),
        Case {
            name: "method_not_allowed",
            method: Method::DELETE,
            uri: "/healthz",
            body: None,
            status: StatusCode::METHOD_NOT_ALLOWED,
        },
    ]
}

pub fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn ede_handle() -> Arc<StateHandle> {
    let opts = ParseOptions::new(AxisOrder::LatLon, ParseMode::Lenient);
    Arc::new(StateHandle::new(
        load_state(&data_path("ede_sample.kml"), opts).expect("bundled sample loads"),
    ))
}

pub fn ede_router() -> Router {
    router(ede_handle(), None)
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: String,
    pub body: Vec<u8>,
}

pub async fn send(app: &Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    let mut builder = Request::builder().method(method).uri(uri);
    if body.is_some() {
        builder = builder.header(header::CONTENT_TYPE, "application/json");
    }
    let req = builder
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(req).await.unwrap();
    let status = response.status();
    let content_type = response
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_string();
    let body = response
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    Reply {
        status,
        content_type,
        body,
    }
}

fn golden_file(case: &Case, content_type: &str) -> PathBuf {
    let ext = if content_type.starts_with("application/json") {
        "json"
    } else if content_type.starts_with("application/vnd.google-earth.kml+xml") {
        "kml"
    } else {
        "txt"
    };
    golden_dir().join(format!("{}.{ext}", case.name))
}

/// Runs one case and compares status, the error shape for failures, and the
/// body bytes with the golden file.
pub async fn check_case(app: &Router, case: &Case, update: bool) -> Result<(), String> {
    let reply = send(app, case.method.clone(), case.uri, case.body).await;
    if reply.status != case.status {
        return Err(format!(
            "{}: status {} != {}; body {}",
            case.name,
            reply.status,
            case.status,
            String::from_utf8_lossy(&reply.body)
        ));
    }
    if !case.status.is_success() {
        let v: serde_json::Value = serde_json::from_slice(&reply.body)
            .map_err(|e| format!("{}: error body is not JSON: {e}", case.name))?;
        let code = v["error"]["code"].as_str().unwrap_or("");
        let expected = match case.status {
            StatusCode::NOT_FOUND => "NOT_FOUND",
            StatusCode::INTERNAL_SERVER_ERROR => "INTERNAL",
            _ => "BAD_REQUEST",
        };
        if code != expected
            || !v["error"]["message"].is_string()
            || v.as_object().map(|o| o.len()) != Some(1)
        {
            return Err(format!("{}: bad error shape {v}", case.name));
        }
    }
    let path = golden_file(case, &reply.content_type);
    if update {
        std::fs::write(&path, &reply.body).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(());
    }
    let expected = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected != reply.body {
        return Err(format!(
            "{}: body differs from {}\n--- got\n{}",
            case.name,
            path.display(),
            String::from_utf8_lossy(&reply.body)
        ));
    }
    Ok(())
}

pub fn update_requested() -> bool {
    std::env::var_os("GEOATLAS_UPDATE_GOLDEN").is_some_and(|v| v == "1")
}
