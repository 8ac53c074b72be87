use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use geoatlas_core::geo::{BBox, GeoPoint};
use geoatlas_core::kml::{
    get_attribute_text, serialize_document, Geometry, Placemark, KML_MEDIA_TYPE,
};
use geoatlas_core::sync::{lookat_to_mapview, mapview_to_lookat, LookAt, MapView};
use serde::{Deserialize, Serialize};

use crate::state::{AppState, StateHandle};

/// Longest summary name, in characters.
pub const SUMMARY_NAME_MAX_CHARS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    NotFound,
    BadRequest,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            code: ErrorCode::NotFound,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            code: ErrorCode::BadRequest,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            code: ErrorCode::Internal,
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self.code {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(ErrorBody { error: &self })).into_response()
    }
}

type Shared = State<Arc<StateHandle>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacemarkSummary {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lng: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyValue {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GeometryDetail {
    Point {
        point: GeoPoint,
    },
    Polygon {
        outer: Vec<GeoPoint>,
        inners: Vec<Vec<GeoPoint>>,
        tessellate: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlacemarkDetail {
    pub id: String,
    pub name: String,
    pub description: String,
    pub style_ref: Option<String>,
    pub center: GeoPoint,
    pub geometry: GeometryDetail,
    /// Extrusion for 3D footprints; `null` for points.
    pub extrude_height_m: Option<f64>,
    pub attributes: Vec<KeyValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeList {
    pub id: String,
    pub attributes: Vec<KeyValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NearestHit {
    pub id: String,
    pub distance_m: f64,
}

fn key_values(pairs: Vec<(String, String)>) -> Vec<KeyValue> {
    pairs
        .into_iter()
        .map(|(key, value)| KeyValue { key, value })
        .collect()
}

fn truncate_chars(s: &str, max: usize) -> String {
    s.chars().take(max).collect()
}

pub fn list_placemarks(
    state: &AppState,
    bbox: Option<&str>,
) -> Result<Vec<PlacemarkSummary>, ApiError> {
    let ids: Option<Vec<&str>> = match bbox {
        Some(text) => {
            let bbox: BBox = text
                .parse()
                .map_err(|e| ApiError::bad_request(format!("bbox {text:?}: {e}")))?;
            Some(state.index.query_bbox(&bbox))
        }
        None => None,
    };
    Ok(state
        .index
        .entries()
        .iter()
        .filter(|e| ids.as_ref().is_none_or(|ids| ids.contains(&e.id.as_str())))
        .map(|e| PlacemarkSummary {
            id: e.id.clone(),
            name: state
                .document
                .placemark(&e.id)
                .map(|pm| truncate_chars(&pm.name, SUMMARY_NAME_MAX_CHARS))
                .unwrap_or_default(),
            lat: e.point.lat_deg,
            lng: e.point.lng_deg,
        })
        .collect())
}

fn placemark<'a>(state: &'a AppState, id: &str) -> Result<&'a Placemark, ApiError> {
    state
        .document
        .placemark(id)
        .ok_or_else(|| ApiError::not_found(format!("no placemark with id {id:?}")))
}

pub fn get_placemark(state: &AppState, id: &str) -> Result<PlacemarkDetail, ApiError> {
    let pm = placemark(state, id)?;
    let center = state
        .index
        .get(id)
        .map(|e| e.point)
        .ok_or_else(|| ApiError::internal(format!("placemark {id:?} missing from index")))?;
    let (geometry, extrude_height_m) = match &pm.geometry {
        Geometry::Point(p) => (GeometryDetail::Point { point: *p }, None),
        Geometry::Polygon(poly) => (
            GeometryDetail::Polygon {
                outer: poly.outer.vertices().to_vec(),
                inners: poly.inners.iter().map(|r| r.vertices().to_vec()).collect(),
                tessellate: poly.tessellate,
            },
            Some(poly.effective_extrude_height_m()),
        ),
    };
    Ok(PlacemarkDetail {
        id: pm.id.clone(),
        name: pm.name.clone(),
        description: pm.description.clone(),
        style_ref: pm.style_ref.clone(),
        center,
        geometry,
        extrude_height_m,
        attributes: key_values(pm.attributes.clone()),
    })
}

pub fn get_attributes(state: &AppState, id: &str) -> Result<AttributeList, ApiError> {
    let pairs = get_attribute_text(&state.document, id)
        .map_err(|_| ApiError::not_found(format!("no placemark with id {id:?}")))?;
    Ok(AttributeList {
        id: id.to_string(),
        attributes: key_values(pairs),
    })
}

pub fn search_nearest(
    state: &AppState,
    p: &GeoPoint,
    k: usize,
) -> Result<Vec<NearestHit>, ApiError> {
    p.validate()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let k = NonZeroUsize::new(k).ok_or_else(|| ApiError::bad_request("k must be at least 1"))?;
    Ok(state
        .index
        .query_nearest(p, k)
        .into_iter()
        .map(|(id, distance_m)| NearestHit { id, distance_m })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvertDirection {
    ToMapview,
    ToLookat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ConvertedView {
    MapView(MapView),
    LookAt(LookAt),
}

/// `view` is a bare `LookAt` for `to-mapview` and a bare `MapView` for
/// `to-lookat`.
pub fn convert_view(
    direction: ConvertDirection,
    view: serde_json::Value,
) -> Result<ConvertedView, ApiError> {
    let bad = |e: &dyn std::fmt::Display| ApiError::bad_request(format!("view: {e}"));
    match direction {
        ConvertDirection::ToMapview => {
            let la: LookAt = serde_json::from_value(view).map_err(|e| bad(&e))?;
            la.validate().map_err(|e| bad(&e))?;
            lookat_to_mapview(&la)
                .map(ConvertedView::MapView)
                .map_err(|e| bad(&e))
        }
        ConvertDirection::ToLookat => {
            let mv: MapView = serde_json::from_value(view).map_err(|e| bad(&e))?;
            mv.validate().map_err(|e| bad(&e))?;
            mapview_to_lookat(&mv)
                .map(ConvertedView::LookAt)
                .map_err(|e| bad(&e))
        }
    }
}

#[derive(Deserialize)]
struct ConvertRequest {
    direction: ConvertDirection,
    view: serde_json::Value,
}

fn parse_convert_request(bytes: &[u8]) -> Result<ConvertRequest, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(format!("request body: {e}")))
}

pub(crate) async fn placemarks_handler(
    State(handle): Shared,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Vec<PlacemarkSummary>>, ApiError> {
    list_placemarks(&handle.snapshot(), q.get("bbox").map(String::as_str)).map(Json)
}

pub(crate) async fn placemark_handler(
    State(handle): Shared,
    Path(id): Path<String>,
) -> Result<Json<PlacemarkDetail>, ApiError> {
    get_placemark(&handle.snapshot(), &id).map(Json)
}

pub(crate) async fn attributes_handler(
    State(handle): Shared,
    Path(id): Path<String>,
) -> Result<Json<AttributeList>, ApiError> {
    get_attributes(&handle.snapshot(), &id).map(Json)
}

fn number_param(q: &HashMap<String, String>, key: &str) -> Result<Option<f64>, ApiError> {
    q.get(key)
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| ApiError::bad_request(format!("{key} must be a number, got {v:?}")))
        })
        .transpose()
}

pub(crate) async fn nearest_handler(
    State(handle): Shared,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Vec<NearestHit>>, ApiError> {
    let lat = number_param(&q, "lat")?.ok_or_else(|| ApiError::bad_request("lat is required"))?;
    let lng = number_param(&q, "lng")?.ok_or_else(|| ApiError::bad_request("lng is required"))?;
    let k = match q.get("k") {
        Some(v) => v.trim().parse::<usize>().map_err(|_| {
            ApiError::bad_request(format!("k must be a positive integer, got {v:?}"))
        })?,
        None => 1,
    };
    let p = GeoPoint {
        lat_deg: lat,
        lng_deg: lng,
        alt_m: None,
    };
    search_nearest(&handle.snapshot(), &p, k).map(Json)
}

pub(crate) async fn document_handler(State(handle): Shared) -> Response {
    let text = serialize_document(&handle.snapshot().document);
    ([(header::CONTENT_TYPE, KML_MEDIA_TYPE)], text).into_response()
}

pub(crate) async fn convert_get_handler(
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<ConvertedView>, ApiError> {
    let direction = q
        .get("direction")
        .ok_or_else(|| ApiError::bad_request("direction is required"))?;
    let view = q
        .get("view")
        .ok_or_else(|| ApiError::bad_request("view is required"))?;
    let body = format!(
        "{{\"direction\":{},\"view\":{}}}",
        serde_json::Value::from(direction.as_str()),
        view
    );
    let req = parse_convert_request(body.as_bytes())?;
    convert_view(req.direction, req.view).map(Json)
}

pub(crate) async fn convert_post_handler(body: Bytes) -> Result<Json<ConvertedView>, ApiError> {
    let req = parse_convert_request(&body)?;
    convert_view(req.direction, req.view).map(Json)
}

pub(crate) async fn fixtures_handler(State(handle): Shared) -> Response {
    let text = handle.fixtures_json();
    (
        [(header::CONTENT_TYPE, "application/json")],
        text.to_string(),
    )
        .into_response()
}

pub(crate) async fn health_handler() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub(crate) async fn not_found_handler() -> ApiError {
    ApiError::not_found("no such route")
}

pub(crate) async fn method_not_allowed_handler() -> Response {
    let mut response = ApiError::bad_request("method not allowed on this route").into_response();
    *response.status_mut() = StatusCode::METHOD_NOT_ALLOWED;
    response
}
