//! The KML-subset attribute database.
//!
//! Supported elements: `kml`, `Document`, `Style` (with `IconStyle/color` and
//! `IconStyle/Icon/href`), `Placemark`, `name`, `description`, `styleUrl`,
//! `Point`, `Polygon`, `tessellate`, `outerBoundaryIs`, `innerBoundaryIs`,
//! `LinearRing` and `coordinates`. Anything else is skipped with an
//! `UNKNOWN_ELEMENT` warning.
//!
//! Name and description text is whitespace-collapsed on ingest, so a document
//! round-trips through [`serialize_document`] and [`parse_document`] only if
//! its text is already collapsed and its coordinates carry at most nine
//! decimal places.

mod coords;
mod parse;
mod serialize;
mod validate;
mod xml;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geo::GeoPoint;

pub use coords::{parse_coordinate_string, parse_coordinates};
pub use parse::parse_document;
pub use serialize::{serialize_document, KML_MEDIA_TYPE};
pub use validate::validate_document;

/// Extrusion used by the scene view when a polygon carries no explicit height.
pub const DEFAULT_EXTRUDE_HEIGHT_M: f64 = 8.0;

/// Tolerance for ring closure, in degrees.
pub const RING_CLOSURE_TOLERANCE_DEG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AxisOrder {
    /// KML standard `lng,lat[,alt]`.
    #[default]
    LonLat,
    /// `lat,lng[,alt]`, as found in hand-written files.
    LatLon,
}

impl FromStr for AxisOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lon-lat" | "lng-lat" | "lonlat" => Ok(AxisOrder::LonLat),
            "lat-lon" | "lat-lng" | "latlon" => Ok(AxisOrder::LatLon),
            other => Err(format!(
                "unknown axis order {other:?} (expected lon-lat or lat-lon)"
            )),
        }
    }
}

impl fmt::Display for AxisOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisOrder::LonLat => "lon-lat",
            AxisOrder::LatLon => "lat-lon",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ParseMode {
    #[default]
    Lenient,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ParseOptions {
    pub axis_order: AxisOrder,
    pub mode: ParseMode,
}

impl ParseOptions {
    pub fn new(axis_order: AxisOrder, mode: ParseMode) -> Self {
        ParseOptions { axis_order, mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "WARNING",
            Severity::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueCode {
    MultipleNames,
    UnclosedRing,
    DegenerateRing,
    BadCoordinate,
    UnknownElement,
    TessellateRange,
    UnresolvedStyle,
    DuplicateId,
    EmptyName,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::MultipleNames => "MULTIPLE_NAMES",
            IssueCode::UnclosedRing => "UNCLOSED_RING",
            IssueCode::DegenerateRing => "DEGENERATE_RING",
            IssueCode::BadCoordinate => "BAD_COORDINATE",
            IssueCode::UnknownElement => "UNKNOWN_ELEMENT",
            IssueCode::TessellateRange => "TESSELLATE_RANGE",
            IssueCode::UnresolvedStyle => "UNRESOLVED_STYLE",
            IssueCode::DuplicateId => "DUPLICATE_ID",
            IssueCode::EmptyName => "EMPTY_NAME",
        }
    }

    /// Evaluation order within one placemark. Strict mode reports the first.
    pub(crate) fn rule_rank(self) -> u8 {
        match self {
            IssueCode::MultipleNames => 0,
            IssueCode::UnclosedRing => 1,
            IssueCode::DegenerateRing => 2,
            IssueCode::BadCoordinate => 3,
            IssueCode::TessellateRange => 4,
            IssueCode::UnknownElement => 5,
            IssueCode::DuplicateId => 6,
            IssueCode::EmptyName => 7,
            IssueCode::UnresolvedStyle => 8,
        }
    }

    /// Codes that abort a strict parse.
    pub fn aborts_strict(self) -> bool {
        matches!(
            self,
            IssueCode::MultipleNames
                | IssueCode::UnclosedRing
                | IssueCode::DegenerateRing
                | IssueCode::BadCoordinate
        )
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: IssueCode,
    pub placemark_id: Option<String>,
    pub message: String,
    pub line: Option<u32>,
}

impl ValidationIssue {
    pub fn new(severity: Severity, code: IssueCode, message: impl Into<String>) -> Self {
        ValidationIssue {
            severity,
            code,
            placemark_id: None,
            message: message.into(),
            line: None,
        }
    }

    pub fn for_placemark(mut self, id: impl Into<String>) -> Self {
        self.placemark_id = Some(id.into());
        self
    }

    pub fn at_line(mut self, line: u32) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ValidationIssue {
    /// `SEVERITY CODE placemark=<id> line=<n> <message>`; absent fields print `-`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} placemark={} line={} {}",
            self.severity,
            self.code,
            self.placemark_id.as_deref().unwrap_or("-"),
            self.line.map_or_else(|| "-".to_string(), |l| l.to_string()),
            self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KmlError {
    #[error("MALFORMED_XML at line {line}: {message}")]
    MalformedXml { message: String, line: u32 },
    #[error("strict parse failed: {0}")]
    Strict(ValidationIssue),
    #[error("BAD_COORDINATE: {0}")]
    BadCoordinate(String),
    #[error("NOT_FOUND: no placemark with id {0:?}")]
    NotFound(String),
}

impl KmlError {
    pub fn code(&self) -> &'static str {
        match self {
            KmlError::MalformedXml { .. } => "MALFORMED_XML",
            KmlError::Strict(issue) => issue.code.as_str(),
            KmlError::BadCoordinate(_) => "BAD_COORDINATE",
            KmlError::NotFound(_) => "NOT_FOUND",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RingError {
    #[error("ring is not closed (first and last vertex differ)")]
    Unclosed,
    #[error("ring has {0} distinct vertices, need at least 3")]
    Degenerate(usize),
}

/// A closed ring: the first vertex is repeated as the last.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRing {
    vertices: Vec<GeoPoint>,
}

impl LinearRing {
    pub fn new(vertices: Vec<GeoPoint>) -> Result<Self, RingError> {
        if !ring_is_closed(&vertices) {
            return Err(RingError::Unclosed);
        }
        let distinct = distinct_vertices(&vertices).len();
        if distinct < 3 {
            return Err(RingError::Degenerate(distinct));
        }
        Ok(LinearRing { vertices })
    }

    /// Closes an open vertex list by repeating its first vertex.
    pub fn from_open(mut vertices: Vec<GeoPoint>) -> Result<Self, RingError> {
        if let Some(first) = vertices.first().copied() {
            if !ring_is_closed(&vertices) {
                vertices.push(first);
            }
        }
        LinearRing::new(vertices)
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    /// Vertices without the closing repeat and without exact duplicates,
    /// in first-occurrence order.
    pub fn distinct_vertices(&self) -> Vec<GeoPoint> {
        distinct_vertices(&self.vertices)
    }
}

pub(crate) fn ring_is_closed(vertices: &[GeoPoint]) -> bool {
    match (vertices.first(), vertices.last()) {
        (Some(a), Some(b)) => {
            (a.lat_deg - b.lat_deg).abs() <= RING_CLOSURE_TOLERANCE_DEG
                && (a.lng_deg - b.lng_deg).abs() <= RING_CLOSURE_TOLERANCE_DEG
        }
        _ => false,
    }
}

pub(crate) fn distinct_vertices(vertices: &[GeoPoint]) -> Vec<GeoPoint> {
    let body = if vertices.len() > 1 && ring_is_closed(vertices) {
        &vertices[..vertices.len() - 1]
    } else {
        vertices
    };
    let mut seen = std::collections::HashSet::new();
    body.iter()
        .filter(|p| seen.insert(((p.lat_deg + 0.0).to_bits(), (p.lng_deg + 0.0).to_bits())))
        .map(GeoPoint::flattened)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub outer: LinearRing,
    pub inners: Vec<LinearRing>,
    pub tessellate: bool,
    /// Viewer hint; `None` means [`DEFAULT_EXTRUDE_HEIGHT_M`].
    pub extrude_height_m: Option<f64>,
}

impl Polygon {
    pub fn new(outer: LinearRing) -> Self {
        Polygon {
            outer,
            inners: Vec::new(),
            tessellate: true,
            extrude_height_m: None,
        }
    }

    pub fn effective_extrude_height_m(&self) -> f64 {
        self.extrude_height_m.unwrap_or(DEFAULT_EXTRUDE_HEIGHT_M)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(GeoPoint),
    Polygon(Polygon),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placemark {
    pub id: String,
    pub name: String,
    pub description: String,
    pub style_ref: Option<String>,
    pub geometry: Geometry,
    /// Every `<name>` text in document order under key `"name"`.
    pub attributes: Vec<(String, String)>,
}

impl Placemark {
    /// A placemark whose attribute list holds its single name, which is the
    /// shape [`parse_document`] produces for a one-`<name>` element.
    pub fn new(id: impl Into<String>, name: impl Into<String>, geometry: Geometry) -> Self {
        let name = name.into();
        let attributes = if name.is_empty() {
            Vec::new()
        } else {
            vec![("name".to_string(), name.clone())]
        };
        Placemark {
            id: id.into(),
            name,
            description: String::new(),
            style_ref: None,
            geometry,
            attributes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Style {
    pub id: String,
    pub icon_hint: String,
    /// `aabbggrr` hex, or empty.
    pub color_hint: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub placemarks: Vec<Placemark>,
    /// Keyed by style id (without the leading `#`).
    pub styles: BTreeMap<String, Style>,
    pub source_uri: String,
}

impl Document {
    pub fn placemark(&self, id: &str) -> Option<&Placemark> {
        self.placemarks.iter().find(|p| p.id == id)
    }
}

/// Info-window content for a placemark: its attributes with the display name
/// first, followed by the description when there is one.
pub fn get_attribute_text(doc: &Document, id: &str) -> Result<Vec<(String, String)>, KmlError> {
    let pm = doc
        .placemark(id)
        .ok_or_else(|| KmlError::NotFound(id.to_string()))?;
    let mut out = Vec::with_capacity(pm.attributes.len() + 2);
    let has_name = pm
        .attributes
        .iter()
        .any(|(k, v)| k == "name" && *v == pm.name);
    if !has_name && !pm.name.is_empty() {
        out.push(("name".to_string(), pm.name.clone()));
    }
    out.extend(pm.attributes.iter().cloned());
    if !pm.description.is_empty() {
        out.push(("description".to_string(), pm.description.clone()));
    }
    Ok(out)
}

/// Collapses whitespace runs to single spaces and trims the ends.
pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lng: f64) -> GeoPoint {
        GeoPoint::new(lat, lng).unwrap()
    }

    #[test]
    fn ring_requires_closure_and_three_distinct() {
        let open = vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(1.0, 1.0)];
        assert_eq!(LinearRing::new(open.clone()), Err(RingError::Unclosed));
        let ring = LinearRing::from_open(open).unwrap();
        assert_eq!(ring.vertices().len(), 4);
        assert_eq!(ring.distinct_vertices().len(), 3);

        let thin = vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(0.0, 1.0), pt(0.0, 0.0)];
        assert_eq!(LinearRing::new(thin), Err(RingError::Degenerate(2)));
        assert_eq!(LinearRing::new(vec![]), Err(RingError::Unclosed));
        assert_eq!(
            LinearRing::new(vec![pt(1.0, 1.0)]),
            Err(RingError::Degenerate(1))
        );
    }

    #[test]
    fn attribute_text_prepends_name_and_appends_description() {
        let mut doc = Document::default();
        let mut pm = Placemark::new("a", "Alpha", Geometry::Point(pt(1.0, 2.0)));
        pm.attributes.clear();
        pm.description = "first building".into();
        doc.placemarks.push(pm);
        doc.placemarks
            .push(Placemark::new("b", "Beta", Geometry::Point(pt(1.0, 2.0))));
        let mut blank = Placemark::new("c", "", Geometry::Point(pt(1.0, 2.0)));
        blank.description.clear();
        doc.placemarks.push(blank);

        assert_eq!(
            get_attribute_text(&doc, "a").unwrap(),
            vec![
                ("name".to_string(), "Alpha".to_string()),
                ("description".to_string(), "first building".to_string())
            ]
        );
        assert_eq!(
            get_attribute_text(&doc, "b").unwrap(),
            vec![("name".to_string(), "Beta".to_string())]
        );
        assert!(get_attribute_text(&doc, "c").unwrap().is_empty());
        assert_eq!(
            get_attribute_text(&doc, "xyz").unwrap_err().code(),
            "NOT_FOUND"
        );
    }

    #[test]
    fn issue_display_format() {
        let issue = ValidationIssue::new(
            Severity::Warning,
            IssueCode::MultipleNames,
            "second <name> kept as attribute",
        )
        .for_placemark("pm-1")
        .at_line(12);
        assert_eq!(
            issue.to_string(),
            "WARNING MULTIPLE_NAMES placemark=pm-1 line=12 second <name> kept as attribute"
        );
        let bare = ValidationIssue::new(Severity::Error, IssueCode::DuplicateId, "dup");
        assert_eq!(
            bare.to_string(),
            "ERROR DUPLICATE_ID placemark=- line=- dup"
        );
    }

    #[test]
    fn axis_order_parses() {
        assert_eq!("lat-lon".parse::<AxisOrder>().unwrap(), AxisOrder::LatLon);
        assert_eq!("lon-lat".parse::<AxisOrder>().unwrap(), AxisOrder::LonLat);
        assert!("xy".parse::<AxisOrder>().is_err());
    }
}
