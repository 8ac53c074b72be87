//! Query structure over a loaded [`Document`].
//!
//! Every placemark is represented by one point: a Point geometry stands for
//! itself, a Polygon for the arithmetic mean of its distinct outer-ring
//! vertices. Box queries use a latitude-sorted permutation; nearest and pick
//! queries scan all entries (datasets are city-sized).

use std::cmp::Ordering;
use std::num::NonZeroUsize;

use serde::Serialize;
use thiserror::Error;

use crate::geo::{haversine_distance_m, BBox, GeoPoint};
use crate::kml::{Document, Geometry, LinearRing, Polygon};

/// Default click tolerance for [`SpatialIndex::pick_at`], in degrees (~110 m).
pub const DEFAULT_PICK_TOLERANCE_DEG: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("pick tolerance must be a positive number of degrees, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub id: String,
    pub point: GeoPoint,
    pub polygon: Option<Polygon>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitKind {
    Marker,
    PolygonInterior,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PickResult {
    pub placemark_id: String,
    pub distance_m: f64,
    pub hit_kind: HitKind,
}

#[derive(Debug, Clone, Default)]
pub struct SpatialIndex {
    /// Document order.
    entries: Vec<IndexEntry>,
    /// Entry positions sorted by latitude, then document order.
    by_lat: Vec<usize>,
}

/// Mean of the distinct outer-ring vertices, altitude dropped.
pub fn centroid(ring: &LinearRing) -> GeoPoint {
    let vertices = ring.distinct_vertices();
    let n = vertices.len() as f64;
    let (lat, lng) = vertices.iter().fold((0.0, 0.0), |(lat, lng), v| {
        (lat + v.lat_deg, lng + v.lng_deg)
    });
    GeoPoint {
        lat_deg: lat / n,
        lng_deg: lng / n,
        alt_m: None,
    }
}

pub fn representative_point(geometry: &Geometry) -> GeoPoint {
    match geometry {
        Geometry::Point(p) => p.flattened(),
        Geometry::Polygon(poly) => centroid(&poly.outer),
    }
}

pub fn build_index(doc: &Document) -> SpatialIndex {
    let entries: Vec<IndexEntry> = doc
        .placemarks
        .iter()
        .map(|pm| IndexEntry {
            id: pm.id.clone(),
            point: representative_point(&pm.geometry),
            polygon: match &pm.geometry {
                Geometry::Polygon(p) => Some(p.clone()),
                Geometry::Point(_) => None,
            },
        })
        .collect();
    let mut by_lat: Vec<usize> = (0..entries.len()).collect();
    by_lat.sort_by(|&a, &b| {
        entries[a]
            .point
            .lat_deg
            .total_cmp(&entries[b].point.lat_deg)
            .then(a.cmp(&b))
    });
    SpatialIndex { entries, by_lat }
}

impl SpatialIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Ids whose representative point lies in `bbox` (edges inclusive), in
    /// document order.
    pub fn query_bbox(&self, bbox: &BBox) -> Vec<&str> {
        let lat_of = |i: usize| self.entries[i].point.lat_deg;
        let start = self
            .by_lat
            .partition_point(|&i| lat_of(i) < bbox.min.lat_deg);
        let mut hits: Vec<usize> = self.by_lat[start..]
            .iter()
            .copied()
            .take_while(|&i| lat_of(i) <= bbox.max.lat_deg)
            .filter(|&i| bbox.contains(&self.entries[i].point))
            .collect();
        hits.sort_unstable();
        hits.into_iter()
            .map(|i| self.entries[i].id.as_str())
            .collect()
    }

    /// The `k` closest placemarks by great-circle distance, ascending, ties
    /// broken by id.
    pub fn query_nearest(&self, p: &GeoPoint, k: NonZeroUsize) -> Vec<(String, f64)> {
        let mut scored: Vec<(f64, &str)> = self
            .entries
            .iter()
            .map(|e| (haversine_distance_m(p, &e.point), e.id.as_str()))
            .collect();
        let by_distance =
            |a: &(f64, &str), b: &(f64, &str)| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1));
        let k = k.get().min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k, by_distance);
            scored.truncate(k);
        }
        scored.sort_by(by_distance);
        scored
            .into_iter()
            .map(|(d, id)| (id.to_string(), d))
            .collect()
    }

    /// Resolves a click. Polygon interiors win over markers; otherwise the
    /// closest representative point within `tol_deg` (planar lat/lng
    /// distance) wins. Ties go to the smaller id.
    pub fn pick_at(&self, p: &GeoPoint, tol_deg: f64) -> Result<Option<PickResult>, IndexError> {
        if !(tol_deg > 0.0 && tol_deg.is_finite()) {
            return Err(IndexError::InvalidTolerance(tol_deg));
        }
        let polygon_hit = self
            .entries
            .iter()
            .filter(|e| {
                e.polygon
                    .as_ref()
                    .is_some_and(|poly| point_in_polygon(p, poly))
            })
            .min_by(|a, b| a.id.cmp(&b.id));
        if let Some(e) = polygon_hit {
            return Ok(Some(PickResult {
                placemark_id: e.id.clone(),
                distance_m: 0.0,
                hit_kind: HitKind::PolygonInterior,
            }));
        }
        let marker_hit = self
            .entries
            .iter()
            .map(|e| (planar_distance_deg(p, &e.point), e))
            .filter(|(d, _)| *d <= tol_deg)
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
        Ok(marker_hit.map(|(_, e)| PickResult {
            placemark_id: e.id.clone(),
            distance_m: haversine_distance_m(p, &e.point),
            hit_kind: HitKind::Marker,
        }))
    }
}

fn planar_distance_deg(a: &GeoPoint, b: &GeoPoint) -> f64 {
    (a.lat_deg - b.lat_deg).hypot(a.lng_deg - b.lng_deg)
}

/// Even-odd containment in the lat/lng plane. Points on any ring edge or
/// vertex are inside; inner rings subtract.
pub fn point_in_polygon(p: &GeoPoint, poly: &Polygon) -> bool {
    let rings = std::iter::once(&poly.outer).chain(poly.inners.iter());
    let mut inside = false;
    for ring in rings {
        for edge in ring.vertices().windows(2) {
            let (a, b) = (&edge[0], &edge[1]);
            if on_segment(p, a, b) {
                return true;
            }
            if (a.lat_deg > p.lat_deg) != (b.lat_deg > p.lat_deg) {
                let t = (p.lat_deg - a.lat_deg) / (b.lat_deg - a.lat_deg);
                let x = a.lng_deg + t * (b.lng_deg - a.lng_deg);
                if p.lng_deg < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn on_segment(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> bool {
    let cross = (b.lng_deg - a.lng_deg) * (p.lat_deg - a.lat_deg)
        - (b.lat_deg - a.lat_deg) * (p.lng_deg - a.lng_deg);
    if cross != 0.0 {
        return false;
    }
    let within = |v: f64, lo: f64, hi: f64| match lo.partial_cmp(&hi) {
        Some(Ordering::Greater) => v >= hi && v <= lo,
        _ => v >= lo && v <= hi,
    };
    within(p.lng_deg, a.lng_deg, b.lng_deg) && within(p.lat_deg, a.lat_deg, b.lat_deg)
}
