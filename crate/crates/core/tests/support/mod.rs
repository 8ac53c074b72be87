//! Random generators and brute-force oracles shared by the integration tests
//! and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use geoatlas_core::fixtures::echo_of;
use geoatlas_core::geo::{haversine_distance_m, BBox, GeoPoint};
use geoatlas_core::index::SpatialIndex;
use geoatlas_core::kml::{Document, Geometry, LinearRing, Placemark, Polygon, Style};
use geoatlas_core::sync::{
    apply_event, EventKind, LookAt, MapView, Origin, PaneEvent, SyncCommand, SyncState, View,
    MAX_ZOOM,
};
use rand::seq::SliceRandom;
use rand::Rng;

const WORDS: &[&str] = &[
    "Ede", "Town", "Hall", "Mosque", "Palace", "Aafin", "market", "R&D", "<gate>", "\"old\"",
    "it's", "Oja", "Osun", "Timi", "square", "1914",
];

pub fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn phrase(rng: &mut impl Rng, min_words: usize) -> String {
    let n = rng.gen_range(min_words..=6);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn vertex(rng: &mut impl Rng, lat: f64, lng: f64, with_alt: bool) -> GeoPoint {
    let alt_m = with_alt.then(|| f64::from(rng.gen_range(0..100_000_u32)) / 1000.0);
    GeoPoint {
        lat_deg: round9(lat),
        lng_deg: round9(lng),
        alt_m,
    }
}

/// Closed ring of `n` vertices around a center, radius in degrees.
fn ring(rng: &mut impl Rng, lat: f64, lng: f64, radius: f64, n: usize) -> LinearRing {
    let with_alt = rng.gen_bool(0.2);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let vertices = (0..n)
        .map(|i| {
            let a = phase + std::f64::consts::TAU * i as f64 / n as f64;
            vertex(
                rng,
                lat + radius * a.sin(),
                lng + radius * a.cos(),
                with_alt,
            )
        })
        .collect();
    LinearRing::from_open(vertices).expect("ring has distinct vertices")
}

/// A document that survives serialize/parse unchanged: single collapsed
/// names, nine-decimal coordinates, unique ids and resolved styles.
pub fn random_document(rng: &mut impl Rng) -> Document {
    let mut styles = BTreeMap::new();
    for s in 0..rng.gen_range(0..3) {
        let id = format!("style-{s}");
        styles.insert(
            id.clone(),
            Style {
                id,
                icon_hint: if rng.gen_bool(0.5) {
                    "http://maps.example.org/pushpin.png?a=1&b=2".into()
                } else {
                    String::new()
                },
                color_hint: if rng.gen_bool(0.5) {
                    "ff00ffff".into()
                } else {
                    String::new()
                },
            },
        );
    }
    let style_ids: Vec<String> = styles.keys().cloned().collect();
    let placemarks = (0..rng.gen_range(0..8))
        .map(|i| {
            let lat = rng.gen_range(-80.0..80.0);
            let lng = rng.gen_range(-170.0..170.0);
            let geometry = if rng.gen_bool(0.5) {
                let with_alt = rng.gen_bool(0.3);
                Geometry::Point(vertex(rng, lat, lng, with_alt))
            } else {
                let radius = rng.gen_range(1e-3..1.0);
                let n = rng.gen_range(3..9);
                let mut poly = Polygon::new(ring(rng, lat, lng, radius, n));
                if rng.gen_bool(0.3) {
                    let n = rng.gen_range(3..6);
                    poly.inners.push(ring(rng, lat, lng, radius / 3.0, n));
                }
                poly.tessellate = rng.gen_bool(0.5);
                poly.extrude_height_m = rng
                    .gen_bool(0.5)
                    .then(|| f64::from(rng.gen_range(1..400_u32)) / 4.0);
                Geometry::Polygon(poly)
            };
            let mut pm = Placemark::new(
                format!("pm-{i}-{}", rng.gen_range(0..1000)),
                phrase(rng, 1),
                geometry,
            );
            if rng.gen_bool(0.5) {
                pm.description = phrase(rng, 1);
            }
            if !style_ids.is_empty() && rng.gen_bool(0.5) {
                pm.style_ref = Some(format!("#{}", style_ids.choose(rng).unwrap()));
            }
            pm
        })
        .collect();
    Document {
        placemarks,
        styles,
        source_uri: String::new(),
    }
}

pub fn random_index_points(rng: &mut impl Rng, n: usize) -> Vec<(String, GeoPoint)> {
    (0..n)
        .map(|i| {
            let p = GeoPoint {
                lat_deg: rng.gen_range(7.70..7.78),
                lng_deg: rng.gen_range(4.40..4.48),
                alt_m: None,
            };
            (format!("p{i:03}"), p)
        })
        .collect()
}

pub fn point_document(points: &[(String, GeoPoint)]) -> Document {
    Document {
        placemarks: points
            .iter()
            .map(|(id, p)| Placemark::new(id.clone(), id.clone(), Geometry::Point(*p)))
            .collect(),
        ..Document::default()
    }
}

pub fn random_bbox(rng: &mut impl Rng) -> BBox {
    let (a, b): (f64, f64) = (rng.gen_range(7.69..7.79), rng.gen_range(7.69..7.79));
    let (c, d): (f64, f64) = (rng.gen_range(4.39..4.49), rng.gen_range(4.39..4.49));
    BBox::from_edges(c.min(d), a.min(b), c.max(d), a.max(b)).unwrap()
}

/// Brute-force box filter, document order.
pub fn bbox_oracle<'a>(points: &'a [(String, GeoPoint)], bbox: &BBox) -> Vec<&'a str> {
    points
        .iter()
        .filter(|(_, p)| {
            p.lat_deg >= bbox.min.lat_deg
                && p.lat_deg <= bbox.max.lat_deg
                && p.lng_deg >= bbox.min.lng_deg
                && p.lng_deg <= bbox.max.lng_deg
        })
        .map(|(id, _)| id.as_str())
        .collect()
}

/// Full sort by (distance, id), truncated to `k`.
pub fn nearest_oracle(points: &[(String, GeoPoint)], q: &GeoPoint, k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = points
        .iter()
        .map(|(id, p)| (id.clone(), haversine_distance_m(q, p)))
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Convex polygon (counter-clockwise in lng/lat) around a center.
pub fn random_convex_polygon(rng: &mut impl Rng) -> Polygon {
    let lat = rng.gen_range(-60.0..60.0);
    let lng = rng.gen_range(-170.0..170.0);
    let radius = rng.gen_range(0.01..2.0);
    let n = rng.gen_range(3..12);
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    let vertices = angles
        .iter()
        .map(|a| GeoPoint {
            lat_deg: lat + radius * a.sin(),
            lng_deg: lng + radius * a.cos(),
            alt_m: None,
        })
        .collect();
    Polygon::new(LinearRing::from_open(vertices).expect("distinct angles"))
}

/// Winding number of `p` around a closed ring in the lng/lat plane.
pub fn winding_number(p: &GeoPoint, ring: &LinearRing) -> i32 {
    let is_left = |a: &GeoPoint, b: &GeoPoint| {
        (b.lng_deg - a.lng_deg) * (p.lat_deg - a.lat_deg)
            - (p.lng_deg - a.lng_deg) * (b.lat_deg - a.lat_deg)
    };
    let mut wn = 0;
    for edge in ring.vertices().windows(2) {
        let (a, b) = (&edge[0], &edge[1]);
        if a.lat_deg <= p.lat_deg {
            if b.lat_deg > p.lat_deg && is_left(a, b) > 0.0 {
                wn += 1;
            }
        } else if b.lat_deg <= p.lat_deg && is_left(a, b) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

pub fn pip_oracle(p: &GeoPoint, poly: &Polygon) -> bool {
    winding_number(p, &poly.outer) != 0 && poly.inners.iter().all(|r| winding_number(p, r) == 0)
}

pub fn sample_near(rng: &mut impl Rng, poly: &Polygon) -> GeoPoint {
    let vs = poly.outer.vertices();
    let (mut lo_lat, mut hi_lat, mut lo_lng, mut hi_lng) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for v in vs {
        lo_lat = lo_lat.min(v.lat_deg);
        hi_lat = hi_lat.max(v.lat_deg);
        lo_lng = lo_lng.min(v.lng_deg);
        hi_lng = hi_lng.max(v.lng_deg);
    }
    let pad_lat = (hi_lat - lo_lat) * 0.1;
    let pad_lng = (hi_lng - lo_lng) * 0.1;
    GeoPoint {
        lat_deg: rng.gen_range(lo_lat - pad_lat..hi_lat + pad_lat),
        lng_deg: rng.gen_range(lo_lng - pad_lng..hi_lng + pad_lng),
        alt_m: None,
    }
}

fn random_user_event(rng: &mut impl Rng, state: &SyncState, ids: &[String]) -> PaneEvent {
    let point = GeoPoint {
        lat_deg: rng.gen_range(-85.0..85.0),
        lng_deg: rng.gen_range(-180.0..180.0),
        alt_m: None,
    };
    let origin = if rng.gen_bool(0.5) {
        Origin::TwoD
    } else {
        Origin::ThreeD
    };
    match rng.gen_range(0..3) {
        0 => PaneEvent {
            kind: EventKind::Click { point },
            origin,
            epoch: state.epoch,
        },
        1 => PaneEvent {
            kind: EventKind::Select {
                placemark_id: ids.choose(rng).unwrap().clone(),
            },
            origin: Origin::Dropdown,
            epoch: state.epoch,
        },
        _ => {
            let view = match origin {
                Origin::TwoD => {
                    View::MapView(MapView::new(point, rng.gen_range(0..=MAX_ZOOM)).unwrap())
                }
                _ => View::LookAt(LookAt {
                    heading_deg: rng.gen_range(0.0..360.0),
                    tilt_deg: rng.gen_range(0.0..=90.0),
                    range_m: 10f64.powf(rng.gen_range(0.0..10.0)),
                    ..LookAt::new(point)
                }),
            };
            PaneEvent {
                kind: EventKind::CameraChanged { view },
                origin,
                epoch: state.epoch + rng.gen_range(1..=4),
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct TraceOutcome {
    pub user_events: usize,
    pub echoes: usize,
    pub commands: usize,
    /// Sum of the per-event command bounds (2 for click/select, 1 for a user
    /// camera move, 0 for an echo).
    pub command_bound: usize,
    pub final_state: Option<SyncState>,
    pub failures: Vec<String>,
}

/// Runs `user_events` random user events; every emitted command is echoed
/// back at a random later point, interleaved with further user events.
pub fn run_sync_trace(rng: &mut impl Rng, user_events: usize) -> TraceOutcome {
    let locator: HashMap<String, GeoPoint> = random_index_points(rng, 5).into_iter().collect();
    let ids: Vec<String> = {
        let mut ids: Vec<String> = locator.keys().cloned().collect();
        ids.sort();
        ids
    };
    let mut state = SyncState::initial();
    let mut pending: Vec<SyncCommand> = Vec::new();
    let mut out = TraceOutcome::default();
    let mut last_user_epoch = 0;

    while out.user_events < user_events || !pending.is_empty() {
        let deliver_echo =
            !pending.is_empty() && (out.user_events == user_events || rng.gen_bool(0.6));
        let event = if deliver_echo {
            out.echoes += 1;
            let i = rng.gen_range(0..pending.len());
            echo_of(&pending.swap_remove(i))
        } else {
            out.user_events += 1;
            random_user_event(rng, &state, &ids)
        };
        let bound = match (&event.kind, deliver_echo) {
            (_, true) => 0,
            (EventKind::CameraChanged { .. }, false) => 1,
            _ => 2,
        };
        out.command_bound += bound;
        let (next, commands) = match apply_event(&state, &event, &locator) {
            Ok(r) => r,
            Err(e) => {
                out.failures
                    .push(format!("apply_event rejected {event:?}: {e}"));
                return out;
            }
        };
        if commands.len() != bound {
            out.failures.push(format!(
                "{} commands for {event:?}, expected {bound}",
                commands.len()
            ));
        }
        if !deliver_echo {
            if next.epoch <= last_user_epoch {
                out.failures.push(format!(
                    "epoch did not increase: {} -> {}",
                    last_user_epoch, next.epoch
                ));
            }
            last_user_epoch = next.epoch;
        }
        if commands.iter().any(|c| c.epoch != next.epoch) {
            out.failures
                .push("command epoch differs from state epoch".into());
        }
        out.commands += commands.len();
        pending.extend(commands);
        state = next;
    }

    // Fixpoint: re-reporting the settled views changes nothing.
    for event in settled_echoes(&state) {
        match apply_event(&state, &event, &locator) {
            Ok((next, cmds)) if cmds.is_empty() && next == state => {}
            other => out.failures.push(format!("not a fixpoint: {other:?}")),
        }
    }
    out.final_state = Some(state);
    out
}

fn settled_echoes(state: &SyncState) -> [PaneEvent; 2] {
    [
        PaneEvent {
            kind: EventKind::CameraChanged {
                view: View::MapView(state.view_2d),
            },
            origin: Origin::TwoD,
            epoch: state.pane_epoch_2d,
        },
        PaneEvent {
            kind: EventKind::CameraChanged {
                view: View::LookAt(state.view_3d),
            },
            origin: Origin::ThreeD,
            epoch: state.pane_epoch_3d,
        },
    ]
}

pub fn index_ids(index: &SpatialIndex) -> Vec<&str> {
    index.entries().iter().map(|e| e.id.as_str()).collect()
}
