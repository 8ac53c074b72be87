//! Reference vectors for client-side implementations of the view synchronizer.
//!
//! The document is fully determined by [`FIXTURE_SEED`] and the bundled Ede
//! dataset, so every build emits the same bytes.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;
use crate::index::build_index;
use crate::kml::{parse_document, AxisOrder, Document, ParseMode, ParseOptions};
use crate::sync::{
    apply_event, lookat_to_mapview, mapview_to_lookat, range_from_zoom, EventKind, LookAt, MapView,
    Origin, Pane, PaneEvent, SyncCommand, SyncState, View, EDE_CENTER, MAX_ZOOM, MIN_ZOOM,
    ZOOM_RANGE_K_M,
};

/// ChaCha8 seed for the event traces: the ASCII bytes of "geoatlas".
pub const FIXTURE_SEED: u64 = 0x6765_6f61_746c_6173;
pub const TRACE_COUNT: usize = 8;
/// User events per trace; echoes are interleaved on top of these.
pub const TRACE_USER_EVENTS: usize = 12;
const RANDOM_CONVERSIONS: usize = 16;

/// Bundled sample of Ede landmarks, coordinates in `lat,lng` order.
pub const EDE_SAMPLE_KML: &str = include_str!("../data/ede_sample.kml");

pub fn ede_sample_document() -> Document {
    let opts = ParseOptions::new(AxisOrder::LatLon, ParseMode::Strict);
    let (doc, _) = parse_document(EDE_SAMPLE_KML.as_bytes(), &opts).expect("bundled sample parses");
    doc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomRangePair {
    pub zoom: u8,
    pub range_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConversionDirection {
    LookatToMapview,
    MapviewToLookat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub direction: ConversionDirection,
    pub lookat: LookAt,
    pub mapview: MapView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePlacemark {
    pub id: String,
    pub point: GeoPoint,
}

/// `expected_commands[i]` is the output of applying `events[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub name: String,
    pub placemarks: Vec<TracePlacemark>,
    pub initial_state: SyncState,
    pub events: Vec<PaneEvent>,
    pub expected_commands: Vec<Vec<SyncCommand>>,
    pub final_state: SyncState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureDocument {
    pub seed: u64,
    pub zoom_range_constant_m: f64,
    pub zoom_range_pairs: Vec<ZoomRangePair>,
    pub conversions: Vec<Conversion>,
    pub event_traces: Vec<EventTrace>,
}

fn random_point(rng: &mut ChaCha8Rng) -> GeoPoint {
    GeoPoint {
        lat_deg: rng.gen_range(7.70..7.78),
        lng_deg: rng.gen_range(4.40..4.48),
        alt_m: None,
    }
}

fn random_lookat(rng: &mut ChaCha8Rng) -> LookAt {
    LookAt {
        heading_deg: rng.gen_range(0.0..360.0),
        tilt_deg: rng.gen_range(0.0..=90.0),
        range_m: 10f64.powf(rng.gen_range(1.0..9.0)),
        ..LookAt::new(random_point(rng))
    }
}

fn random_mapview(rng: &mut ChaCha8Rng) -> MapView {
    MapView {
        center: random_point(rng),
        zoom: rng.gen_range(MIN_ZOOM..=MAX_ZOOM),
    }
}

fn conversions(rng: &mut ChaCha8Rng) -> Vec<Conversion> {
    let forward = |la: LookAt| Conversion {
        direction: ConversionDirection::LookatToMapview,
        lookat: la,
        mapview: lookat_to_mapview(&la).expect("valid camera"),
    };
    let backward = |mv: MapView| Conversion {
        direction: ConversionDirection::MapviewToLookat,
        lookat: mapview_to_lookat(&mv).expect("valid map view"),
        mapview: mv,
    };
    let mut out = vec![
        forward(LookAt::new(EDE_CENTER)),
        forward(LookAt {
            range_m: ZOOM_RANGE_K_M,
            ..LookAt::new(EDE_CENTER)
        }),
        backward(MapView {
            center: EDE_CENTER,
            zoom: 2,
        }),
    ];
    for _ in 0..RANDOM_CONVERSIONS / 2 {
        out.push(forward(random_lookat(rng)));
        out.push(backward(random_mapview(rng)));
    }
    out
}

fn random_user_event(rng: &mut ChaCha8Rng, state: &SyncState, ids: &[String]) -> PaneEvent {
    let pane_origin = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            Origin::TwoD
        } else {
            Origin::ThreeD
        }
    };
    let roll: f64 = rng.gen();
    if roll < 0.4 {
        PaneEvent {
            kind: EventKind::Click {
                point: random_point(rng),
            },
            origin: pane_origin(rng),
            epoch: state.epoch,
        }
    } else if roll < 0.6 && !ids.is_empty() {
        PaneEvent {
            kind: EventKind::Select {
                placemark_id: ids.choose(rng).expect("non-empty").clone(),
            },
            origin: Origin::Dropdown,
            epoch: state.epoch,
        }
    } else {
        let origin = pane_origin(rng);
        let view = match origin {
            Origin::TwoD => View::MapView(random_mapview(rng)),
            _ => View::LookAt(random_lookat(rng)),
        };
        PaneEvent {
            kind: EventKind::CameraChanged { view },
            origin,
            epoch: state.epoch + rng.gen_range(1..=3),
        }
    }
}

/// The echo a pane reports after applying `cmd`.
pub fn echo_of(cmd: &SyncCommand) -> PaneEvent {
    PaneEvent {
        kind: EventKind::CameraChanged { view: cmd.view },
        origin: match cmd.target_pane {
            Pane::TwoD => Origin::TwoD,
            Pane::ThreeD => Origin::ThreeD,
        },
        epoch: cmd.epoch,
    }
}

fn event_trace(rng: &mut ChaCha8Rng, n: usize, placemarks: &[TracePlacemark]) -> EventTrace {
    let locator: HashMap<String, GeoPoint> =
        placemarks.iter().map(|p| (p.id.clone(), p.point)).collect();
    let ids: Vec<String> = placemarks.iter().map(|p| p.id.clone()).collect();
    let initial_state = SyncState::initial();
    let mut state = initial_state.clone();
    let mut pending: Vec<SyncCommand> = Vec::new();
    let mut events = Vec::new();
    let mut expected_commands = Vec::new();
    let mut user_left = TRACE_USER_EVENTS;

    while user_left > 0 || !pending.is_empty() {
        let event = if !pending.is_empty() && (user_left == 0 || rng.gen_bool(0.5)) {
            let i = rng.gen_range(0..pending.len());
            echo_of(&pending.swap_remove(i))
        } else {
            user_left -= 1;
            random_user_event(rng, &state, &ids)
        };
        let (next, commands) =
            apply_event(&state, &event, &locator).expect("generated events are valid");
        pending.extend(commands.iter().cloned());
        state = next;
        events.push(event);
        expected_commands.push(commands);
    }

    EventTrace {
        name: format!("trace-{n:02}"),
        placemarks: placemarks.to_vec(),
        initial_state,
        events,
        expected_commands,
        final_state: state,
    }
}

pub fn generate_fixtures() -> FixtureDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let index = build_index(&ede_sample_document());
    let placemarks: Vec<TracePlacemark> = index
        .entries()
        .iter()
        .map(|e| TracePlacemark {
            id: e.id.clone(),
            point: e.point,
        })
        .collect();

    let zoom_range_pairs = (MIN_ZOOM..=MAX_ZOOM)
        .map(|zoom| ZoomRangePair {
            zoom,
            range_m: range_from_zoom(zoom).expect("zoom in range"),
        })
        .collect();
    let conversions = conversions(&mut rng);
    let event_traces = (0..TRACE_COUNT)
        .map(|n| event_trace(&mut rng, n, &placemarks))
        .collect();

    FixtureDocument {
        seed: FIXTURE_SEED,
        zoom_range_constant_m: ZOOM_RANGE_K_M,
        zoom_range_pairs,
        conversions,
        event_traces,
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn fixtures_json(doc: &FixtureDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("fixtures serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sample_has_five_placemarks() {
        let doc = ede_sample_document();
        let ids: Vec<_> = doc.placemarks.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "town-hall",
                "old-palace",
                "mosque",
                "mogaji-house",
                "church"
            ]
        );
    }

    #[test]
    fn output_is_deterministic() {
        assert_eq!(
            fixtures_json(&generate_fixtures()),
            fixtures_json(&generate_fixtures())
        );
    }

    #[test]
    fn json_round_trips() {
        let doc = generate_fixtures();
        let back: FixtureDocument = serde_json::from_str(&fixtures_json(&doc)).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn traces_replay_and_settle() {
        let doc = generate_fixtures();
        assert_eq!(doc.zoom_range_pairs.len(), 22);
        assert_eq!(doc.event_traces.len(), TRACE_COUNT);
        for trace in &doc.event_traces {
            assert_eq!(trace.events.len(), trace.expected_commands.len());
            let locator: HashMap<String, GeoPoint> = trace
                .placemarks
                .iter()
                .map(|p| (p.id.clone(), p.point))
                .collect();
            let mut state = trace.initial_state.clone();
            for (event, expected) in trace.events.iter().zip(&trace.expected_commands) {
                let (next, cmds) = apply_event(&state, event, &locator).unwrap();
                assert_eq!(&cmds, expected);
                state = next;
            }
            assert_eq!(state, trace.final_state);
            let c2 = state.view_2d.center;
            let c3 = state.view_3d.target;
            assert_eq!((c2.lat_deg, c2.lng_deg), (c3.lat_deg, c3.lng_deg));
        }
    }
}
