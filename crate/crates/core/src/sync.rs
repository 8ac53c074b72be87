//! Dual-pane view synchronization.
//!
//! The 2D pane is described by a [`MapView`] (center + integer zoom), the 3D
//! pane by a [`LookAt`] camera. Zoom and camera range are tied by a
//! power-of-two ladder anchored at `range(1) = K`:
//!
//! ```text
//! range(z) = K / 2^(z - 1)        zoom(r) = clamp(round(1 + log2(K / r)), 0, 21)
//! ```
//!
//! [`apply_event`] is the state machine. Every user event bumps the epoch and
//! emits [`SyncCommand`]s stamped with it; a pane that applies a command
//! reports back a `camera-changed` event carrying the same epoch, which is
//! recognised as an echo and never produces further commands.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;
use crate::index::SpatialIndex;

/// Camera range at zoom 1, in meters.
pub const ZOOM_RANGE_K_M: f64 = 591_657_550.5;
pub const MIN_ZOOM: u8 = 0;
pub const MAX_ZOOM: u8 = 21;
/// Zoom applied when a placemark is chosen from the dropdown.
pub const SELECT_ZOOM: u8 = 18;

/// Initial view center of both panes (Ede city center).
pub const EDE_CENTER: GeoPoint = GeoPoint {
    lat_deg: 7.73687489,
    lng_deg: 4.43611944,
    alt_m: None,
};
pub const INITIAL_2D_ZOOM: u8 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("NONPOSITIVE_RANGE: camera range must be > 0 m, got {0}")]
    NonPositiveRange(f64),
    #[error("ZOOM_OUT_OF_RANGE: zoom {0} outside [0, 21]")]
    ZoomOutOfRange(i64),
    #[error("UNKNOWN_PLACEMARK: {0:?}")]
    UnknownPlacemark(String),
    #[error("INVALID_VIEW: {0}")]
    InvalidView(String),
    #[error("INVALID_EVENT: {0}")]
    InvalidEvent(String),
}

impl SyncError {
    pub fn code(&self) -> &'static str {
        match self {
            SyncError::NonPositiveRange(_) => "NONPOSITIVE_RANGE",
            SyncError::ZoomOutOfRange(_) => "ZOOM_OUT_OF_RANGE",
            SyncError::UnknownPlacemark(_) => "UNKNOWN_PLACEMARK",
            SyncError::InvalidView(_) => "INVALID_VIEW",
            SyncError::InvalidEvent(_) => "INVALID_EVENT",
        }
    }
}

pub fn zoom_from_range(range_m: f64) -> Result<u8, SyncError> {
    if !(range_m.is_finite() && range_m > 0.0) {
        return Err(SyncError::NonPositiveRange(range_m));
    }
    let zoom = (1.0 + (ZOOM_RANGE_K_M / range_m).log2()).round();
    Ok(zoom.clamp(f64::from(MIN_ZOOM), f64::from(MAX_ZOOM)) as u8)
}

pub fn range_from_zoom(zoom: u8) -> Result<f64, SyncError> {
    if zoom > MAX_ZOOM {
        return Err(SyncError::ZoomOutOfRange(i64::from(zoom)));
    }
    // Scaling by an exact power of two keeps the round trip exact.
    Ok(ZOOM_RANGE_K_M * 2f64.powi(1 - i32::from(zoom)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AltitudeMode {
    #[default]
    RelativeToGround,
    Absolute,
}

fn default_altitude() -> f64 {
    LookAt::DEFAULT_ALTITUDE_M
}
fn default_heading() -> f64 {
    LookAt::DEFAULT_HEADING_DEG
}
fn default_tilt() -> f64 {
    LookAt::DEFAULT_TILT_DEG
}
fn default_range() -> f64 {
    LookAt::DEFAULT_RANGE_M
}

/// 3D camera looking at `target` from `range_m` meters away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookAt {
    pub target: GeoPoint,
    #[serde(default = "default_altitude")]
    pub altitude_m: f64,
    #[serde(default)]
    pub altitude_mode: AltitudeMode,
    #[serde(default = "default_heading")]
    pub heading_deg: f64,
    #[serde(default = "default_tilt")]
    pub tilt_deg: f64,
    #[serde(default = "default_range")]
    pub range_m: f64,
}

impl LookAt {
    pub const DEFAULT_ALTITUDE_M: f64 = 10.0;
    pub const DEFAULT_HEADING_DEG: f64 = 5.0;
    pub const DEFAULT_TILT_DEG: f64 = 70.0;
    pub const DEFAULT_RANGE_M: f64 = 300.0;

    /// Camera over `target` with the default orientation
    /// (altitude 10 m relative to ground, heading 5°, tilt 70°, range 300 m).
    pub fn new(target: GeoPoint) -> Self {
        LookAt {
            target: target.flattened(),
            altitude_m: Self::DEFAULT_ALTITUDE_M,
            altitude_mode: AltitudeMode::RelativeToGround,
            heading_deg: Self::DEFAULT_HEADING_DEG,
            tilt_deg: Self::DEFAULT_TILT_DEG,
            range_m: Self::DEFAULT_RANGE_M,
        }
    }

    pub fn validate(&self) -> Result<(), SyncError> {
        self.target
            .validate()
            .map_err(|e| SyncError::InvalidView(e.to_string()))?;
        if !(self.range_m.is_finite() && self.range_m > 0.0) {
            return Err(SyncError::NonPositiveRange(self.range_m));
        }
        if !(0.0..=90.0).contains(&self.tilt_deg) {
            return Err(SyncError::InvalidView(format!(
                "tilt {} outside [0, 90]",
                self.tilt_deg
            )));
        }
        if !(0.0..360.0).contains(&self.heading_deg) {
            return Err(SyncError::InvalidView(format!(
                "heading {} outside [0, 360)",
                self.heading_deg
            )));
        }
        if !self.altitude_m.is_finite() {
            return Err(SyncError::InvalidView(format!(
                "altitude {}",
                self.altitude_m
            )));
        }
        Ok(())
    }

    /// Brings heading into `[0, 360)`.
    pub fn normalized(mut self) -> Self {
        if self.heading_deg.is_finite() {
            self.heading_deg = self.heading_deg.rem_euclid(360.0);
            if self.heading_deg >= 360.0 {
                self.heading_deg = 0.0;
            }
        }
        self
    }
}

/// 2D map view. Always north-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapView {
    pub center: GeoPoint,
    pub zoom: u8,
}

impl MapView {
    pub fn new(center: GeoPoint, zoom: u8) -> Result<Self, SyncError> {
        let view = MapView {
            center: center.flattened(),
            zoom,
        };
        view.validate()?;
        Ok(view)
    }

    pub fn validate(&self) -> Result<(), SyncError> {
        self.center
            .validate()
            .map_err(|e| SyncError::InvalidView(e.to_string()))?;
        if self.zoom > MAX_ZOOM {
            return Err(SyncError::ZoomOutOfRange(i64::from(self.zoom)));
        }
        Ok(())
    }
}

/// Center copied bit-for-bit, altitude dropped.
pub fn lookat_to_mapview(la: &LookAt) -> Result<MapView, SyncError> {
    Ok(MapView {
        center: la.target.flattened(),
        zoom: zoom_from_range(la.range_m)?,
    })
}

/// Center copied bit-for-bit, default orientation.
pub fn mapview_to_lookat(mv: &MapView) -> Result<LookAt, SyncError> {
    Ok(LookAt {
        range_m: range_from_zoom(mv.zoom)?,
        ..LookAt::new(mv.center)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pane {
    #[serde(rename = "pane-2d")]
    TwoD,
    #[serde(rename = "pane-3d")]
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "pane-2d")]
    TwoD,
    #[serde(rename = "pane-3d")]
    ThreeD,
    #[serde(rename = "dropdown")]
    Dropdown,
}

impl Origin {
    fn pane(self) -> Option<Pane> {
        match self {
            Origin::TwoD => Some(Pane::TwoD),
            Origin::ThreeD => Some(Pane::ThreeD),
            Origin::Dropdown => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    MapView(MapView),
    LookAt(LookAt),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventKind {
    Click { point: GeoPoint },
    Select { placemark_id: String },
    CameraChanged { view: View },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaneEvent {
    pub kind: EventKind,
    pub origin: Origin,
    pub epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncCommand {
    pub target_pane: Pane,
    pub view: View,
    pub epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncState {
    /// Last epoch issued.
    pub epoch: u64,
    pub view_2d: MapView,
    pub view_3d: LookAt,
    /// Epoch of the newest view each pane was told to show (or reported as a
    /// user change). Echoes older than this are stale and ignored.
    pub pane_epoch_2d: u64,
    pub pane_epoch_3d: u64,
}

impl SyncState {
    pub fn new(view_2d: MapView, view_3d: LookAt) -> Self {
        SyncState {
            epoch: 0,
            view_2d,
            view_3d,
            pane_epoch_2d: 0,
            pane_epoch_3d: 0,
        }
    }

    /// 2D zoom 2 and the default camera, both over Ede. The two scales are
    /// not consistent with each other; the first user event aligns them.
    pub fn initial() -> Self {
        SyncState::new(
            MapView {
                center: EDE_CENTER,
                zoom: INITIAL_2D_ZOOM,
            },
            LookAt::new(EDE_CENTER),
        )
    }

    /// Centers agree within `tol_deg` and the zoom implied by the camera
    /// range equals the 2D zoom.
    pub fn is_consistent(&self, tol_deg: f64) -> bool {
        let Ok(mv) = lookat_to_mapview(&self.view_3d) else {
            return false;
        };
        (mv.center.lat_deg - self.view_2d.center.lat_deg).abs() <= tol_deg
            && (mv.center.lng_deg - self.view_2d.center.lng_deg).abs() <= tol_deg
            && mv.zoom == self.view_2d.zoom
    }

    fn commands_for_both(&self) -> Vec<SyncCommand> {
        vec![
            SyncCommand {
                target_pane: Pane::TwoD,
                view: View::MapView(self.view_2d),
                epoch: self.epoch,
            },
            SyncCommand {
                target_pane: Pane::ThreeD,
                view: View::LookAt(self.view_3d),
                epoch: self.epoch,
            },
        ]
    }
}

/// Resolves a placemark id to the point the panes should center on.
pub trait PlacemarkLocator {
    fn locate(&self, id: &str) -> Option<GeoPoint>;
}

impl PlacemarkLocator for SpatialIndex {
    fn locate(&self, id: &str) -> Option<GeoPoint> {
        self.get(id).map(|e| e.point)
    }
}

impl PlacemarkLocator for HashMap<String, GeoPoint> {
    fn locate(&self, id: &str) -> Option<GeoPoint> {
        self.get(id).copied()
    }
}

/// Advances the synchronizer by one event.
///
/// - click in a pane: both views recenter on the point; the clicked pane keeps
///   its scale and the other pane adopts the matching scale; commands for
///   both panes.
/// - select from the dropdown: both views recenter on the placemark at zoom
///   [`SELECT_ZOOM`]; commands for both panes.
/// - camera change with `epoch <= state.epoch`: an echo. The pane's view is
///   recorded (unless a newer command is already in flight to that pane) and
///   nothing is emitted.
/// - camera change with a fresh epoch: a user move in that pane; it is
///   adopted and one command goes to the other pane.
///
/// Errors leave the state untouched.
pub fn apply_event(
    state: &SyncState,
    event: &PaneEvent,
    locator: &impl PlacemarkLocator,
) -> Result<(SyncState, Vec<SyncCommand>), SyncError> {
    let mut next = state.clone();
    match &event.kind {
        EventKind::Click { point } => {
            let pane = event
                .origin
                .pane()
                .ok_or_else(|| SyncError::InvalidEvent("clicks come from a map pane".into()))?;
            point
                .validate()
                .map_err(|e| SyncError::InvalidEvent(e.to_string()))?;
            let p = point.flattened();
            next.view_2d.center = p;
            next.view_3d.target = p;
            match pane {
                Pane::TwoD => next.view_3d.range_m = range_from_zoom(next.view_2d.zoom)?,
                Pane::ThreeD => next.view_2d.zoom = zoom_from_range(next.view_3d.range_m)?,
            }
            next.epoch = state.epoch + 1;
            next.pane_epoch_2d = next.epoch;
            next.pane_epoch_3d = next.epoch;
            let commands = next.commands_for_both();
            Ok((next, commands))
        }
        EventKind::Select { placemark_id } => {
            let p = locator
                .locate(placemark_id)
                .ok_or_else(|| SyncError::UnknownPlacemark(placemark_id.clone()))?
                .flattened();
            next.view_2d = MapView {
                center: p,
                zoom: SELECT_ZOOM,
            };
            next.view_3d.target = p;
            next.view_3d.range_m = range_from_zoom(SELECT_ZOOM)?;
            next.epoch = state.epoch + 1;
            next.pane_epoch_2d = next.epoch;
            next.pane_epoch_3d = next.epoch;
            let commands = next.commands_for_both();
            Ok((next, commands))
        }
        EventKind::CameraChanged { view } => {
            let pane = event.origin.pane().ok_or_else(|| {
                SyncError::InvalidEvent("camera changes come from a map pane".into())
            })?;
            match (pane, view) {
                (Pane::TwoD, View::MapView(mv)) => mv.validate()?,
                (Pane::ThreeD, View::LookAt(la)) => la.validate()?,
                _ => {
                    return Err(SyncError::InvalidEvent(
                        "view type does not match the reporting pane".into(),
                    ))
                }
            }

            if event.epoch <= state.epoch {
                let pane_epoch = match pane {
                    Pane::TwoD => &mut next.pane_epoch_2d,
                    Pane::ThreeD => &mut next.pane_epoch_3d,
                };
                if event.epoch >= *pane_epoch {
                    *pane_epoch = event.epoch;
                    match view {
                        View::MapView(mv) => next.view_2d = *mv,
                        View::LookAt(la) => next.view_3d = *la,
                    }
                }
                return Ok((next, Vec::new()));
            }

            next.epoch = event.epoch;
            next.pane_epoch_2d = event.epoch;
            next.pane_epoch_3d = event.epoch;
            let command = match view {
                View::MapView(mv) => {
                    next.view_2d = *mv;
                    next.view_3d.target = mv.center.flattened();
                    next.view_3d.range_m = range_from_zoom(mv.zoom)?;
                    SyncCommand {
                        target_pane: Pane::ThreeD,
                        view: View::LookAt(next.view_3d),
                        epoch: next.epoch,
                    }
                }
                View::LookAt(la) => {
                    next.view_3d = *la;
                    next.view_2d = lookat_to_mapview(la)?;
                    SyncCommand {
                        target_pane: Pane::TwoD,
                        view: View::MapView(next.view_2d),
                        epoch: next.epoch,
                    }
                }
            };
            Ok((next, vec![command]))
        }
    }
}
