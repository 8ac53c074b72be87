//! Geodetic primitives.
//!
//! - Angles are decimal degrees unless a type says otherwise.
//! - Distances are meters on a spherical earth of radius [`EARTH_RADIUS_M`].
//! - Longitudes are stored in `[-180, 180]`; [`normalize_longitude`] maps any
//!   finite value into the half-open range `[-180, 180)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean earth radius used by every distance computation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("invalid DMS angle: {0}")]
    InvalidDms(String),
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),
    #[error("invalid bounding box: {0}")]
    InvalidBbox(String),
}

impl GeoError {
    pub fn code(&self) -> &'static str {
        match self {
            GeoError::InvalidDms(_) => "INVALID_DMS",
            GeoError::InvalidCoordinate(_) => "INVALID_COORDINATE",
            GeoError::InvalidBbox(_) => "INVALID_BBOX",
        }
    }
}

/// The spherical earth model. There is exactly one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthModel {
    pub radius_m: f64,
}

impl EarthModel {
    pub const SPHERE: EarthModel = EarthModel {
        radius_m: EARTH_RADIUS_M,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "lat")]
    Lat,
    #[serde(rename = "lng")]
    Lng,
}

impl Axis {
    fn limit(self) -> f64 {
        match self {
            Axis::Lat => 90.0,
            Axis::Lng => 180.0,
        }
    }
}

impl FromStr for Axis {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lat" | "latitude" => Ok(Axis::Lat),
            "lng" | "lon" | "longitude" => Ok(Axis::Lng),
            other => Err(GeoError::InvalidCoordinate(format!(
                "unknown axis {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hemisphere {
    N,
    S,
    E,
    W,
}

impl Hemisphere {
    pub fn axis(self) -> Axis {
        match self {
            Hemisphere::N | Hemisphere::S => Axis::Lat,
            Hemisphere::E | Hemisphere::W => Axis::Lng,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Hemisphere::N | Hemisphere::E => 1.0,
            Hemisphere::S | Hemisphere::W => -1.0,
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'N' => Some(Hemisphere::N),
            'S' => Some(Hemisphere::S),
            'E' => Some(Hemisphere::E),
            'W' => Some(Hemisphere::W),
            _ => None,
        }
    }
}

impl fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Hemisphere::N => 'N',
            Hemisphere::S => 'S',
            Hemisphere::E => 'E',
            Hemisphere::W => 'W',
        };
        write!(f, "{c}")
    }
}

/// A sexagesimal angle. Seconds keep full precision; only [`fmt::Display`]
/// rounds them to hundredths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmsAngle {
    pub degrees: u32,
    pub minutes: u32,
    pub seconds: f64,
    pub hemisphere: Hemisphere,
}

impl DmsAngle {
    pub fn new(
        degrees: u32,
        minutes: u32,
        seconds: f64,
        hemisphere: Hemisphere,
    ) -> Result<Self, GeoError> {
        let angle = DmsAngle {
            degrees,
            minutes,
            seconds,
            hemisphere,
        };
        angle.validate()?;
        Ok(angle)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if self.minutes >= 60 {
            return Err(GeoError::InvalidDms(format!(
                "minutes {} not below 60",
                self.minutes
            )));
        }
        if !self.seconds.is_finite() || !(0.0..60.0).contains(&self.seconds) {
            return Err(GeoError::InvalidDms(format!(
                "seconds {} outside [0, 60)",
                self.seconds
            )));
        }
        let limit = self.hemisphere.axis().limit();
        if f64::from(self.degrees) > limit || self.magnitude() > limit {
            return Err(GeoError::InvalidDms(format!(
                "{}° {} exceeds {limit}°",
                self.degrees, self.hemisphere
            )));
        }
        Ok(())
    }

    fn magnitude(&self) -> f64 {
        f64::from(self.degrees) + f64::from(self.minutes) / 60.0 + self.seconds / 3600.0
    }
}

impl fmt::Display for DmsAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Round on the total so 59.999" carries into the minutes.
        let hundredths = u64::from(self.degrees) * 360_000
            + u64::from(self.minutes) * 6_000
            + (self.seconds * 100.0).round() as u64;
        let degrees = hundredths / 360_000;
        let minutes = (hundredths % 360_000) / 6_000;
        let centis = hundredths % 6_000;
        write!(
            f,
            "{degrees}°{minutes}'{}.{:02}\" {}",
            centis / 100,
            centis % 100,
            self.hemisphere
        )
    }
}

impl FromStr for DmsAngle {
    type Err = GeoError;

    /// Accepts `D°M'S.SS"H` plus the ASCII separators `d`, `m`, `s`.
    /// Minutes and seconds may be omitted; the hemisphere letter may not.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| GeoError::InvalidDms(format!("{text:?}: {why}"));
        let trimmed = text.trim();
        if trimmed.starts_with('-') || trimmed.starts_with('+') {
            return Err(bad("signs are not allowed alongside a hemisphere letter"));
        }
        let hemi_char = trimmed.chars().last().ok_or_else(|| bad("empty"))?;
        let hemisphere =
            Hemisphere::from_char(hemi_char).ok_or_else(|| bad("missing hemisphere letter"))?;
        let body = trimmed[..trimmed.len() - hemi_char.len_utf8()].trim_end();

        let mut parts: [Option<&str>; 3] = [None; 3];
        let mut slot = 0usize;
        let mut start = 0usize;
        for (i, c) in body.char_indices() {
            let kind = match c {
                '°' | 'd' => Some(0),
                '\'' | '′' | 'm' => Some(1),
                '"' | '″' | 's' => Some(2),
                _ => None,
            };
            if let Some(kind) = kind {
                if kind < slot {
                    return Err(bad("components out of order"));
                }
                parts[kind] = Some(body[start..i].trim());
                slot = kind + 1;
                start = i + c.len_utf8();
            }
        }
        if !body[start..].trim().is_empty() {
            return Err(bad("trailing characters without a unit separator"));
        }

        let degrees = parts[0]
            .ok_or_else(|| bad("missing degrees"))?
            .parse::<u32>()
            .map_err(|_| bad("degrees must be a non-negative integer"))?;
        let minutes = match parts[1] {
            Some(m) => m
                .parse::<u32>()
                .map_err(|_| bad("minutes must be a non-negative integer"))?,
            None => 0,
        };
        let seconds = match parts[2] {
            Some(s) if !s.starts_with('-') => s
                .parse::<f64>()
                .map_err(|_| bad("seconds must be a number"))?,
            Some(_) => return Err(bad("seconds must be non-negative")),
            None => 0.0,
        };
        DmsAngle::new(degrees, minutes, seconds, hemisphere)
    }
}

/// Signed decimal degrees; hemisphere letters decide the sign.
pub fn dms_to_decimal(angle: &DmsAngle) -> Result<f64, GeoError> {
    angle.validate()?;
    Ok(angle.hemisphere.sign() * angle.magnitude())
}

pub fn decimal_to_dms(deg: f64, axis: Axis) -> Result<DmsAngle, GeoError> {
    let limit = axis.limit();
    if !deg.is_finite() || deg.abs() > limit {
        return Err(GeoError::InvalidCoordinate(format!(
            "{deg} outside [-{limit}, {limit}]"
        )));
    }
    let hemisphere = match (axis, deg < 0.0) {
        (Axis::Lat, false) => Hemisphere::N,
        (Axis::Lat, true) => Hemisphere::S,
        (Axis::Lng, false) => Hemisphere::E,
        (Axis::Lng, true) => Hemisphere::W,
    };
    let magnitude = deg.abs();
    let degrees = magnitude.floor();
    let rem_minutes = (magnitude - degrees) * 60.0;
    let minutes = rem_minutes.floor().min(59.0);
    let seconds = ((rem_minutes - minutes) * 60.0).clamp(0.0, 60.0_f64.next_down());
    DmsAngle::new(degrees as u32, minutes as u32, seconds, hemisphere)
}

/// Maps a finite longitude into `[-180, 180)`. Values already in range are
/// returned unchanged.
pub fn normalize_longitude(lng: f64) -> Result<f64, GeoError> {
    if !lng.is_finite() {
        return Err(GeoError::InvalidCoordinate(format!(
            "non-finite longitude {lng}"
        )));
    }
    if (-180.0..180.0).contains(&lng) {
        return Ok(lng);
    }
    let wrapped = (lng + 180.0).rem_euclid(360.0) - 180.0;
    Ok(if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    })
}

/// A geodetic position. `alt_m` is absent unless the source supplied one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    #[serde(rename = "lat")]
    pub lat_deg: f64,
    #[serde(rename = "lng")]
    pub lng_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt_m: Option<f64>,
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lng_deg: f64) -> Result<Self, GeoError> {
        let p = GeoPoint {
            lat_deg,
            lng_deg,
            alt_m: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_alt(lat_deg: f64, lng_deg: f64, alt_m: f64) -> Result<Self, GeoError> {
        if !alt_m.is_finite() {
            return Err(GeoError::InvalidCoordinate(format!(
                "non-finite altitude {alt_m}"
            )));
        }
        let mut p = GeoPoint::new(lat_deg, lng_deg)?;
        p.alt_m = Some(alt_m);
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.lat_deg.is_finite() || self.lat_deg.abs() > 90.0 {
            return Err(GeoError::InvalidCoordinate(format!(
                "latitude {} outside [-90, 90]",
                self.lat_deg
            )));
        }
        if !self.lng_deg.is_finite() || self.lng_deg.abs() > 180.0 {
            return Err(GeoError::InvalidCoordinate(format!(
                "longitude {} outside [-180, 180]",
                self.lng_deg
            )));
        }
        Ok(())
    }

    pub fn altitude(&self) -> f64 {
        self.alt_m.unwrap_or(0.0)
    }

    /// Same horizontal position with the altitude dropped.
    pub fn flattened(&self) -> GeoPoint {
        GeoPoint {
            alt_m: None,
            ..*self
        }
    }
}

/// Great-circle distance on [`EarthModel::SPHERE`].
pub fn haversine_distance_m(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let lat_a = a.lat_deg.to_radians();
    let lat_b = b.lat_deg.to_radians();
    // Absolute differences keep the result bit-for-bit symmetric.
    let d_lat = (a.lat_deg - b.lat_deg).abs().to_radians();
    let d_lng = (a.lng_deg - b.lng_deg).abs().to_radians();
    let h = (d_lat / 2.0).sin().powi(2) + lat_a.cos() * lat_b.cos() * (d_lng / 2.0).sin().powi(2);
    2.0 * EarthModel::SPHERE.radius_m * h.sqrt().min(1.0).asin()
}

/// Axis-aligned lat/lng box; boundary inclusive. Boxes that would cross the
/// antimeridian (min lng > max lng) are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: GeoPoint,
    pub max: GeoPoint,
}

impl BBox {
    pub fn new(min: GeoPoint, max: GeoPoint) -> Result<Self, GeoError> {
        min.validate()
            .map_err(|e| GeoError::InvalidBbox(e.to_string()))?;
        max.validate()
            .map_err(|e| GeoError::InvalidBbox(e.to_string()))?;
        if min.lat_deg > max.lat_deg {
            return Err(GeoError::InvalidBbox(format!(
                "min latitude {} above max latitude {}",
                min.lat_deg, max.lat_deg
            )));
        }
        if min.lng_deg > max.lng_deg {
            return Err(GeoError::InvalidBbox(format!(
                "min longitude {} east of max longitude {} (antimeridian boxes are not supported)",
                min.lng_deg, max.lng_deg
            )));
        }
        Ok(BBox {
            min: min.flattened(),
            max: max.flattened(),
        })
    }

    pub fn from_edges(
        min_lng: f64,
        min_lat: f64,
        max_lng: f64,
        max_lat: f64,
    ) -> Result<Self, GeoError> {
        let corner =
            |lat, lng| GeoPoint::new(lat, lng).map_err(|e| GeoError::InvalidBbox(e.to_string()));
        BBox::new(corner(min_lat, min_lng)?, corner(max_lat, max_lng)?)
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lat_deg >= self.min.lat_deg
            && p.lat_deg <= self.max.lat_deg
            && p.lng_deg >= self.min.lng_deg
            && p.lng_deg <= self.max.lng_deg
    }
}

impl FromStr for BBox {
    type Err = GeoError;

    /// `minLng,minLat,maxLng,maxLat`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values: Vec<f64> = s
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                GeoError::InvalidBbox(format!("{s:?} is not four comma-separated numbers"))
            })?;
        match values.as_slice() {
            &[min_lng, min_lat, max_lng, max_lat] => {
                BBox::from_edges(min_lng, min_lat, max_lng, max_lat)
            }
            _ => Err(GeoError::InvalidBbox(format!(
                "{s:?} has {} values, expected 4",
                values.len()
            ))),
        }
    }
}
