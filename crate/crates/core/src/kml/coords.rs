use super::{AxisOrder, KmlError, ParseMode, ParseOptions};
use crate::geo::GeoPoint;

/// Splits a `<coordinates>` body into tuples. Whitespace separates tuples,
/// except whitespace touching a comma, which is absorbed into the tuple.
pub(crate) fn split_tuples(text: &str) -> Vec<String> {
    let mut tuples: Vec<String> = Vec::new();
    for token in text.split_whitespace() {
        match tuples.last_mut() {
            Some(prev) if prev.ends_with(',') || token.starts_with(',') => prev.push_str(token),
            _ => tuples.push(token.to_string()),
        }
    }
    tuples
}

pub(crate) fn parse_tuple(
    tuple: &str,
    axis: AxisOrder,
    mode: ParseMode,
) -> Result<GeoPoint, String> {
    let mut parts: Vec<&str> = tuple.split(',').collect();
    if parts.len() > 1 && parts.last() == Some(&"") {
        if mode == ParseMode::Strict {
            return Err(format!("trailing comma in tuple {tuple:?}"));
        }
        parts.pop();
    }
    if !(2..=3).contains(&parts.len()) {
        return Err(format!(
            "tuple {tuple:?} has {} components, expected 2 or 3",
            parts.len()
        ));
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        let v: f64 = part
            .parse()
            .map_err(|_| format!("{part:?} in tuple {tuple:?} is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{part:?} in tuple {tuple:?} is not finite"));
        }
        *slot = v;
    }
    let (lat, lng) = match axis {
        AxisOrder::LonLat => (values[1], values[0]),
        AxisOrder::LatLon => (values[0], values[1]),
    };
    let point = if parts.len() == 3 {
        GeoPoint::with_alt(lat, lng, values[2])
    } else {
        GeoPoint::new(lat, lng)
    };
    point.map_err(|e| format!("tuple {tuple:?}: {e}"))
}

/// Lenient parse of a coordinate list (a trailing comma after a tuple is
/// tolerated). Fails on the first bad tuple.
pub fn parse_coordinate_string(s: &str, axis: AxisOrder) -> Result<Vec<GeoPoint>, KmlError> {
    parse_coordinates(s, &ParseOptions::new(axis, ParseMode::Lenient))
}

pub fn parse_coordinates(s: &str, opts: &ParseOptions) -> Result<Vec<GeoPoint>, KmlError> {
    split_tuples(s)
        .iter()
        .map(|t| parse_tuple(t, opts.axis_order, opts.mode).map_err(KmlError::BadCoordinate))
        .collect()
}
