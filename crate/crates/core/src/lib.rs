//! Core of the geoatlas web GIS: geodetic primitives, the KML attribute
//! store, a spatial index over placemarks and the dual-pane view
//! synchronizer.

pub mod fixtures;
pub mod geo;
pub mod index;
pub mod kml;
pub mod sync;
