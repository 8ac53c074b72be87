use std::fmt::Write;

use quick_xml::escape::escape;

use super::{Document, Geometry, LinearRing, Placemark, Style};
use crate::geo::GeoPoint;

pub const KML_MEDIA_TYPE: &str = "application/vnd.google-earth.kml+xml";

const XML_HEADER: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";

/// Canonical KML: styles in id order, then placemarks in document order, each
/// as `name*, description?, styleUrl?, geometry`. Coordinates are written
/// `lng,lat[,alt]` with nine decimals; indentation is two spaces.
///
/// Only `"name"` attributes are persisted (one `<name>` element each).
pub fn serialize_document(doc: &Document) -> String {
    let mut out = String::from(XML_HEADER);
    out.push_str("<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n");
    out.push_str("  <Document>\n");
    for style in doc.styles.values() {
        write_style(&mut out, style);
    }
    for pm in &doc.placemarks {
        write_placemark(&mut out, pm);
    }
    out.push_str("  </Document>\n");
    out.push_str("</kml>\n");
    out
}

fn write_style(out: &mut String, style: &Style) {
    let _ = writeln!(out, "    <Style id=\"{}\">", escape(&style.id));
    if !style.color_hint.is_empty() || !style.icon_hint.is_empty() {
        out.push_str("      <IconStyle>\n");
        if !style.color_hint.is_empty() {
            let _ = writeln!(out, "        <color>{}</color>", escape(&style.color_hint));
        }
        if !style.icon_hint.is_empty() {
            out.push_str("        <Icon>\n");
            let _ = writeln!(out, "          <href>{}</href>", escape(&style.icon_hint));
            out.push_str("        </Icon>\n");
        }
        out.push_str("      </IconStyle>\n");
    }
    out.push_str("    </Style>\n");
}

fn names(pm: &Placemark) -> Vec<&str> {
    let mut names: Vec<&str> = pm
        .attributes
        .iter()
        .filter(|(k, _)| k == "name")
        .map(|(_, v)| v.as_str())
        .collect();
    if names.first() != Some(&pm.name.as_str()) && !pm.name.is_empty() {
        names.insert(0, &pm.name);
    }
    names
}

fn write_placemark(out: &mut String, pm: &Placemark) {
    let _ = writeln!(out, "    <Placemark id=\"{}\">", escape(&pm.id));
    for name in names(pm) {
        let _ = writeln!(out, "      <name>{}</name>", escape(name));
    }
    if !pm.description.is_empty() {
        let _ = writeln!(
            out,
            "      <description>{}</description>",
            escape(&pm.description)
        );
    }
    if let Some(style_ref) = &pm.style_ref {
        let _ = writeln!(out, "      <styleUrl>{}</styleUrl>", escape(style_ref));
    }
    match &pm.geometry {
        Geometry::Point(p) => {
            out.push_str("      <Point>\n");
            let _ = writeln!(out, "        <coordinates>{}</coordinates>", tuple(p));
            out.push_str("      </Point>\n");
        }
        Geometry::Polygon(poly) => {
            match poly.extrude_height_m {
                Some(h) => {
                    let _ = writeln!(out, "      <Polygon extrudeHeight=\"{h}\">");
                }
                None => out.push_str("      <Polygon>\n"),
            }
            let _ = writeln!(
                out,
                "        <tessellate>{}</tessellate>",
                if poly.tessellate { 1 } else { 0 }
            );
            write_boundary(out, "outerBoundaryIs", &poly.outer);
            for inner in &poly.inners {
                write_boundary(out, "innerBoundaryIs", inner);
            }
            out.push_str("      </Polygon>\n");
        }
    }
    out.push_str("    </Placemark>\n");
}

fn write_boundary(out: &mut String, tag: &str, ring: &LinearRing) {
    let coords: Vec<String> = ring.vertices().iter().map(tuple).collect();
    let _ = writeln!(out, "        <{tag}>");
    out.push_str("          <LinearRing>\n");
    let _ = writeln!(
        out,
        "            <coordinates>{}</coordinates>",
        coords.join(" ")
    );
    out.push_str("          </LinearRing>\n");
    let _ = writeln!(out, "        </{tag}>");
}

fn tuple(p: &GeoPoint) -> String {
    match p.alt_m {
        Some(alt) => format!("{:.9},{:.9},{:.9}", p.lng_deg, p.lat_deg, alt),
        None => format!("{:.9},{:.9}", p.lng_deg, p.lat_deg),
    }
}
