use std::collections::{BTreeMap, HashSet};

use super::coords::{parse_tuple, split_tuples};
use super::validate::validate_indexed;
use super::xml::{parse_tree, Element};
use super::{
    collapse_whitespace, distinct_vertices, ring_is_closed, Document, Geometry, IssueCode,
    KmlError, LinearRing, ParseMode, ParseOptions, Placemark, Polygon, Severity, Style,
    ValidationIssue,
};
use crate::geo::GeoPoint;

/// An issue plus the keys that order it in the final report.
struct Pending {
    issue: ValidationIssue,
    /// Ordinal of the placemark element it belongs to; document-level issues
    /// take the ordinal of the next placemark element.
    ordinal: usize,
    in_placemark: bool,
}

struct Walker<'a> {
    opts: ParseOptions,
    ids: &'a [String],
    next_ordinal: usize,
    pending: Vec<Pending>,
    styles: BTreeMap<String, Style>,
    placemarks: Vec<Placemark>,
    /// Parallel to `placemarks`: (element ordinal, start line).
    origins: Vec<(usize, u32)>,
}

struct PlacemarkCtx {
    id: String,
    issues: Vec<ValidationIssue>,
}

impl PlacemarkCtx {
    fn issue(
        &mut self,
        severity: Severity,
        code: IssueCode,
        line: u32,
        message: impl Into<String>,
    ) {
        self.issues.push(
            ValidationIssue::new(severity, code, message)
                .for_placemark(self.id.clone())
                .at_line(line),
        );
    }
}

/// Parses the KML subset.
///
/// Lenient mode never fails on well-formed XML: every deviation is repaired or
/// skipped and reported as an issue. Strict mode aborts on the first
/// `MULTIPLE_NAMES`, `UNCLOSED_RING`, `DEGENERATE_RING` or `BAD_COORDINATE`,
/// taking rules in that order within a placemark and placemarks in document
/// order.
///
/// The returned issues include the [`validate_document`](super::validate_document)
/// findings (with unresolved styles as warnings), sorted errors first and then
/// by document order.
pub fn parse_document(
    bytes: &[u8],
    opts: &ParseOptions,
) -> Result<(Document, Vec<ValidationIssue>), KmlError> {
    let root = parse_tree(bytes)?;

    let mut placemark_nodes = Vec::new();
    collect_placemarks(&root, &mut placemark_nodes);
    let ids = assign_ids(&placemark_nodes);

    let mut walker = Walker {
        opts: *opts,
        ids: &ids,
        next_ordinal: 0,
        pending: Vec::new(),
        styles: BTreeMap::new(),
        placemarks: Vec::new(),
        origins: Vec::new(),
    };
    if root.name == "Placemark" {
        walker.walk_placemark_element(&root)?;
    } else if is_container(&root.name) {
        walker.walk_container(&root)?;
    } else {
        walker.unknown(&root, "the document root");
    }

    let Walker {
        mut pending,
        styles,
        placemarks,
        origins,
        ..
    } = walker;
    let doc = Document {
        placemarks,
        styles,
        source_uri: String::new(),
    };

    for (index, issue) in validate_indexed(&doc, false) {
        let (ordinal, line) = match index {
            Some(i) => (origins[i].0, Some(origins[i].1)),
            None => (usize::MAX, None),
        };
        let issue = match (issue.line, line) {
            (None, Some(l)) => issue.at_line(l),
            _ => issue,
        };
        pending.push(Pending {
            issue,
            ordinal,
            in_placemark: index.is_some(),
        });
    }
    pending.sort_by_key(|p| {
        (
            std::cmp::Reverse(p.issue.severity),
            p.ordinal,
            p.in_placemark,
            p.issue.code.rule_rank(),
            p.issue.line,
        )
    });
    Ok((doc, pending.into_iter().map(|p| p.issue).collect()))
}

fn is_container(name: &str) -> bool {
    matches!(name, "kml" | "Document")
}

fn collect_placemarks<'a>(el: &'a Element, out: &mut Vec<&'a Element>) {
    if el.name == "Placemark" {
        out.push(el);
    } else if is_container(&el.name) {
        for child in el.elements() {
            collect_placemarks(child, out);
        }
    }
}

fn explicit_id(el: &Element) -> Option<&str> {
    el.attr("id").map(str::trim).filter(|id| !id.is_empty())
}

/// Explicit ids are kept as written; missing ones become `pm-<ordinal>`,
/// suffixed `-dup<n>` while that collides with an id already taken.
fn assign_ids(nodes: &[&Element]) -> Vec<String> {
    let mut taken: HashSet<String> = nodes
        .iter()
        .filter_map(|n| explicit_id(n))
        .map(str::to_string)
        .collect();
    nodes
        .iter()
        .enumerate()
        .map(|(i, node)| match explicit_id(node) {
            Some(id) => id.to_string(),
            None => {
                let base = format!("pm-{}", i + 1);
                let mut candidate = base.clone();
                let mut n = 1;
                while taken.contains(&candidate) {
                    candidate = format!("{base}-dup{n}");
                    n += 1;
                }
                taken.insert(candidate.clone());
                candidate
            }
        })
        .collect()
}

impl Walker<'_> {
    fn unknown(&mut self, el: &Element, parent: &str) {
        let issue = ValidationIssue::new(
            Severity::Warning,
            IssueCode::UnknownElement,
            format!("<{}> in {parent} is not supported; skipped", el.name),
        )
        .at_line(el.line);
        self.pending.push(Pending {
            issue,
            ordinal: self.next_ordinal,
            in_placemark: false,
        });
    }

    fn walk_container(&mut self, el: &Element) -> Result<(), KmlError> {
        for child in el.elements() {
            match child.name.as_str() {
                "kml" | "Document" => self.walk_container(child)?,
                "Placemark" => self.walk_placemark_element(child)?,
                "Style" => self.walk_style(child),
                _ => self.unknown(child, &format!("<{}>", el.name)),
            }
        }
        Ok(())
    }

    fn walk_style(&mut self, el: &Element) {
        let Some(id) = explicit_id(el) else {
            let issue = ValidationIssue::new(
                Severity::Warning,
                IssueCode::UnknownElement,
                "<Style> without id; skipped",
            )
            .at_line(el.line);
            self.pending.push(Pending {
                issue,
                ordinal: self.next_ordinal,
                in_placemark: false,
            });
            return;
        };
        let mut style = Style {
            id: id.to_string(),
            icon_hint: String::new(),
            color_hint: String::new(),
        };
        for child in el.elements() {
            if child.name != "IconStyle" {
                self.unknown(child, "<Style>");
                continue;
            }
            for part in child.elements() {
                match part.name.as_str() {
                    "color" => style.color_hint = part.text().trim().to_string(),
                    "Icon" => {
                        for icon in part.elements() {
                            if icon.name == "href" {
                                style.icon_hint = icon.text().trim().to_string();
                            } else {
                                self.unknown(icon, "<Icon>");
                            }
                        }
                    }
                    _ => self.unknown(part, "<IconStyle>"),
                }
            }
        }
        self.styles.insert(style.id.clone(), style);
    }

    fn walk_placemark_element(&mut self, el: &Element) -> Result<(), KmlError> {
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        let mut ctx = PlacemarkCtx {
            id: self.ids[ordinal].clone(),
            issues: Vec::new(),
        };
        let placemark = self.build_placemark(el, &mut ctx);

        if self.opts.mode == ParseMode::Strict {
            let first = ctx
                .issues
                .iter()
                .filter(|i| i.code.aborts_strict())
                .min_by_key(|i| (i.code.rule_rank(), i.line));
            if let Some(issue) = first {
                let mut issue = issue.clone();
                issue.severity = Severity::Error;
                return Err(KmlError::Strict(issue));
            }
        }
        self.pending
            .extend(ctx.issues.into_iter().map(|issue| Pending {
                issue,
                ordinal,
                in_placemark: true,
            }));
        if let Some(pm) = placemark {
            self.placemarks.push(pm);
            self.origins.push((ordinal, el.line));
        }
        Ok(())
    }

    fn build_placemark(&self, el: &Element, ctx: &mut PlacemarkCtx) -> Option<Placemark> {
        let mut names: Vec<(String, u32)> = Vec::new();
        let mut description: Option<String> = None;
        let mut style_ref = None;
        let mut geometry: Option<Geometry> = None;
        let mut saw_geometry = false;

        for child in el.elements() {
            match child.name.as_str() {
                "name" => names.push((collapse_whitespace(&child.text()), child.line)),
                "description" => {
                    if description.is_none() {
                        description = Some(collapse_whitespace(&child.text()));
                    }
                }
                "styleUrl" => {
                    let url: String = child
                        .text()
                        .chars()
                        .filter(|c| !c.is_whitespace())
                        .collect();
                    if url.starts_with('#') {
                        style_ref = Some(url);
                    } else if !url.is_empty() {
                        ctx.issue(
                            Severity::Warning,
                            IssueCode::UnresolvedStyle,
                            child.line,
                            format!("style reference {url:?} is not document-local (#id); ignored"),
                        );
                    }
                }
                "Point" | "Polygon" if saw_geometry => ctx.issue(
                    Severity::Warning,
                    IssueCode::UnknownElement,
                    child.line,
                    format!(
                        "additional <{}> ignored; a placemark holds one geometry",
                        child.name
                    ),
                ),
                "Point" => {
                    saw_geometry = true;
                    geometry = self.build_point(child, ctx);
                }
                "Polygon" => {
                    saw_geometry = true;
                    geometry = self.build_polygon(child, ctx);
                }
                _ => ctx.issue(
                    Severity::Warning,
                    IssueCode::UnknownElement,
                    child.line,
                    format!("<{}> in <Placemark> is not supported; skipped", child.name),
                ),
            }
        }

        if names.len() > 1 {
            ctx.issue(
                Severity::Warning,
                IssueCode::MultipleNames,
                names[1].1,
                format!(
                    "{} <name> elements; the first is the display name and all are kept as attributes",
                    names.len()
                ),
            );
        }
        let Some(geometry) = geometry else {
            ctx.issue(
                Severity::Error,
                IssueCode::BadCoordinate,
                el.line,
                "placemark has no usable geometry; dropped",
            );
            return None;
        };
        Some(Placemark {
            id: ctx.id.clone(),
            name: names.first().map(|(n, _)| n.clone()).unwrap_or_default(),
            description: description.unwrap_or_default(),
            style_ref,
            geometry,
            attributes: names
                .into_iter()
                .map(|(n, _)| ("name".to_string(), n))
                .collect(),
        })
    }

    /// Valid tuples of a `<coordinates>` element; bad ones are reported and dropped.
    fn read_coordinates(&self, el: &Element, ctx: &mut PlacemarkCtx) -> Vec<GeoPoint> {
        let mut points = Vec::new();
        for tuple in split_tuples(&el.text()) {
            match parse_tuple(&tuple, self.opts.axis_order, self.opts.mode) {
                Ok(p) => points.push(p),
                Err(why) => ctx.issue(
                    Severity::Warning,
                    IssueCode::BadCoordinate,
                    el.line,
                    format!("{why}; dropped"),
                ),
            }
        }
        points
    }

    fn build_point(&self, el: &Element, ctx: &mut PlacemarkCtx) -> Option<Geometry> {
        let mut point = None;
        for child in el.elements() {
            if child.name == "coordinates" && point.is_none() {
                let points = self.read_coordinates(child, ctx);
                if points.len() > 1 {
                    ctx.issue(
                        Severity::Warning,
                        IssueCode::BadCoordinate,
                        child.line,
                        format!("<Point> holds {} tuples; using the first", points.len()),
                    );
                }
                point = Some(points.first().copied());
            } else {
                ctx.issue(
                    Severity::Warning,
                    IssueCode::UnknownElement,
                    child.line,
                    format!("<{}> in <Point> is not supported; skipped", child.name),
                );
            }
        }
        point.flatten().map(Geometry::Point)
    }

    fn build_polygon(&self, el: &Element, ctx: &mut PlacemarkCtx) -> Option<Geometry> {
        let mut tessellate = false;
        let mut outer: Option<(Vec<GeoPoint>, u32)> = None;
        let mut inners: Vec<(Vec<GeoPoint>, u32)> = Vec::new();

        let extrude_height_m =
            el.attr("extrudeHeight")
                .and_then(|raw| match raw.trim().parse::<f64>() {
                    Ok(h) if h.is_finite() && h >= 0.0 => Some(h),
                    _ => {
                        ctx.issue(
                            Severity::Warning,
                            IssueCode::BadCoordinate,
                            el.line,
                            format!("extrudeHeight {raw:?} is not a non-negative number; ignored"),
                        );
                        None
                    }
                });

        for child in el.elements() {
            match child.name.as_str() {
                "tessellate" => {
                    let raw = child.text();
                    match raw.trim() {
                        "0" => tessellate = false,
                        "1" => tessellate = true,
                        other => ctx.issue(
                            Severity::Error,
                            IssueCode::TessellateRange,
                            child.line,
                            format!("tessellate must be 0 or 1, found {other:?}; using 0"),
                        ),
                    }
                }
                "outerBoundaryIs" if outer.is_none() => {
                    outer = self.boundary_rings(child, ctx).into_iter().next();
                }
                "innerBoundaryIs" => inners.extend(self.boundary_rings(child, ctx)),
                _ => ctx.issue(
                    Severity::Warning,
                    IssueCode::UnknownElement,
                    child.line,
                    format!("<{}> in <Polygon> is not supported; skipped", child.name),
                ),
            }
        }

        let (outer_vertices, outer_line) = outer?;
        let outer_ring = match close_and_check(outer_vertices.clone(), outer_line, "outer", ctx) {
            Some(ring) => ring,
            None => {
                let first = outer_vertices.first().copied()?;
                ctx.issue(
                    Severity::Warning,
                    IssueCode::DegenerateRing,
                    outer_line,
                    "polygon demoted to a Point at its first vertex",
                );
                return Some(Geometry::Point(first));
            }
        };
        let inners = inners
            .into_iter()
            .filter_map(|(vertices, line)| close_and_check(vertices, line, "inner", ctx))
            .collect();
        Some(Geometry::Polygon(Polygon {
            outer: outer_ring,
            inners,
            tessellate,
            extrude_height_m,
        }))
    }

    fn boundary_rings(&self, el: &Element, ctx: &mut PlacemarkCtx) -> Vec<(Vec<GeoPoint>, u32)> {
        let mut rings = Vec::new();
        for ring in el.elements() {
            if ring.name != "LinearRing" {
                ctx.issue(
                    Severity::Warning,
                    IssueCode::UnknownElement,
                    ring.line,
                    format!("<{}> in <{}> is not supported; skipped", ring.name, el.name),
                );
                continue;
            }
            let mut vertices = Vec::new();
            let mut line = ring.line;
            for part in ring.elements() {
                if part.name == "coordinates" {
                    line = part.line;
                    vertices.extend(self.read_coordinates(part, ctx));
                } else {
                    ctx.issue(
                        Severity::Warning,
                        IssueCode::UnknownElement,
                        part.line,
                        format!("<{}> in <LinearRing> is not supported; skipped", part.name),
                    );
                }
            }
            rings.push((vertices, line));
        }
        rings
    }
}

/// Closes an open ring (reporting `UNCLOSED_RING`) and rejects rings with
/// fewer than three distinct vertices (reporting `DEGENERATE_RING` for inner
/// rings; the caller reports the outer-ring demotion).
fn close_and_check(
    mut vertices: Vec<GeoPoint>,
    line: u32,
    which: &str,
    ctx: &mut PlacemarkCtx,
) -> Option<LinearRing> {
    if vertices.len() > 1 && !ring_is_closed(&vertices) {
        ctx.issue(
            Severity::Warning,
            IssueCode::UnclosedRing,
            line,
            format!("{which} ring is not closed; first vertex appended"),
        );
        vertices.push(vertices[0]);
    }
    let distinct = distinct_vertices(&vertices).len();
    if distinct < 3 {
        if which == "inner" {
            ctx.issue(
                Severity::Warning,
                IssueCode::DegenerateRing,
                line,
                format!("inner ring has {distinct} distinct vertices; dropped"),
            );
        }
        return None;
    }
    LinearRing::new(vertices).ok()
}
