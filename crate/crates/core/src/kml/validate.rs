use std::collections::HashSet;

use super::{Document, IssueCode, Severity, ValidationIssue};

/// Document-level checks: `DUPLICATE_ID` (error), `EMPTY_NAME` (warning) and
/// `UNRESOLVED_STYLE` (warning, or error when `styles_required`). Issues come
/// back errors first, then in placemark order.
///
/// `TESSELLATE_RANGE` depends on source text and is reported by
/// [`parse_document`](super::parse_document).
pub fn validate_document(doc: &Document, styles_required: bool) -> Vec<ValidationIssue> {
    validate_indexed(doc, styles_required)
        .into_iter()
        .map(|(_, issue)| issue)
        .collect()
}

/// Like [`validate_document`], keeping the index of the offending placemark.
pub(crate) fn validate_indexed(
    doc: &Document,
    styles_required: bool,
) -> Vec<(Option<usize>, ValidationIssue)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, pm) in doc.placemarks.iter().enumerate() {
        if !seen.insert(pm.id.as_str()) {
            out.push((
                Some(i),
                ValidationIssue::new(
                    Severity::Error,
                    IssueCode::DuplicateId,
                    format!("id {:?} is used by an earlier placemark", pm.id),
                )
                .for_placemark(&pm.id),
            ));
        }
        if pm.name.trim().is_empty() {
            out.push((
                Some(i),
                ValidationIssue::new(
                    Severity::Warning,
                    IssueCode::EmptyName,
                    "placemark has no display name",
                )
                .for_placemark(&pm.id),
            ));
        }
        if let Some(style_ref) = &pm.style_ref {
            let key = style_ref.strip_prefix('#').unwrap_or(style_ref);
            if !doc.styles.contains_key(key) {
                let severity = if styles_required {
                    Severity::Error
                } else {
                    Severity::Warning
                };
                out.push((
                    Some(i),
                    ValidationIssue::new(
                        severity,
                        IssueCode::UnresolvedStyle,
                        format!("style {style_ref:?} is not defined in this document"),
                    )
                    .for_placemark(&pm.id),
                ));
            }
        }
    }
    out.sort_by_key(|(i, issue)| (std::cmp::Reverse(issue.severity), *i));
    out
}
