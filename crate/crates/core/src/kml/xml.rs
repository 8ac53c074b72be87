//! Minimal element tree over quick-xml events, with start-tag line numbers.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::KmlError;

#[derive(Debug, Clone)]
pub(crate) struct Element {
    /// Local name, namespace prefix stripped.
    pub name: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<Node>,
    pub line: u32,
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Element(Element),
    Text(String),
}

impl Element {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text(_) => None,
        })
    }

    /// Concatenated text of direct text children.
    pub fn text(&self) -> String {
        self.children
            .iter()
            .filter_map(|n| match n {
                Node::Text(t) => Some(t.as_str()),
                Node::Element(_) => None,
            })
            .collect()
    }
}

struct LineCounter<'a> {
    text: &'a str,
    pos: usize,
    line: u32,
}

impl LineCounter<'_> {
    fn line_at(&mut self, offset: usize) -> u32 {
        let offset = offset.min(self.text.len());
        if offset < self.pos {
            self.pos = 0;
            self.line = 1;
        }
        self.line += self.text.as_bytes()[self.pos..offset]
            .iter()
            .filter(|&&b| b == b'\n')
            .count() as u32;
        self.pos = offset;
        self.line
    }
}

fn malformed(message: impl Into<String>, line: u32) -> KmlError {
    KmlError::MalformedXml {
        message: message.into(),
        line,
    }
}

fn open_element(start: &BytesStart<'_>, line: u32) -> Result<Element, KmlError> {
    let name = String::from_utf8_lossy(start.local_name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for attr in start.attributes() {
        let attr = attr.map_err(|e| malformed(format!("bad attribute in <{name}>: {e}"), line))?;
        let key = String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|e| malformed(format!("bad attribute value in <{name}>: {e}"), line))?
            .into_owned();
        attrs.push((key, value));
    }
    Ok(Element {
        name,
        attrs,
        children: Vec::new(),
        line,
    })
}

/// Parses UTF-8 XML into its single root element.
pub(crate) fn parse_tree(bytes: &[u8]) -> Result<Element, KmlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count() as u32
            + 1;
        malformed(format!("input is not UTF-8: {e}"), line)
    })?;
    let mut reader = Reader::from_str(text);
    let mut lines = LineCounter {
        text,
        pos: 0,
        line: 1,
    };
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;

    loop {
        let before = reader.buffer_position() as usize;
        let event = reader.read_event().map_err(|e| {
            let at = reader.error_position() as usize;
            malformed(e.to_string(), lines.line_at(at))
        })?;
        let after = reader.buffer_position() as usize;
        match event {
            Event::Start(ref start) | Event::Empty(ref start) => {
                let is_empty = matches!(event, Event::Empty(_));
                // `before` may sit on whitespace that preceded the tag.
                let tag_start = text[before..after].find('<').map_or(before, |i| before + i);
                let line = lines.line_at(tag_start);
                if stack.is_empty() && root.is_some() {
                    return Err(malformed("more than one root element", line));
                }
                let element = open_element(start, line)?;
                if is_empty {
                    attach(&mut stack, &mut root, element);
                } else {
                    stack.push(element);
                }
            }
            Event::End(_) => {
                let element = stack
                    .pop()
                    .ok_or_else(|| malformed("unexpected closing tag", lines.line_at(before)))?;
                attach(&mut stack, &mut root, element);
            }
            Event::Text(t) => {
                let content = t
                    .unescape()
                    .map_err(|e| malformed(e.to_string(), lines.line_at(before)))?;
                push_text(&mut stack, &content, || lines.line_at(before))?;
            }
            Event::CData(c) => {
                let content = String::from_utf8_lossy(&c.into_inner()).into_owned();
                push_text(&mut stack, &content, || lines.line_at(before))?;
            }
            Event::Eof => break,
            Event::Decl(_) | Event::PI(_) | Event::Comment(_) | Event::DocType(_) => {}
        }
    }
    if let Some(open) = stack.last() {
        return Err(malformed(
            format!("<{}> is never closed", open.name),
            open.line,
        ));
    }
    root.ok_or_else(|| malformed("no root element", lines.line_at(text.len())))
}

fn attach(stack: &mut [Element], root: &mut Option<Element>, element: Element) {
    match stack.last_mut() {
        Some(parent) => parent.children.push(Node::Element(element)),
        None => *root = Some(element),
    }
}

fn push_text(
    stack: &mut [Element],
    content: &str,
    line: impl FnOnce() -> u32,
) -> Result<(), KmlError> {
    match stack.last_mut() {
        Some(parent) => {
            parent.children.push(Node::Text(content.to_string()));
            Ok(())
        }
        None if content.trim().is_empty() => Ok(()),
        None => Err(malformed("text outside the root element", line())),
    }
}
