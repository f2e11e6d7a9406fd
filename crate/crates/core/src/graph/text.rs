//! Line-oriented triple text format.
//!
//! One triple per line as `subject<TAB>predicate<TAB>object`. Literals are
//! double-quoted (with `\"`, `\\`, `\t`, `\n` escapes), blank nodes start
//! with `_:`, everything else is a URI reference. Lines starting with `#`
//! are comments. For `@` predicates a bare object is read as a literal.

use std::io::{self, Write};

use super::term::{NodeId, NodeKind};
use super::triple::Triple;

pub fn parse_term(field: &str) -> Result<NodeId, String> {
    let field = field.trim();
    if field.is_empty() {
        return Err("empty field".into());
    }
    if let Some(rest) = field.strip_prefix('"') {
        let body = rest
            .strip_suffix('"')
            .filter(|_| !rest.is_empty() && !ends_with_escape(rest))
            .ok_or_else(|| format!("unterminated literal {field}"))?;
        return unescape(body).map(NodeId::literal);
    }
    if let Some(id) = field.strip_prefix("_:") {
        if id.is_empty() {
            return Err("empty blank node label".into());
        }
        return Ok(NodeId::blank(id));
    }
    Ok(NodeId::uri(field))
}

// `"abc\"` ends in an escaped quote, not a closing one.
fn ends_with_escape(rest: &str) -> bool {
    let without_quote = &rest[..rest.len() - 1];
    let trailing = without_quote.bytes().rev().take_while(|&b| b == b'\\').count();
    trailing % 2 == 1
}

fn unescape(body: &str) -> Result<String, String> {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('"') => out.push('"'),
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

pub fn format_term(node: &NodeId) -> String {
    match node.kind {
        NodeKind::Uri => node.id.clone(),
        NodeKind::Blank => format!("_:{}", node.id),
        NodeKind::Literal => {
            let mut s = String::with_capacity(node.id.len() + 2);
            s.push('"');
            for c in node.id.chars() {
                match c {
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    '\t' => s.push_str("\\t"),
                    '\n' => s.push_str("\\n"),
                    c => s.push(c),
                }
            }
            s.push('"');
            s
        }
    }
}

/// Parses one non-comment line.
pub fn parse_line(line: &str) -> Result<Triple, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(format!("expected 3 tab-separated fields, found {}", fields.len()));
    }
    let subject = parse_term(fields[0])?;
    let predicate = parse_term(fields[1])?;
    let mut object = parse_term(fields[2])?;
    if predicate.is_attribute_predicate() && object.kind == NodeKind::Uri {
        object = NodeId::literal(object.id);
    }
    let triple = Triple::new(subject, predicate, object);
    triple.validate()?;
    Ok(triple)
}

/// True for lines that carry no triple (blank or `#` comments).
pub fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

pub fn write_triples<'a, W: Write>(
    mut out: W,
    triples: impl IntoIterator<Item = &'a Triple>,
) -> io::Result<()> {
    for t in triples {
        writeln!(out, "{t}")?;
    }
    Ok(())
}
