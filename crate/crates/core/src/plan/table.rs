//! Binding tables: the encoded rows flowing between operators and the
//! decoded result handed to callers.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::graph::{ErGraph, NodeId, TermId};

/// Encoded rows with one column per variable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Relation {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<TermId>>,
}

impl Relation {
    pub fn new(vars: Vec<String>) -> Self {
        Self {
            vars,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    /// Sort by full row and drop duplicates.
    pub fn normalize(&mut self) {
        self.rows.sort_unstable();
        self.rows.dedup();
    }

    pub fn decode(&self, g: &ErGraph) -> BindingTable {
        BindingTable {
            columns: self.vars.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&t| g.term(t).clone()).collect())
                .collect(),
        }
    }
}

/// Query result: variable names (without `?`) and distinct rows in term order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BindingTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<NodeId>>,
}

fn tsv_cell(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out
}

impl BindingTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<&NodeId>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Header line followed by one line per row.
    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|n| tsv_cell(n.as_str())).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, n)| (c.clone(), Value::String(n.as_str().to_string())))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_escapes_cells() {
        let t = BindingTable {
            columns: vec!["a".into(), "b".into()],
            rows: vec![vec![NodeId::uri("x"), NodeId::literal("p\tq")]],
        };
        assert_eq!(t.to_tsv(), "a\tb\nx\tp\\tq\n");
        assert_eq!(t.to_json().to_string(), r#"[{"a":"x","b":"p\tq"}]"#);
    }
}
