//! Statement syntax trees and their canonical printer.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, NodeKind};
use crate::path::PathRegex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// Applies the operator to two literal values using the engine's
    /// value ordering (numeric, then instant, then lexicographic).
    pub fn holds(self, left: &str, right: &str) -> bool {
        use crate::graph::{compare_values, values_equal};
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => values_equal(left, right),
            CmpOp::Ne => !values_equal(left, right),
            CmpOp::Lt => compare_values(left, right) == Less,
            CmpOp::Le => compare_values(left, right) != Greater,
            CmpOp::Gt => compare_values(left, right) == Greater,
            CmpOp::Ge => compare_values(left, right) != Less,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Byte range of a statement in its source text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub kind: StatementKind,
    pub span: Span,
}

/// Statements compare by structure; spans are ignored.
impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Statement {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementKind {
    Entity(EntityStmt),
    Correlation(CorrelationStmt),
    Relationship(RelationshipStmt),
    Metadata(MetadataStmt),
    Select(SelectStmt),
}

impl StatementKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            StatementKind::Entity(_) => "entity",
            StatementKind::Correlation(_) => "correlation",
            StatementKind::Relationship(_) => "relationship",
            StatementKind::Metadata(_) => "metadata",
            StatementKind::Select(_) => "select",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityStmt {
    pub entity_type: String,
    pub filter: Option<AttrExpr>,
}

/// Boolean filter over entity attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrExpr {
    Cmp { attr: String, op: CmpOp, value: String },
    And(Box<AttrExpr>, Box<AttrExpr>),
    Or(Box<AttrExpr>, Box<AttrExpr>),
    Not(Box<AttrExpr>),
}

impl AttrExpr {
    pub fn cmp(attr: &str, op: CmpOp, value: &str) -> Self {
        AttrExpr::Cmp {
            attr: attr.into(),
            op,
            value: value.into(),
        }
    }

    pub fn and(a: AttrExpr, b: AttrExpr) -> Self {
        AttrExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: AttrExpr, b: AttrExpr) -> Self {
        AttrExpr::Or(Box::new(a), Box::new(b))
    }

    /// Attribute names in order of first appearance.
    pub fn attributes(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a AttrExpr, out: &mut Vec<&'a str>) {
            match e {
                AttrExpr::Cmp { attr, .. } => {
                    if !out.contains(&attr.as_str()) {
                        out.push(attr);
                    }
                }
                AttrExpr::And(a, b) | AttrExpr::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                AttrExpr::Not(a) => walk(a, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self {
            AttrExpr::Or(..) => 1,
            AttrExpr::And(..) => 2,
            AttrExpr::Not(_) | AttrExpr::Cmp { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorrelationSpec {
    /// `x.A = y.B`
    AttrEq {
        left_var: String,
        left_attr: String,
        right_var: String,
        right_attr: String,
    },
    /// A predicate registered by name.
    Registered(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationStmt {
    pub condition: CorrelationSpec,
    /// Restricts partitioning to entities of this type.
    pub scope: Option<String>,
    pub into: Option<String>,
    pub timed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationshipTarget {
    PathNode(String),
    /// Path condition: the end nodes are stored in a folder.
    Folder(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipStmt {
    pub regex: PathRegex,
    pub target: Option<RelationshipTarget>,
    pub timed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetadataMode {
    Evolution,
    Derivation,
    Timeseries,
}

impl MetadataMode {
    pub fn keyword(self) -> &'static str {
        match self {
            MetadataMode::Evolution => "evolutionOf",
            MetadataMode::Derivation => "derivationOf",
            MetadataMode::Timeseries => "timeseriesOf",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        [MetadataMode::Evolution, MetadataMode::Derivation, MetadataMode::Timeseries]
            .into_iter()
            .find(|m| m.keyword().eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaFilter {
    pub key: String,
    pub op: CmpOp,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataStmt {
    pub mode: MetadataMode,
    pub target: String,
    pub filters: Vec<MetaFilter>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Node(NodeId),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Node(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    /// Variables in subject, predicate, object order without repeats.
    pub fn vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for v in self.terms().into_iter().filter_map(PatternTerm::var) {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(String),
    Value(String),
}

/// Boolean filter over select variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FilterExpr {
    Cmp(Operand, CmpOp, Operand),
    And(Box<FilterExpr>, Box<FilterExpr>),
    Or(Box<FilterExpr>, Box<FilterExpr>),
    Not(Box<FilterExpr>),
}

impl FilterExpr {
    pub fn and(a: FilterExpr, b: FilterExpr) -> Self {
        FilterExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: FilterExpr, b: FilterExpr) -> Self {
        FilterExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn vars(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a FilterExpr, out: &mut Vec<&'a str>) {
            match e {
                FilterExpr::Cmp(a, _, b) => {
                    for o in [a, b] {
                        if let Operand::Var(v) = o {
                            if !out.contains(&v.as_str()) {
                                out.push(v);
                            }
                        }
                    }
                }
                FilterExpr::And(a, b) | FilterExpr::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                FilterExpr::Not(a) => walk(a, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&FilterExpr> {
        match self {
            FilterExpr::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// Rebuilds a left-nested conjunction; `None` for an empty list.
    pub fn conjoin(parts: Vec<FilterExpr>) -> Option<FilterExpr> {
        parts.into_iter().reduce(FilterExpr::and)
    }

    fn precedence(&self) -> u8 {
        match self {
            FilterExpr::Or(..) => 1,
            FilterExpr::And(..) => 2,
            FilterExpr::Not(_) | FilterExpr::Cmp(..) => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectStmt {
    /// Projected variable names without `?`.
    pub projection: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub filter: Option<FilterExpr>,
}

impl SelectStmt {
    /// Variables bound by the patterns, in first-appearance order.
    pub fn pattern_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.patterns {
            for v in p.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

// ---- printing ----

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
    out
}

const KEYWORDS: &[&str] = &[
    "entity", "correlation", "relationship", "metadata", "select", "where", "filter", "and", "or",
    "not", "into", "timed", "within", "folder", "path", "distinct",
];

fn is_plain_word(s: &str) -> bool {
    let mut chars = s.chars();
    let first_ok = chars
        .next()
        .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '/'));
    first_ok
        && s.chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '/' | '#'))
        && !KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(s))
        && MetadataMode::from_keyword(s).is_none()
}

/// A name printed bare when it lexes back as one word, else quoted.
pub(crate) fn word(s: &str) -> String {
    if is_plain_word(s) {
        s.to_string()
    } else {
        quote(s)
    }
}

impl fmt::Display for AttrExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, e: &AttrExpr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            AttrExpr::Cmp { attr, op, value } => write!(f, "\\{attr}{op}{}", quote(value)),
            AttrExpr::And(a, b) => {
                child(f, a, 2)?;
                f.write_str(" AND ")?;
                child(f, b, 3)
            }
            AttrExpr::Or(a, b) => {
                child(f, a, 1)?;
                f.write_str(" OR ")?;
                child(f, b, 2)
            }
            AttrExpr::Not(a) => {
                f.write_str("NOT ")?;
                child(f, a, 3)
            }
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => write!(f, "?{v}"),
            Operand::Value(v) => f.write_str(&quote(v)),
        }
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, e: &FilterExpr, min: u8| {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            FilterExpr::Cmp(a, op, b) => write!(f, "{a} {op} {b}"),
            FilterExpr::And(a, b) => {
                child(f, a, 2)?;
                f.write_str(" && ")?;
                child(f, b, 3)
            }
            FilterExpr::Or(a, b) => {
                child(f, a, 1)?;
                f.write_str(" || ")?;
                child(f, b, 2)
            }
            FilterExpr::Not(a) => {
                f.write_str("!")?;
                match **a {
                    FilterExpr::Cmp(..) => write!(f, "({a})"),
                    _ => child(f, a, 3),
                }
            }
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Node(n) => match n.kind {
                NodeKind::Literal => f.write_str(&quote(&n.id)),
                NodeKind::Blank => write!(f, "_:{}", n.id),
                NodeKind::Uri if n.is_attribute_predicate() && is_plain_word(&n.id[1..]) => {
                    f.write_str(&n.id)
                }
                NodeKind::Uri => f.write_str(&word(&n.id)),
            },
        }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for SelectStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("select")?;
        for v in &self.projection {
            write!(f, " ?{v}")?;
        }
        f.write_str("\nwhere {\n")?;
        for p in &self.patterns {
            writeln!(f, "  {p}.")?;
        }
        if let Some(filter) = &self.filter {
            writeln!(f, "  FILTER ({filter})")?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatementKind::Entity(e) => {
                write!(f, "entity {}", word(&e.entity_type))?;
                if let Some(filter) = &e.filter {
                    write!(f, " {filter}")?;
                }
                Ok(())
            }
            StatementKind::Correlation(c) => {
                f.write_str("correlation ")?;
                match &c.condition {
                    CorrelationSpec::AttrEq {
                        left_var,
                        left_attr,
                        right_var,
                        right_attr,
                    } => write!(f, "{left_var}.{left_attr} = {right_var}.{right_attr}")?,
                    CorrelationSpec::Registered(name) => f.write_str(&word(name))?,
                }
                if let Some(scope) = &c.scope {
                    write!(f, " within {}", word(scope))?;
                }
                if let Some(into) = &c.into {
                    write!(f, " into {}", word(into))?;
                }
                if c.timed {
                    f.write_str(" timed")?;
                }
                Ok(())
            }
            StatementKind::Relationship(r) => {
                write!(f, "relationship {}", r.regex)?;
                match &r.target {
                    Some(RelationshipTarget::PathNode(name)) => write!(f, " into {}", word(name))?,
                    Some(RelationshipTarget::Folder(name)) => write!(f, " into folder {}", word(name))?,
                    None => {}
                }
                if r.timed {
                    f.write_str(" timed")?;
                }
                Ok(())
            }
            StatementKind::Metadata(m) => {
                write!(f, "metadata {} {}", m.mode.keyword(), word(&m.target))?;
                for filter in &m.filters {
                    write!(f, " \\{}{}{}", filter.key, filter.op, quote(&filter.value))?;
                }
                Ok(())
            }
            StatementKind::Select(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}
