//! Rewriting of entity and metadata statements into core query forms.

use super::ast::*;
use super::QueryError;
use crate::graph::{vocab, NodeId};
use crate::metadata::MetadataRequest;

/// Filter keys accepted by metadata statements.
pub const METADATA_FILTER_KEYS: &[&str] = &vocab::ACTIVITY_KEYS;

/// `entity T filter` becomes a select over `?e` with one `@attr ?vN`
/// pattern per distinct attribute and the filter tree rewritten over the
/// `?vN`. Attribute patterns are mandatory joins, so an entity lacking an
/// attribute fails the whole statement even under OR.
pub fn translate_entity(stmt: &EntityStmt) -> SelectStmt {
    let subject = PatternTerm::Var("e".into());
    let mut patterns = vec![TriplePattern {
        subject: subject.clone(),
        predicate: PatternTerm::Node(NodeId::uri(vocab::TYPE)),
        object: PatternTerm::Node(NodeId::literal(stmt.entity_type.as_str())),
    }];
    let attrs: Vec<&str> = stmt.filter.as_ref().map(AttrExpr::attributes).unwrap_or_default();
    for (i, attr) in attrs.iter().enumerate() {
        patterns.push(TriplePattern {
            subject: subject.clone(),
            predicate: PatternTerm::Node(NodeId::uri(format!("@{attr}"))),
            object: PatternTerm::Var(format!("v{}", i + 1)),
        });
    }
    let var_of = |attr: &str| {
        let i = attrs.iter().position(|a| *a == attr).expect("attribute collected");
        format!("v{}", i + 1)
    };
    fn rewrite(e: &AttrExpr, var_of: &dyn Fn(&str) -> String) -> FilterExpr {
        match e {
            AttrExpr::Cmp { attr, op, value } => {
                FilterExpr::Cmp(Operand::Var(var_of(attr)), *op, Operand::Value(value.clone()))
            }
            AttrExpr::And(a, b) => FilterExpr::and(rewrite(a, var_of), rewrite(b, var_of)),
            AttrExpr::Or(a, b) => FilterExpr::or(rewrite(a, var_of), rewrite(b, var_of)),
            AttrExpr::Not(a) => FilterExpr::Not(Box::new(rewrite(a, var_of))),
        }
    }
    SelectStmt {
        projection: vec!["e".into()],
        patterns,
        filter: stmt.filter.as_ref().map(|f| rewrite(f, &var_of)),
    }
}

/// Validates filter keys and builds the metadata engine request.
pub fn translate_metadata(stmt: &MetadataStmt) -> Result<MetadataRequest, QueryError> {
    let mut filters = Vec::with_capacity(stmt.filters.len());
    for f in &stmt.filters {
        let key = f.key.to_ascii_lowercase();
        if !METADATA_FILTER_KEYS.contains(&key.as_str()) {
            return Err(QueryError::UnknownFilterKey(f.key.clone()));
        }
        filters.push(MetaFilter {
            key,
            op: f.op,
            value: f.value.clone(),
        });
    }
    Ok(MetadataRequest {
        mode: stmt.mode,
        target: NodeId::uri(stmt.target.as_str()),
        filters,
    })
}
