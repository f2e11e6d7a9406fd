use std::fmt;

use serde::{Deserialize, Serialize};

use super::term::{NodeId, NodeKind};

/// One `(subject, predicate, object)` edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    #[serde(rename = "s")]
    pub subject: NodeId,
    #[serde(rename = "p")]
    pub predicate: NodeId,
    #[serde(rename = "o")]
    pub object: NodeId,
}

impl Triple {
    pub fn new(subject: NodeId, predicate: NodeId, object: NodeId) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    /// Relationship edge between two URI nodes.
    pub fn link(subject: &str, predicate: &str, object: &str) -> Self {
        Self::new(
            NodeId::uri(subject),
            NodeId::uri(predicate),
            NodeId::uri(object),
        )
    }

    /// Attribute edge `subject @name "value"`. A leading `@` on `name` is optional.
    pub fn attr(subject: &str, name: &str, value: &str) -> Self {
        let name = name.strip_prefix('@').unwrap_or(name);
        Self::new(
            NodeId::uri(subject),
            NodeId::uri(format!("@{name}")),
            NodeId::literal(value),
        )
    }

    pub fn is_attribute(&self) -> bool {
        self.predicate.is_attribute_predicate()
    }

    /// Checks the structural invariants of a triple; returns the reason on failure.
    pub fn validate(&self) -> Result<(), String> {
        if self.subject.id.is_empty() || self.predicate.id.is_empty() || self.object.id.is_empty() && !self.object.is_literal() {
            return Err("empty term".into());
        }
        if self.subject.kind == NodeKind::Literal {
            return Err(format!("literal '{}' used as subject", self.subject.id));
        }
        if self.predicate.kind != NodeKind::Uri {
            return Err(format!("predicate '{}' is not a URI", self.predicate.id));
        }
        if self.predicate.id == "@" {
            return Err("attribute predicate without a name".into());
        }
        if self.is_attribute() {
            if self.object.kind != NodeKind::Literal {
                return Err(format!(
                    "attribute '{}' must have a literal object",
                    self.predicate.id
                ));
            }
        } else if self.object.kind == NodeKind::Literal {
            return Err(format!(
                "relationship '{}' points at a literal",
                self.predicate.id
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}",
            super::text::format_term(&self.subject),
            super::text::format_term(&self.predicate),
            super::text::format_term(&self.object)
        )
    }
}
