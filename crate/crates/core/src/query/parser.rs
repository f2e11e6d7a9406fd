//! Recursive-descent parser for all statement families.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;
use crate::graph::NodeId;
use crate::path::PathRegex;

/// Parses exactly one statement. A trailing `;` is allowed.
pub fn parse(text: &str) -> Result<Statement, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { text, tokens, pos: 0 };
    let stmt = p.statement()?;
    p.eat(&Tok::Semicolon);
    p.expect_eof()?;
    Ok(stmt)
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

fn is_kw(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn current(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let t = self.current();
        SyntaxError::at(self.text, t.offset, expected, &t.tok.to_string())
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if is_kw(self.peek(), kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, SyntaxError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&[what]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn expect_eof(&self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of statement"]))
        }
    }

    /// Identifier or quoted string.
    fn name(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(w) | Tok::Str(w) if !w.is_empty() => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn statement(&mut self) -> Result<Statement, SyntaxError> {
        let start = self.current().offset;
        let kind = match self.peek().clone() {
            t if is_kw(&t, "entity") => {
                self.bump();
                StatementKind::Entity(self.entity()?)
            }
            t if is_kw(&t, "correlation") => {
                self.bump();
                StatementKind::Correlation(self.correlation()?)
            }
            t if is_kw(&t, "relationship") => {
                self.bump();
                StatementKind::Relationship(self.relationship()?)
            }
            t if is_kw(&t, "metadata") => {
                self.bump();
                StatementKind::Metadata(self.metadata()?)
            }
            Tok::Ident(w) if MetadataMode::from_keyword(&w).is_some() => {
                StatementKind::Metadata(self.metadata()?)
            }
            t if is_kw(&t, "select") => {
                self.bump();
                StatementKind::Select(self.select()?)
            }
            _ => {
                return Err(self.error(&[
                    "entity",
                    "correlation",
                    "relationship",
                    "metadata",
                    "select",
                ]))
            }
        };
        let end = self.tokens[self.pos.saturating_sub(1)].end();
        Ok(Statement {
            kind,
            span: Span {
                offset: start,
                len: end.saturating_sub(start),
            },
        })
    }

    // ---- entity ----

    fn entity(&mut self) -> Result<EntityStmt, SyntaxError> {
        let entity_type = self.name("an entity type")?;
        let filter = if matches!(self.peek(), Tok::Eof | Tok::Semicolon) {
            None
        } else {
            Some(self.attr_or()?)
        };
        Ok(EntityStmt { entity_type, filter })
    }

    fn attr_or(&mut self) -> Result<AttrExpr, SyntaxError> {
        let mut left = self.attr_and()?;
        while self.eat_kw("or") || self.eat(&Tok::OrOr) {
            let right = self.attr_and()?;
            left = AttrExpr::or(left, right);
        }
        Ok(left)
    }

    fn attr_and(&mut self) -> Result<AttrExpr, SyntaxError> {
        let mut left = self.attr_unary()?;
        while self.eat_kw("and") || self.eat(&Tok::AndAnd) {
            let right = self.attr_unary()?;
            left = AttrExpr::and(left, right);
        }
        Ok(left)
    }

    fn attr_unary(&mut self) -> Result<AttrExpr, SyntaxError> {
        if self.eat_kw("not") || self.eat(&Tok::Bang) {
            return Ok(AttrExpr::Not(Box::new(self.attr_unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let inner = self.attr_or()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(inner);
        }
        let attr = match self.peek().clone() {
            Tok::Attr(a) => {
                self.bump();
                a
            }
            _ => return Err(self.error(&["\\attribute", "'('", "NOT"])),
        };
        let op = match self.peek() {
            Tok::Cmp(op) => {
                let op = *op;
                self.bump();
                op
            }
            _ => return Err(self.error(&["a comparison operator"])),
        };
        let value = self.value()?;
        Ok(AttrExpr::Cmp { attr, op, value })
    }

    /// Quoted value; bare words and numbers are accepted too.
    fn value(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(w) if !["and", "or", "not"].iter().any(|k| w.eq_ignore_ascii_case(k)) => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.error(&["a quoted value"])),
        }
    }

    // ---- correlation ----

    fn correlation(&mut self) -> Result<CorrelationStmt, SyntaxError> {
        let at = self.current().offset;
        let first = self.name("a correlation condition")?;
        let condition = if matches!(self.peek(), Tok::Cmp(CmpOp::Eq)) {
            self.bump();
            let (left_var, left_attr) = split_qualified(&first)
                .ok_or_else(|| SyntaxError::at(self.text, at, &["x.attribute"], &format!("'{first}'")))?;
            let rat = self.current().offset;
            let second = self.name("y.attribute")?;
            let (right_var, right_attr) = split_qualified(&second)
                .ok_or_else(|| SyntaxError::at(self.text, rat, &["y.attribute"], &format!("'{second}'")))?;
            CorrelationSpec::AttrEq {
                left_var,
                left_attr,
                right_var,
                right_attr,
            }
        } else {
            CorrelationSpec::Registered(first)
        };
        let mut stmt = CorrelationStmt {
            condition,
            scope: None,
            into: None,
            timed: false,
        };
        loop {
            if self.eat_kw("within") {
                stmt.scope = Some(self.name("an entity type")?);
            } else if self.eat_kw("into") {
                self.eat_kw("folder");
                stmt.into = Some(self.name("a folder name")?);
            } else if self.eat_kw("timed") {
                stmt.timed = true;
            } else {
                break;
            }
        }
        Ok(stmt)
    }

    // ---- relationship ----

    fn relationship(&mut self) -> Result<RelationshipStmt, SyntaxError> {
        let first = self.pos;
        let mut depth = 0usize;
        while !matches!(self.peek(), Tok::Eof | Tok::Semicolon) {
            match self.peek() {
                Tok::LParen => depth += 1,
                Tok::RParen => depth = depth.saturating_sub(1),
                t if depth == 0 && (is_kw(t, "into") || is_kw(t, "timed")) => break,
                _ => {}
            }
            self.bump();
        }
        if self.pos == first {
            return Err(self.error(&["a regular expression"]));
        }
        let start = self.tokens[first].offset;
        let end = self.tokens[self.pos - 1].end();
        let source = &self.text[start..end];
        let regex = PathRegex::compile(source).map_err(|e| SyntaxError {
            message: Some(e.message.clone()),
            ..SyntaxError::at(self.text, start + e.position, &["a valid regular expression"], "")
        })?;
        let mut stmt = RelationshipStmt {
            regex,
            target: None,
            timed: false,
        };
        loop {
            if self.eat_kw("into") {
                let folder = self.eat_kw("folder");
                if !folder {
                    self.eat_kw("path");
                }
                let name = self.name("a target name")?;
                stmt.target = Some(if folder {
                    RelationshipTarget::Folder(name)
                } else {
                    RelationshipTarget::PathNode(name)
                });
            } else if self.eat_kw("timed") {
                stmt.timed = true;
            } else {
                break;
            }
        }
        Ok(stmt)
    }

    // ---- metadata ----

    fn metadata(&mut self) -> Result<MetadataStmt, SyntaxError> {
        let mode = match self.peek() {
            Tok::Ident(w) => MetadataMode::from_keyword(w),
            _ => None,
        }
        .ok_or_else(|| self.error(&["evolutionOf", "derivationOf", "timeseriesOf"]))?;
        self.bump();
        let target = self.name("an artifact or actor name")?;
        let mut filters = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Attr(key) => {
                    self.bump();
                    filters.push(self.meta_filter_rest(key)?);
                    self.eat_kw("and");
                    self.eat(&Tok::Comma);
                }
                t if is_kw(&t, "filter") => {
                    self.bump();
                    let bracketed = self.eat(&Tok::LBracket);
                    loop {
                        let key = match self.peek().clone() {
                            Tok::Attr(k) | Tok::Ident(k) => {
                                self.bump();
                                k
                            }
                            _ => return Err(self.error(&["a filter key"])),
                        };
                        filters.push(self.meta_filter_rest(key)?);
                        if !(self.eat(&Tok::Comma) || self.eat_kw("and")) {
                            break;
                        }
                    }
                    if bracketed {
                        self.expect(Tok::RBracket, "']'")?;
                    }
                }
                _ => break,
            }
        }
        Ok(MetadataStmt {
            mode,
            target,
            filters,
        })
    }

    fn meta_filter_rest(&mut self, key: String) -> Result<MetaFilter, SyntaxError> {
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return Err(self.error(&["a comparison operator"])),
        };
        self.bump();
        let value = self.value()?;
        Ok(MetaFilter { key, op, value })
    }

    // ---- select ----

    fn select(&mut self) -> Result<SelectStmt, SyntaxError> {
        self.eat_kw("distinct");
        let mut projection = Vec::new();
        let mut star = false;
        let mut var_offsets = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Var(v) => {
                    var_offsets.push(self.current().offset);
                    self.bump();
                    projection.push(v);
                }
                Tok::Star if projection.is_empty() && !star => {
                    self.bump();
                    star = true;
                }
                _ => break,
            }
        }
        if projection.is_empty() && !star {
            return Err(self.error(&["a variable", "'*'"]));
        }
        self.expect_kw("where")?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Dot => {
                    self.bump();
                }
                t if is_kw(&t, "filter") => {
                    self.bump();
                    self.expect(Tok::LParen, "'('")?;
                    filters.push((self.current().offset, self.filter_or()?));
                    self.expect(Tok::RParen, "')'")?;
                }
                _ => {
                    patterns.push(self.pattern()?);
                    if !matches!(self.peek(), Tok::Dot | Tok::RBrace) && !is_kw(self.peek(), "filter") {
                        return Err(self.error(&["'.'", "'}'"]));
                    }
                }
            }
        }
        if patterns.is_empty() {
            return Err(self.error(&["at least one triple pattern"]));
        }
        let mut stmt = SelectStmt {
            projection,
            patterns,
            filter: None,
        };
        let bound: Vec<String> = stmt.pattern_vars().into_iter().map(String::from).collect();
        if star {
            stmt.projection = bound.clone();
        }
        for (v, off) in stmt.projection.iter().zip(&var_offsets) {
            if !bound.contains(v) {
                return Err(SyntaxError::at(
                    self.text,
                    *off,
                    &["a variable used in the where clause"],
                    &format!("'?{v}'"),
                ));
            }
        }
        for (off, f) in &filters {
            if let Some(v) = f.vars().into_iter().find(|v| !bound.iter().any(|b| b == v)) {
                return Err(SyntaxError::at(
                    self.text,
                    *off,
                    &["a variable used in the where clause"],
                    &format!("'?{v}'"),
                ));
            }
        }
        stmt.filter = FilterExpr::conjoin(filters.into_iter().map(|(_, f)| f).collect());
        Ok(stmt)
    }

    fn pattern(&mut self) -> Result<TriplePattern, SyntaxError> {
        let subject = match self.peek().clone() {
            Tok::Var(v) => PatternTerm::Var(v),
            Tok::Ident(w) | Tok::Str(w) => PatternTerm::Node(subject_node(&w)),
            _ => return Err(self.error(&["a variable or node"])),
        };
        self.bump();
        let predicate = match self.peek().clone() {
            Tok::Var(v) => PatternTerm::Var(v),
            Tok::At(a) => PatternTerm::Node(NodeId::uri(format!("@{a}"))),
            Tok::Ident(w) | Tok::Str(w) => PatternTerm::Node(NodeId::uri(w)),
            _ => return Err(self.error(&["a predicate"])),
        };
        self.bump();
        let is_attr = matches!(&predicate, PatternTerm::Node(n) if n.is_attribute_predicate());
        let object = match self.peek().clone() {
            Tok::Var(v) => PatternTerm::Var(v),
            Tok::Str(w) if is_attr || matches!(predicate, PatternTerm::Var(_)) => {
                PatternTerm::Node(NodeId::literal(w))
            }
            Tok::Ident(w) if is_attr => PatternTerm::Node(NodeId::literal(w)),
            Tok::Ident(w) | Tok::Str(w) => PatternTerm::Node(subject_node(&w)),
            _ => return Err(self.error(&["a variable, node or value"])),
        };
        self.bump();
        Ok(TriplePattern {
            subject,
            predicate,
            object,
        })
    }

    fn filter_or(&mut self) -> Result<FilterExpr, SyntaxError> {
        let mut left = self.filter_and()?;
        while self.eat(&Tok::OrOr) || self.eat_kw("or") {
            let right = self.filter_and()?;
            left = FilterExpr::or(left, right);
        }
        Ok(left)
    }

    fn filter_and(&mut self) -> Result<FilterExpr, SyntaxError> {
        let mut left = self.filter_unary()?;
        while self.eat(&Tok::AndAnd) || self.eat_kw("and") {
            let right = self.filter_unary()?;
            left = FilterExpr::and(left, right);
        }
        Ok(left)
    }

    fn filter_unary(&mut self) -> Result<FilterExpr, SyntaxError> {
        if self.eat(&Tok::Bang) || self.eat_kw("not") {
            return Ok(FilterExpr::Not(Box::new(self.filter_unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let inner = self.filter_or()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(inner);
        }
        let left = self.operand()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            _ => return Err(self.error(&["a comparison operator"])),
        };
        self.bump();
        let right = self.operand()?;
        Ok(FilterExpr::Cmp(left, op, right))
    }

    fn operand(&mut self) -> Result<Operand, SyntaxError> {
        let op = match self.peek().clone() {
            Tok::Var(v) => Operand::Var(v),
            Tok::Str(s) => Operand::Value(s),
            // unquoted numbers such as 15 or 2.5
            Tok::Ident(w) if !["and", "or", "not"].iter().any(|k| w.eq_ignore_ascii_case(k)) => {
                Operand::Value(w)
            }
            _ => return Err(self.error(&["a variable or value"])),
        };
        self.bump();
        Ok(op)
    }
}

fn subject_node(w: &str) -> NodeId {
    match w.strip_prefix("_:") {
        Some(b) if !b.is_empty() => NodeId::blank(b),
        _ => NodeId::uri(w),
    }
}

fn split_qualified(s: &str) -> Option<(String, String)> {
    let (var, attr) = s.split_once('.')?;
    let attr = attr.strip_prefix('@').unwrap_or(attr);
    (!var.is_empty() && !attr.is_empty()).then(|| (var.to_string(), attr.to_string()))
}
