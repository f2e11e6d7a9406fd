//! Path regular expressions over alternating node and edge tokens.
//!
//! A path reads `node edge node edge ... node`. Tokens are node ids,
//! predicates, the wildcards `node` and `edge`, quoted exact ids and
//! `@type=T` type tests. A bare word takes its role from its position:
//! in `Adam (edge node)* assigned-to Staff`, `Adam` and `Staff` sit in node
//! positions and `assigned-to` in an edge position. Groups, alternation and
//! the quantifiers `*`, `+`, `?` are supported; every alternative must
//! advance the position by the same parity and every quantified group must
//! span whole `edge node` steps so positions stay well defined.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("regex error at offset {position}: {message}")]
pub struct RegexError {
    pub position: usize,
    pub message: String,
}

impl RegexError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        Self {
            position,
            message: message.into(),
        }
    }
}

/// Test applied to a node position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeTest {
    /// `node`
    Any,
    /// Bare word: matches a node with this id, or whose `@type` equals it
    /// ignoring ASCII case (`Artifact`, `STAFF`).
    Named(String),
    /// Quoted word: matches the node id exactly.
    Exact(String),
    /// `@type=T`: matches nodes whose `@type` is exactly `T`.
    Type(String),
}

/// Test applied to an edge position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EdgeTest {
    /// `edge`
    Any,
    Predicate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Star,
    Plus,
    Optional,
}

impl Quantifier {
    fn symbol(self) -> char {
        match self {
            Quantifier::Star => '*',
            Quantifier::Plus => '+',
            Quantifier::Optional => '?',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RegexExpr {
    Node(NodeTest),
    Edge(EdgeTest),
    Concat(Vec<RegexExpr>),
    Alt(Vec<RegexExpr>),
    Repeat(Box<RegexExpr>, Quantifier),
}

impl RegexExpr {
    pub fn depth(&self) -> usize {
        match self {
            RegexExpr::Node(_) | RegexExpr::Edge(_) => 0,
            RegexExpr::Concat(items) => items.iter().map(Self::depth).max().unwrap_or(0),
            RegexExpr::Alt(items) => 1 + items.iter().map(Self::depth).max().unwrap_or(0),
            RegexExpr::Repeat(inner, _) => 1 + inner.depth(),
        }
    }
}

fn word_needs_quotes(w: &str) -> bool {
    w.is_empty()
        || w == "node"
        || w == "edge"
        || w.starts_with('@')
        || w.starts_with(['"', '\''])
        || w.chars().any(|c| c.is_whitespace() || "()|*+?'\"".contains(c))
}

fn write_word(f: &mut fmt::Formatter<'_>, w: &str) -> fmt::Result {
    if word_needs_quotes(w) {
        write!(f, "'{}'", w.replace('\\', "\\\\").replace('\'', "\\'"))
    } else {
        f.write_str(w)
    }
}

impl fmt::Display for RegexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegexExpr::Node(NodeTest::Any) => f.write_str("node"),
            RegexExpr::Node(NodeTest::Named(w)) => write_word(f, w),
            RegexExpr::Node(NodeTest::Exact(w)) => {
                write!(f, "'{}'", w.replace('\\', "\\\\").replace('\'', "\\'"))
            }
            RegexExpr::Node(NodeTest::Type(t)) => {
                f.write_str("@type=")?;
                write_word(f, t)
            }
            RegexExpr::Edge(EdgeTest::Any) => f.write_str("edge"),
            RegexExpr::Edge(EdgeTest::Predicate(p)) => write_word(f, p),
            RegexExpr::Concat(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    match item {
                        RegexExpr::Alt(_) => write!(f, "({item})")?,
                        _ => write!(f, "{item}")?,
                    }
                }
                Ok(())
            }
            RegexExpr::Alt(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match item {
                        RegexExpr::Alt(_) => write!(f, "({item})")?,
                        _ => write!(f, "{item}")?,
                    }
                }
                Ok(())
            }
            RegexExpr::Repeat(inner, q) => write!(f, "({inner}){}", q.symbol()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Bar,
    Quant(Quantifier),
    Word(String),
    Quoted(String),
    Type(String),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, RegexError> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push((pos, Tok::Open));
                i += 1;
            }
            ')' => {
                out.push((pos, Tok::Close));
                i += 1;
            }
            '|' => {
                out.push((pos, Tok::Bar));
                i += 1;
            }
            '*' | '+' | '?' => {
                let q = match c {
                    '*' => Quantifier::Star,
                    '+' => Quantifier::Plus,
                    _ => Quantifier::Optional,
                };
                out.push((pos, Tok::Quant(q)));
                i += 1;
            }
            '\'' | '"' => {
                let (text, next) = read_quoted(&bytes, i)?;
                out.push((pos, Tok::Quoted(text)));
                i = next;
            }
            _ => {
                let start = i;
                while i < bytes.len() && !is_delim(bytes[i].1) {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().map(|&(_, c)| c).collect();
                if let Some(rest) = word.strip_prefix("@type=") {
                    let value = if rest.is_empty() && i < bytes.len() && matches!(bytes[i].1, '\'' | '"') {
                        let (text, next) = read_quoted(&bytes, i)?;
                        i = next;
                        text
                    } else {
                        rest.to_string()
                    };
                    if value.is_empty() {
                        return Err(RegexError::new(pos, "@type= needs a value"));
                    }
                    out.push((pos, Tok::Type(value)));
                } else {
                    out.push((pos, Tok::Word(word)));
                }
            }
        }
    }
    Ok(out)
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || "()|*+?'\"".contains(c)
}

fn read_quoted(chars: &[(usize, char)], start: usize) -> Result<(String, usize), RegexError> {
    let (pos, quote) = chars[start];
    let mut text = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i].1 {
            '\\' if i + 1 < chars.len() => {
                text.push(chars[i + 1].1);
                i += 2;
            }
            c if c == quote => return Ok((text, i + 1)),
            c => {
                text.push(c);
                i += 1;
            }
        }
    }
    Err(RegexError::new(pos, "unterminated quoted token"))
}

/// Untyped parse tree; positions are assigned afterwards.
#[derive(Debug, Clone)]
enum Raw {
    Word(usize, String),
    Quoted(usize, String),
    Type(usize, String),
    Concat(Vec<Raw>),
    Alt(usize, Vec<Raw>),
    Repeat(usize, Box<Raw>, Quantifier),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn alt(&mut self) -> Result<Raw, RegexError> {
        let start = self.offset();
        let mut branches = vec![self.concat()?];
        while self.peek() == Some(&Tok::Bar) {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().unwrap()
        } else {
            Raw::Alt(start, branches)
        })
    }

    fn concat(&mut self) -> Result<Raw, RegexError> {
        let mut items = Vec::new();
        while let Some(tok) = self.peek() {
            if matches!(tok, Tok::Bar | Tok::Close) {
                break;
            }
            items.push(self.postfix()?);
        }
        if items.is_empty() {
            return Err(RegexError::new(self.offset(), "expected a token or group"));
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Raw::Concat(items)
        })
    }

    fn postfix(&mut self) -> Result<Raw, RegexError> {
        let start = self.offset();
        let mut atom = self.atom()?;
        while let Some(Tok::Quant(q)) = self.peek() {
            let q = *q;
            self.pos += 1;
            atom = Raw::Repeat(start, Box::new(atom), q);
        }
        Ok(atom)
    }

    fn atom(&mut self) -> Result<Raw, RegexError> {
        let Some((offset, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(RegexError::new(self.end, "unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Open => {
                let inner = self.alt()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(RegexError::new(offset, "unclosed group"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Word(w) => Ok(Raw::Word(offset, w)),
            Tok::Quoted(w) => Ok(Raw::Quoted(offset, w)),
            Tok::Type(t) => Ok(Raw::Type(offset, t)),
            Tok::Close => Err(RegexError::new(offset, "unbalanced ')'")),
            Tok::Bar => Err(RegexError::new(offset, "empty alternative")),
            Tok::Quant(q) => Err(RegexError::new(
                offset,
                format!("'{}' has nothing to repeat", q.symbol()),
            )),
        }
    }
}

/// Assigns node/edge roles. `parity` 0 is a node position, 1 an edge
/// position. Returns the typed expression and its length parity.
fn assign(raw: Raw, parity: u8) -> Result<(RegexExpr, u8), RegexError> {
    match raw {
        Raw::Word(pos, w) => {
            let expr = match (parity, w.as_str()) {
                (0, "node") => RegexExpr::Node(NodeTest::Any),
                (0, "edge") => {
                    return Err(RegexError::new(pos, "'edge' appears where a node is expected"))
                }
                (0, _) => RegexExpr::Node(NodeTest::Named(w)),
                (_, "edge") => RegexExpr::Edge(EdgeTest::Any),
                (_, "node") => {
                    return Err(RegexError::new(pos, "'node' appears where an edge is expected"))
                }
                _ => RegexExpr::Edge(EdgeTest::Predicate(w)),
            };
            Ok((expr, 1))
        }
        Raw::Quoted(_, w) => Ok((
            if parity == 0 {
                RegexExpr::Node(NodeTest::Exact(w))
            } else {
                RegexExpr::Edge(EdgeTest::Predicate(w))
            },
            1,
        )),
        Raw::Type(pos, t) => {
            if parity != 0 {
                return Err(RegexError::new(pos, "type test appears where an edge is expected"));
            }
            Ok((RegexExpr::Node(NodeTest::Type(t)), 1))
        }
        Raw::Concat(items) => {
            let mut out = Vec::with_capacity(items.len());
            let mut len = 0u8;
            for item in items {
                let (expr, l) = assign(item, (parity + len) % 2)?;
                len = (len + l) % 2;
                match expr {
                    RegexExpr::Concat(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            Ok((RegexExpr::Concat(out), len))
        }
        Raw::Alt(pos, branches) => {
            let mut out = Vec::with_capacity(branches.len());
            let mut len = None;
            for branch in branches {
                let (expr, l) = assign(branch, parity)?;
                if len.is_some_and(|prev| prev != l) {
                    return Err(RegexError::new(
                        pos,
                        "alternatives must all end on the same kind of position",
                    ));
                }
                len = Some(l);
                out.push(expr);
            }
            Ok((RegexExpr::Alt(out), len.unwrap_or(0)))
        }
        Raw::Repeat(pos, inner, q) => {
            let (expr, l) = assign(*inner, parity)?;
            if l != 0 {
                return Err(RegexError::new(
                    pos,
                    "a repeated group must cover whole steps, e.g. (edge node)*",
                ));
            }
            Ok((RegexExpr::Repeat(Box::new(expr), q), 0))
        }
    }
}

// `X (edge node)* Y` leaves `Y` in an edge position. A trailing bare token
// there is read as the end node, reached over one more edge of any kind.
fn implicit_edge(raw: &Raw) -> bool {
    match raw {
        Raw::Concat(items) => match items.last() {
            Some(Raw::Word(_, w)) => w != "edge" && w != "node",
            Some(Raw::Quoted(..)) => true,
            _ => false,
        },
        _ => false,
    }
}

fn with_implicit_edge(raw: Raw) -> Raw {
    let Raw::Concat(mut items) = raw else {
        return raw;
    };
    let last = items.pop().expect("checked non-empty");
    let pos = match &last {
        Raw::Word(p, _) | Raw::Quoted(p, _) => *p,
        _ => 0,
    };
    items.push(Raw::Word(pos, "edge".into()));
    items.push(last);
    Raw::Concat(items)
}

/// Compiled path expression: the typed tree plus its Thompson automaton.
#[derive(Debug, Clone)]
pub struct PathRegex {
    source: String,
    expr: RegexExpr,
    pub(crate) nfa: Nfa,
}

impl PartialEq for PathRegex {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

impl Eq for PathRegex {}

impl PathRegex {
    pub fn compile(source: &str) -> Result<Self, RegexError> {
        let toks = tokenize(source)?;
        let mut parser = Parser {
            toks,
            pos: 0,
            end: source.len(),
        };
        let raw = parser.alt()?;
        if let Some((offset, _)) = parser.toks.get(parser.pos) {
            return Err(RegexError::new(*offset, "unbalanced ')'"));
        }
        let (expr, len) = match assign(raw.clone(), 0)? {
            (_, 0) if implicit_edge(&raw) => assign(with_implicit_edge(raw), 0)?,
            typed => typed,
        };
        if len != 1 {
            return Err(RegexError::new(
                source.len(),
                "expression must end with a node token",
            ));
        }
        let expr = match expr {
            RegexExpr::Concat(mut items) if items.len() == 1 => items.pop().unwrap(),
            other => other,
        };
        let nfa = Nfa::build(&expr);
        Ok(Self {
            source: source.trim().to_string(),
            expr,
            nfa,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &RegexExpr {
        &self.expr
    }
}

impl fmt::Display for PathRegex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

impl std::str::FromStr for PathRegex {
    type Err = RegexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::compile(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Test {
    Node(NodeTest),
    Edge(EdgeTest),
}

/// Bit set over NFA states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct StateSet(Vec<u64>);

impl StateSet {
    pub(crate) fn empty(n: usize) -> Self {
        Self(vec![0; n.div_ceil(64).max(1)])
    }

    pub(crate) fn insert(&mut self, s: usize) {
        self.0[s / 64] |= 1 << (s % 64);
    }

    pub(crate) fn contains(&self, s: usize) -> bool {
        self.0[s / 64] & (1 << (s % 64)) != 0
    }

    pub(crate) fn union_with(&mut self, other: &StateSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w & (1 << b) != 0).map(move |b| wi * 64 + b)
        })
    }
}

#[derive(Debug, Clone, Default)]
struct NfaState {
    eps: Vec<usize>,
    moves: Vec<(usize, usize)>, // (test index, target)
}

/// Thompson automaton with epsilon closures precomputed per state.
#[derive(Debug, Clone)]
pub(crate) struct Nfa {
    states: Vec<NfaState>,
    pub(crate) tests: Vec<Test>,
    start: usize,
    accept: usize,
    closures: Vec<StateSet>,
}

impl Nfa {
    fn build(expr: &RegexExpr) -> Self {
        let mut nfa = Nfa {
            states: Vec::new(),
            tests: Vec::new(),
            start: 0,
            accept: 0,
            closures: Vec::new(),
        };
        let (start, accept) = nfa.fragment(expr);
        nfa.start = start;
        nfa.accept = accept;
        nfa.closures = (0..nfa.states.len()).map(|s| nfa.closure_of(s)).collect();
        nfa
    }

    fn add_state(&mut self) -> usize {
        self.states.push(NfaState::default());
        self.states.len() - 1
    }

    fn fragment(&mut self, expr: &RegexExpr) -> (usize, usize) {
        match expr {
            RegexExpr::Node(_) | RegexExpr::Edge(_) => {
                let test = match expr {
                    RegexExpr::Node(t) => Test::Node(t.clone()),
                    RegexExpr::Edge(t) => Test::Edge(t.clone()),
                    _ => unreachable!(),
                };
                let idx = match self.tests.iter().position(|t| *t == test) {
                    Some(i) => i,
                    None => {
                        self.tests.push(test);
                        self.tests.len() - 1
                    }
                };
                let a = self.add_state();
                let b = self.add_state();
                self.states[a].moves.push((idx, b));
                (a, b)
            }
            RegexExpr::Concat(items) => {
                let mut iter = items.iter();
                let first = iter.next().expect("concat is never empty");
                let (start, mut end) = self.fragment(first);
                for item in iter {
                    let (s, e) = self.fragment(item);
                    self.states[end].eps.push(s);
                    end = e;
                }
                (start, end)
            }
            RegexExpr::Alt(items) => {
                let a = self.add_state();
                let b = self.add_state();
                for item in items {
                    let (s, e) = self.fragment(item);
                    self.states[a].eps.push(s);
                    self.states[e].eps.push(b);
                }
                (a, b)
            }
            RegexExpr::Repeat(inner, q) => {
                let a = self.add_state();
                let b = self.add_state();
                let (s, e) = self.fragment(inner);
                self.states[a].eps.push(s);
                self.states[e].eps.push(b);
                if matches!(q, Quantifier::Star | Quantifier::Optional) {
                    self.states[a].eps.push(b);
                }
                if matches!(q, Quantifier::Star | Quantifier::Plus) {
                    self.states[e].eps.push(s);
                }
                (a, b)
            }
        }
    }

    fn closure_of(&self, s: usize) -> StateSet {
        let mut set = StateSet::empty(self.states.len());
        let mut stack = vec![s];
        set.insert(s);
        while let Some(x) = stack.pop() {
            for &y in &self.states[x].eps {
                if !set.contains(y) {
                    set.insert(y);
                    stack.push(y);
                }
            }
        }
        set
    }

    pub(crate) fn len(&self) -> usize {
        self.states.len()
    }

    pub(crate) fn initial(&self) -> StateSet {
        self.closures[self.start].clone()
    }

    pub(crate) fn is_accepting(&self, set: &StateSet) -> bool {
        set.contains(self.accept)
    }

    /// Tests leaving the states of `set`.
    pub(crate) fn outgoing_tests<'a>(&'a self, set: &'a StateSet) -> impl Iterator<Item = usize> + 'a {
        set.iter()
            .flat_map(move |s| self.states[s].moves.iter().map(|&(t, _)| t))
    }

    /// Consumes one symbol: `matches(test)` decides which moves fire.
    pub(crate) fn step(&self, set: &StateSet, mut matches: impl FnMut(usize) -> bool) -> StateSet {
        let mut next = StateSet::empty(self.len());
        for s in set.iter() {
            for &(t, target) in &self.states[s].moves {
                if matches(t) {
                    next.union_with(&self.closures[target]);
                }
            }
        }
        next
    }
}
