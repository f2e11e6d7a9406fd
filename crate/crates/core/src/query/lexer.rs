//! Tokenizer shared by all statement families.

use std::fmt;

use super::ast::CmpOp;
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Bare word: keywords, names, numbers, dates. May contain `-`, `_`,
    /// `:`, `/`, `#` and inner dots (`x.type`).
    Ident(String),
    /// `?name`
    Var(String),
    /// `\name` attribute filter.
    Attr(String),
    /// `@name` attribute predicate.
    At(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
    Comma,
    Semicolon,
    Star,
    Plus,
    Question,
    Bar,
    Cmp(CmpOp),
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Var(s) => write!(f, "'?{s}'"),
            Tok::Attr(s) => write!(f, "'\\{s}'"),
            Tok::At(s) => write!(f, "'@{s}'"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semicolon => f.write_str("';'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Question => f.write_str("'?'"),
            Tok::Bar => f.write_str("'|'"),
            Tok::Cmp(op) => write!(f, "'{op}'"),
            Tok::AndAnd => f.write_str("'&&'"),
            Tok::OrOr => f.write_str("'||'"),
            Tok::Bang => f.write_str("'!'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub offset: usize,
    pub len: usize,
}

impl Token {
    pub fn end(&self) -> usize {
        self.offset + self.len
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '/' | '#')
}

fn is_word_start(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '/')
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(o, _)| o);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (offset, c) = chars[i];
        let next = chars.get(i + 1).map(|&(_, c)| c);
        let simple = |tok: Tok, width: usize| Token {
            tok,
            offset,
            len: byte_at(i + width) - offset,
        };
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i].1 != '\n' {
                    i += 1;
                }
                continue;
            }
            '{' => out.push(simple(Tok::LBrace, 1)),
            '}' => out.push(simple(Tok::RBrace, 1)),
            '(' => out.push(simple(Tok::LParen, 1)),
            ')' => out.push(simple(Tok::RParen, 1)),
            '[' => out.push(simple(Tok::LBracket, 1)),
            ']' => out.push(simple(Tok::RBracket, 1)),
            '.' => out.push(simple(Tok::Dot, 1)),
            ',' => out.push(simple(Tok::Comma, 1)),
            ';' => out.push(simple(Tok::Semicolon, 1)),
            '*' => out.push(simple(Tok::Star, 1)),
            '+' => out.push(simple(Tok::Plus, 1)),
            '&' if next == Some('&') => {
                out.push(simple(Tok::AndAnd, 2));
                i += 2;
                continue;
            }
            '|' if next == Some('|') => {
                out.push(simple(Tok::OrOr, 2));
                i += 2;
                continue;
            }
            '|' => out.push(simple(Tok::Bar, 1)),
            '=' if next == Some('=') => {
                out.push(simple(Tok::Cmp(CmpOp::Eq), 2));
                i += 2;
                continue;
            }
            '=' => out.push(simple(Tok::Cmp(CmpOp::Eq), 1)),
            '!' if next == Some('=') => {
                out.push(simple(Tok::Cmp(CmpOp::Ne), 2));
                i += 2;
                continue;
            }
            '!' => out.push(simple(Tok::Bang, 1)),
            '<' | '>' => {
                let (op, width) = match (c, next) {
                    ('<', Some('=')) => (CmpOp::Le, 2),
                    ('>', Some('=')) => (CmpOp::Ge, 2),
                    ('<', _) => (CmpOp::Lt, 1),
                    _ => (CmpOp::Gt, 1),
                };
                out.push(simple(Tok::Cmp(op), width));
                i += width;
                continue;
            }
            '\'' | '"' | '`' => {
                let close = if c == '`' { '\'' } else { c };
                let mut value = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => {
                            return Err(SyntaxError::at(text, offset, &["closing quote"], "end of input"))
                        }
                        Some(&(_, '\\')) if j + 1 < chars.len() => {
                            value.push(chars[j + 1].1);
                            j += 2;
                        }
                        Some(&(_, ch)) if ch == close => break,
                        Some(&(_, ch)) => {
                            value.push(ch);
                            j += 1;
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(value),
                    offset,
                    len: byte_at(j + 1) - offset,
                });
                i = j + 1;
                continue;
            }
            '?' | '\\' | '@' if next.is_some_and(is_word_start) => {
                let (word, j) = read_word(&chars, i + 1);
                let tok = match c {
                    '?' => Tok::Var(word),
                    '\\' => Tok::Attr(word),
                    _ => Tok::At(word),
                };
                out.push(Token {
                    tok,
                    offset,
                    len: byte_at(j) - offset,
                });
                i = j;
                continue;
            }
            '?' => out.push(simple(Tok::Question, 1)),
            c if is_word_start(c) => {
                let (word, j) = read_word(&chars, i);
                out.push(Token {
                    tok: Tok::Ident(word),
                    offset,
                    len: byte_at(j) - offset,
                });
                i = j;
                continue;
            }
            other => {
                return Err(SyntaxError::at(
                    text,
                    offset,
                    &["a token"],
                    &format!("'{other}'"),
                ))
            }
        }
        i += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: text.len(),
        len: 0,
    });
    Ok(out)
}

// Dots join words only when followed by another word character, so
// `?x @p value.` still ends with a separate `.`.
fn read_word(chars: &[(usize, char)], start: usize) -> (String, usize) {
    let mut j = start;
    let mut word = String::new();
    while j < chars.len() {
        let c = chars[j].1;
        let joining_dot =
            c == '.' && !word.is_empty() && chars.get(j + 1).is_some_and(|&(_, n)| is_word_char(n));
        if is_word_char(c) || joining_dot {
            word.push(c);
            j += 1;
        } else {
            break;
        }
    }
    (word, j)
}

fn push_piece<'t>(text: &'t str, from: usize, to: usize, pieces: &mut Vec<(usize, &'t str)>) {
    let piece = &text[from..to];
    let meaningful = piece
        .lines()
        .any(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    if meaningful {
        let lead = piece.len() - piece.trim_start().len();
        pieces.push((from + lead, piece.trim()));
    }
}

/// Splits a script into statements at `;` or blank lines, ignoring
/// separators inside quotes, comments and braces. Returns byte offsets
/// with each non-empty piece.
pub fn split_statements(text: &str) -> Vec<(usize, &str)> {
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut quote: Option<char> = None;
    let mut depth = 0usize;
    let mut in_comment = false;
    let mut chars = text.char_indices().peekable();
    let mut line_has_content = false;
    while let Some((i, c)) = chars.next() {
        if in_comment {
            if c == '\n' {
                in_comment = false;
                line_has_content = false;
            }
            continue;
        }
        if let Some(q) = quote {
            if c == '\\' {
                chars.next();
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => {
                quote = Some(c);
                line_has_content = true;
            }
            '`' => {
                quote = Some('\'');
                line_has_content = true;
            }
            '#' => in_comment = true,
            '{' => {
                depth += 1;
                line_has_content = true;
            }
            '}' => {
                depth = depth.saturating_sub(1);
                line_has_content = true;
            }
            ';' if depth == 0 => {
                push_piece(text, start, i, &mut pieces);
                start = i + 1;
            }
            '\n' => {
                if !line_has_content && depth == 0 {
                    // blank (or comment-only) line closes the statement
                    push_piece(text, start, i, &mut pieces);
                    start = i + 1;
                }
                line_has_content = false;
            }
            c if c.is_whitespace() => {}
            _ => line_has_content = true,
        }
    }
    push_piece(text, start, text.len(), &mut pieces);
    pieces
}
