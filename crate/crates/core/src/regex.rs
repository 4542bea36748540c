//! Tagged regular expressions over characters and named dictionaries.
//!
//! ```text
//! expr    = alt
//! alt     = cat { "|" cat }
//! cat     = { rep }
//! rep     = atom [ "*" | "+" | "?" ]
//! atom    = literal | "\" escaped | "." | "\s" | "[" class "]" | "(" expr ")"
//!         | "(?<" category [ ":" person ] ">" expr ")" | "${" name "}" | "${oov}"
//! ```
//!
//! `\s` matches one or more spaces or linebreaks, `${name}` any word of the
//! lexicon `name`, and `${oov}` any non-empty run of non-whitespace
//! characters. Tag groups label the characters they match.

use std::fmt;
use std::ops::Range;

use thiserror::Error;

/// Characters that must be escaped to be matched literally.
const ESCAPABLE: &[char] = &['(', ')', '[', ']', '|', '*', '+', '?', '\\', '$', '.'];

/// Name reserved for the out-of-vocabulary escape.
pub const OOV_NAME: &str = "oov";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegexError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown escape \\{escape} at byte {offset}")]
    UnknownEscape { offset: usize, escape: char },
    #[error("unbalanced group at byte {offset}")]
    Unbalanced { offset: usize },
}

impl RegexError {
    pub fn offset(&self) -> usize {
        match self {
            Self::Syntax { offset, .. }
            | Self::UnknownEscape { offset, .. }
            | Self::Unbalanced { offset } => *offset,
        }
    }
}

/// Category and optional person carried by a tag group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TagSpec {
    pub category: String,
    pub person: Option<String>,
}

impl TagSpec {
    pub fn new(category: impl Into<String>, person: Option<&str>) -> Self {
        Self {
            category: category.into(),
            person: person.map(str::to_string),
        }
    }
}

impl fmt::Display for TagSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.person {
            Some(p) => write!(f, "{}:{}", self.category, p),
            None => f.write_str(&self.category),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    /// Byte range in the source text.
    pub span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Literal(char),
    /// Sequence; empty matches the empty string.
    Concat(Vec<Node>),
    Alternation(Vec<Node>),
    Star(Box<Node>),
    Plus(Box<Node>),
    Optional(Box<Node>),
    CharClass {
        negated: bool,
        ranges: Vec<(char, char)>,
    },
    AnyChar,
    Whitespace,
    DictRef(String),
    OovRef,
    TagGroup {
        tag: TagSpec,
        child: Box<Node>,
    },
}

impl Node {
    pub fn new(kind: NodeKind) -> Self {
        Self { kind, span: 0..0 }
    }

    /// Visits this node and all descendants in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        match &self.kind {
            NodeKind::Concat(xs) | NodeKind::Alternation(xs) => {
                xs.iter().for_each(|x| x.walk(f));
            }
            NodeKind::Star(x)
            | NodeKind::Plus(x)
            | NodeKind::Optional(x)
            | NodeKind::TagGroup { child: x, .. } => x.walk(f),
            _ => {}
        }
    }

    /// Dictionary names referenced anywhere in the tree, in source order.
    pub fn dict_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let NodeKind::DictRef(name) = &n.kind {
                if !out.contains(&name.as_str()) {
                    out.push(name.as_str());
                }
            }
        });
        out
    }

    /// Tags declared anywhere in the tree, in source order.
    pub fn tags(&self) -> Vec<&TagSpec> {
        let mut out = Vec::new();
        self.walk(&mut |n| {
            if let NodeKind::TagGroup { tag, .. } = &n.kind {
                if !out.contains(&tag) {
                    out.push(tag);
                }
            }
        });
        out
    }
}

fn write_escaped(f: &mut fmt::Formatter<'_>, c: char) -> fmt::Result {
    if ESCAPABLE.contains(&c) {
        write!(f, "\\{c}")
    } else {
        write!(f, "{c}")
    }
}

impl fmt::Display for Node {
    /// Renders the tree back into the dialect, parenthesising as needed.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Literal(c) => write_escaped(f, *c),
            NodeKind::Concat(xs) => {
                for x in xs {
                    if matches!(x.kind, NodeKind::Alternation(_)) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            NodeKind::Alternation(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
            NodeKind::Star(x) | NodeKind::Plus(x) | NodeKind::Optional(x) => {
                let op = match &self.kind {
                    NodeKind::Star(_) => '*',
                    NodeKind::Plus(_) => '+',
                    _ => '?',
                };
                let atomic = matches!(
                    x.kind,
                    NodeKind::Literal(_)
                        | NodeKind::CharClass { .. }
                        | NodeKind::AnyChar
                        | NodeKind::Whitespace
                        | NodeKind::DictRef(_)
                        | NodeKind::OovRef
                        | NodeKind::TagGroup { .. }
                );
                if atomic {
                    write!(f, "{x}{op}")
                } else {
                    write!(f, "({x}){op}")
                }
            }
            NodeKind::CharClass { negated, ranges } => {
                f.write_str("[")?;
                if *negated {
                    f.write_str("^")?;
                }
                for &(lo, hi) in ranges {
                    write_class_char(f, lo)?;
                    if hi != lo {
                        f.write_str("-")?;
                        write_class_char(f, hi)?;
                    }
                }
                f.write_str("]")
            }
            NodeKind::AnyChar => f.write_str("."),
            NodeKind::Whitespace => f.write_str("\\s"),
            NodeKind::DictRef(name) => write!(f, "${{{name}}}"),
            NodeKind::OovRef => write!(f, "${{{OOV_NAME}}}"),
            NodeKind::TagGroup { tag, child } => write!(f, "(?<{tag}>{child})"),
        }
    }
}

fn write_class_char(f: &mut fmt::Formatter<'_>, c: char) -> fmt::Result {
    if matches!(c, ']' | '[' | '\\' | '-' | '^') {
        write!(f, "\\{c}")
    } else {
        write!(f, "{c}")
    }
}

/// Parses the tagged regex dialect.
pub fn parse_regex(text: &str) -> Result<Node, RegexError> {
    let mut p = Parser { text, pos: 0 };
    let node = p.parse_alt()?;
    match p.peek() {
        None => Ok(node),
        Some(')') => Err(RegexError::Unbalanced { offset: p.pos }),
        Some(c) => Err(p.syntax(format!("unexpected {c:?}"))),
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.text[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn syntax(&self, message: impl Into<String>) -> RegexError {
        RegexError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn parse_alt(&mut self) -> Result<Node, RegexError> {
        let start = self.pos;
        let mut branches = vec![self.parse_cat()?];
        while self.eat("|") {
            branches.push(self.parse_cat()?);
        }
        if branches.len() == 1 {
            return Ok(branches.pop().unwrap());
        }
        Ok(Node {
            kind: NodeKind::Alternation(branches),
            span: start..self.pos,
        })
    }

    fn parse_cat(&mut self) -> Result<Node, RegexError> {
        let start = self.pos;
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            items.push(self.parse_rep()?);
        }
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        Ok(Node {
            kind: NodeKind::Concat(items),
            span: start..self.pos,
        })
    }

    fn parse_rep(&mut self) -> Result<Node, RegexError> {
        let start = self.pos;
        let atom = self.parse_atom()?;
        let wrap: fn(Box<Node>) -> NodeKind = match self.peek() {
            Some('*') => NodeKind::Star,
            Some('+') => NodeKind::Plus,
            Some('?') => NodeKind::Optional,
            _ => return Ok(atom),
        };
        self.bump();
        if matches!(self.peek(), Some('*' | '+' | '?')) {
            return Err(self.syntax("repetition operator applied twice"));
        }
        Ok(Node {
            kind: wrap(Box::new(atom)),
            span: start..self.pos,
        })
    }

    fn parse_atom(&mut self) -> Result<Node, RegexError> {
        let start = self.pos;
        let c = self.peek().ok_or_else(|| self.syntax("unexpected end"))?;
        let kind = match c {
            '\\' => {
                self.bump();
                match self.bump() {
                    Some('s') => NodeKind::Whitespace,
                    Some(e) if ESCAPABLE.contains(&e) => NodeKind::Literal(e),
                    Some(e) => {
                        return Err(RegexError::UnknownEscape {
                            offset: start,
                            escape: e,
                        })
                    }
                    None => return Err(self.syntax("dangling backslash")),
                }
            }
            '.' => {
                self.bump();
                NodeKind::AnyChar
            }
            '[' => {
                self.bump();
                self.parse_class(start)?
            }
            '(' => {
                self.bump();
                let tag = if self.eat("?<") {
                    Some(self.parse_tag()?)
                } else {
                    None
                };
                let inner = self.parse_alt()?;
                if !self.eat(")") {
                    return Err(RegexError::Unbalanced { offset: start });
                }
                match tag {
                    Some(tag) => NodeKind::TagGroup {
                        tag,
                        child: Box::new(inner),
                    },
                    None => {
                        return Ok(Node {
                            kind: inner.kind,
                            span: start..self.pos,
                        })
                    }
                }
            }
            '$' => {
                self.bump();
                if !self.eat("{") {
                    return Err(self.syntax("expected `{` after `$`"));
                }
                let name_start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_' || c == '-')
                {
                    self.bump();
                }
                let name = &self.text[name_start..self.pos];
                if name.is_empty() {
                    return Err(self.syntax("empty dictionary name"));
                }
                if !self.eat("}") {
                    return Err(self.syntax("expected `}` after dictionary name"));
                }
                if name == OOV_NAME {
                    NodeKind::OovRef
                } else {
                    NodeKind::DictRef(name.to_string())
                }
            }
            '*' | '+' | '?' => return Err(self.syntax(format!("nothing to repeat before {c:?}"))),
            ']' => return Err(self.syntax("unescaped `]`")),
            ')' | '|' => unreachable!("handled by parse_cat"),
            _ => {
                self.bump();
                NodeKind::Literal(c)
            }
        };
        Ok(Node {
            kind,
            span: start..self.pos,
        })
    }

    fn parse_tag(&mut self) -> Result<TagSpec, RegexError> {
        let start = self.pos;
        let end = self.text[start..]
            .find('>')
            .ok_or_else(|| self.syntax("unterminated tag"))?;
        let body = &self.text[start..start + end];
        let (category, person) = match body.split_once(':') {
            Some((c, p)) => (c, Some(p)),
            None => (body, None),
        };
        let valid = |s: &str| !s.is_empty() && !s.contains(|c: char| c == ':' || c.is_whitespace());
        if !valid(category) || !person.is_none_or(valid) {
            return Err(self.syntax(format!("malformed tag {body:?}")));
        }
        self.pos = start + end + 1;
        Ok(TagSpec::new(category, person))
    }

    fn parse_class(&mut self, start: usize) -> Result<NodeKind, RegexError> {
        let negated = self.eat("^");
        let mut ranges = Vec::new();
        loop {
            let lo = match self.class_char(start)? {
                None => break,
                Some(c) => c,
            };
            let hi = if self.peek() == Some('-') && !self.text[self.pos + 1..].starts_with(']') {
                self.bump();
                self.class_char(start)?
                    .ok_or_else(|| self.syntax("unterminated range"))?
            } else {
                lo
            };
            if hi < lo {
                return Err(self.syntax(format!("inverted range {lo:?}-{hi:?}")));
            }
            ranges.push((lo, hi));
        }
        Ok(NodeKind::CharClass { negated, ranges })
    }

    /// Next class member, or `None` at the closing bracket.
    fn class_char(&mut self, start: usize) -> Result<Option<char>, RegexError> {
        match self.bump() {
            None => Err(RegexError::Unbalanced { offset: start }),
            Some(']') => Ok(None),
            Some('\\') => match self.bump() {
                Some(e) if ESCAPABLE.contains(&e) || matches!(e, '-' | '^') => Ok(Some(e)),
                Some(e) => Err(RegexError::UnknownEscape {
                    offset: self.pos - 1 - e.len_utf8(),
                    escape: e,
                }),
                None => Err(self.syntax("dangling backslash")),
            },
            Some(c) => Ok(Some(c)),
        }
    }
}
