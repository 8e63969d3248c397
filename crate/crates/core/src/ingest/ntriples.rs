//! Line-oriented N-Triples reader.
//!
//! Produces a [`TripleSet`] with no filtering applied. Duplicate triples are
//! collapsed; the first occurrence fixes the iteration order, which keeps
//! downstream extraction deterministic for a given file.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SyntaxError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("read failed at line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

impl SyntaxError {
    pub fn line(&self) -> usize {
        match self {
            SyntaxError::Malformed { line, .. } | SyntaxError::Io { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal {
        value: String,
        datatype: Option<String>,
        lang: Option<String>,
    },
}

impl Term {
    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&str> {
        match self {
            Term::Literal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Term::Iri(_) | Term::Blank(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Blank(id) => write!(f, "_:{id}"),
            Term::Literal { value, datatype, lang } => {
                write!(f, "{value:?}")?;
                if let Some(lang) = lang {
                    write!(f, "@{lang}")?;
                } else if let Some(dt) = datatype {
                    write!(f, "^^<{dt}>")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

/// Insertion-ordered set of triples.
#[derive(Debug, Clone, Default)]
pub struct TripleSet {
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl TripleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        if self.seen.contains(&triple) {
            return false;
        }
        self.seen.insert(triple.clone());
        self.triples.push(triple);
        true
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.seen.contains(triple)
    }
}

impl<'a> IntoIterator for &'a TripleSet {
    type Item = &'a Triple;
    type IntoIter = std::slice::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

impl FromIterator<Triple> for TripleSet {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut set = TripleSet::new();
        for t in iter {
            set.insert(t);
        }
        set
    }
}

pub fn parse_ntriples<R: Read>(source: R) -> Result<TripleSet, SyntaxError> {
    let reader = BufReader::new(source);
    let mut set = TripleSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| SyntaxError::Io { line: line_no, source })?;
        if let Some(triple) = parse_line(&line).map_err(|message| SyntaxError::Malformed { line: line_no, message })? {
            set.insert(triple);
        }
    }
    Ok(set)
}

pub fn parse_ntriples_str(text: &str) -> Result<TripleSet, SyntaxError> {
    parse_ntriples(text.as_bytes())
}

fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut cur = Cursor::new(line);
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(None);
    }

    let subject = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::Blank(cur.blank()?),
        _ => return Err(cur.unexpected("subject IRI or blank node")),
    };
    cur.skip_ws();
    let predicate = match cur.peek() {
        Some('<') => cur.iri()?,
        _ => return Err(cur.unexpected("predicate IRI")),
    };
    cur.skip_ws();
    let object = match cur.peek() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::Blank(cur.blank()?),
        Some('"') => cur.literal()?,
        _ => return Err(cur.unexpected("object term")),
    };
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err(cur.unexpected("'.' terminating the triple"));
    }
    cur.bump();
    cur.skip_ws();
    match cur.peek() {
        None | Some('#') => Ok(Some(Triple {
            subject,
            predicate,
            object,
        })),
        Some(_) => Err(cur.unexpected("end of line")),
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().peekable(),
            src,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        self.chars.next().map(|(_, c)| c)
    }

    fn at_end(&mut self) -> bool {
        self.chars.peek().is_none()
    }

    fn column(&mut self) -> usize {
        self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len()) + 1
    }

    fn unexpected(&mut self, expected: &str) -> String {
        let col = self.column();
        match self.peek() {
            Some(c) => format!("column {col}: expected {expected}, found {c:?}"),
            None => format!("column {col}: expected {expected}, found end of line"),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ') | Some('\t') | Some('\r')) {
            self.bump();
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        self.bump(); // '<'
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) if c == ' ' || c == '<' || c == '"' => return Err(format!("illegal character {c:?} in IRI")),
                Some(c) => out.push(c),
                None => return Err("unterminated IRI".to_string()),
            }
        }
        if out.is_empty() {
            return Err("empty IRI".to_string());
        }
        Ok(out)
    }

    fn blank(&mut self) -> Result<String, String> {
        self.bump(); // '_'
        if self.bump() != Some(':') {
            return Err("blank node label must start with '_:'".to_string());
        }
        let label_char = |c: char| c.is_alphanumeric() || matches!(c, '_' | '-');
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if label_char(c) {
                out.push(c);
                self.bump();
            } else if c == '.' {
                // Interior dots only; a trailing one terminates the statement.
                let rest = self.chars.clone().skip(1).find(|&(_, c)| c != '.');
                match rest {
                    Some((_, next)) if label_char(next) && !out.is_empty() => {
                        while self.peek() == Some('.') {
                            out.push('.');
                            self.bump();
                        }
                    }
                    _ => break,
                }
            } else {
                break;
            }
        }
        if out.is_empty() {
            return Err("empty blank node label".to_string());
        }
        Ok(out)
    }

    fn literal(&mut self) -> Result<Term, String> {
        self.bump(); // '"'
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('t') => value.push('\t'),
                    Some('b') => value.push('\u{8}'),
                    Some('n') => value.push('\n'),
                    Some('r') => value.push('\r'),
                    Some('f') => value.push('\u{c}'),
                    Some('"') => value.push('"'),
                    Some('\'') => value.push('\''),
                    Some('\\') => value.push('\\'),
                    Some('u') => value.push(self.hex_char(4)?),
                    Some('U') => value.push(self.hex_char(8)?),
                    Some(c) => return Err(format!("unknown escape \\{c} in literal")),
                    None => return Err("unterminated literal".to_string()),
                },
                Some(c) => value.push(c),
                None => return Err("unterminated literal".to_string()),
            }
        }
        let mut datatype = None;
        let mut lang = None;
        match self.peek() {
            Some('@') => {
                self.bump();
                let mut tag = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        tag.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if tag.is_empty() {
                    return Err("empty language tag".to_string());
                }
                lang = Some(tag);
            }
            Some('^') => {
                self.bump();
                if self.bump() != Some('^') || self.peek() != Some('<') {
                    return Err("malformed datatype marker".to_string());
                }
                datatype = Some(self.iri()?);
            }
            _ => {}
        }
        Ok(Term::Literal { value, datatype, lang })
    }

    fn unicode_escape(&mut self) -> Result<char, String> {
        match self.bump() {
            Some('u') => self.hex_char(4),
            Some('U') => self.hex_char(8),
            _ => Err("only \\u and \\U escapes are allowed in IRIs".to_string()),
        }
    }

    fn hex_char(&mut self, digits: usize) -> Result<char, String> {
        let mut code = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| format!("expected {digits} hex digits in escape"))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| format!("invalid code point U+{code:X}"))
    }
}
