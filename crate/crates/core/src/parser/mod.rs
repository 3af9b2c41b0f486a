//! Textual front end: the `.tcsd` diagram language and the `.arch`
//! architecture/binding language.
//!
//! ```text
//! tcsd NAME { sut ID (test ID)+ STMT* }
//!
//! STMT := msg ID -> ID : LABEL
//!       | at INT
//!       | timeout INT { STMT* }
//!       | par { (op { STMT* })+ }
//!       | alt { (op { STMT* })+ }
//!       | opt { STMT* }
//!       | strict { STMT* }
//!       | loop INT { STMT* }
//!
//! architecture NAME {
//!     components ID (, ID)*
//!     (bind TCSDNAME { sut = ID (ID -> ID)* })*
//! }
//! ```
//!
//! `# ...` starts a comment. Labels are identifiers or double-quoted strings.

mod arch;
mod lexer;
mod print;
mod tcsd;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::model::{ElementRef, Tcsd};

pub use arch::{parse_architecture, Architecture, Binding};
pub use print::{print_tcsd, PrintError};
pub use tcsd::parse_tcsd;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    Duplicate,
    InvalidNumber,
    UnknownName,
    EmptyTimeout,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: {message}{}", expected_suffix(.expected))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

fn expected_suffix(expected: &[String]) -> String {
    match expected {
        [] => String::new(),
        [one] => format!(" (expected {one})"),
        many => format!(" (expected one of {})", many.join(", ")),
    }
}

impl ParseError {
    pub(crate) fn new(
        kind: ParseErrorKind,
        span: SourceSpan,
        message: impl Into<String>,
        expected: Vec<String>,
    ) -> Self {
        ParseError {
            kind,
            span,
            message: message.into(),
            expected,
        }
    }
}

/// Source locations of parsed diagram elements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanTable {
    spans: HashMap<ElementRef, SourceSpan>,
}

impl SpanTable {
    pub fn get(&self, element: &ElementRef) -> Option<&SourceSpan> {
        self.spans.get(element)
    }

    pub(crate) fn insert(&mut self, element: ElementRef, span: SourceSpan) {
        self.spans.insert(element, span);
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ParsedTcsd {
    pub tcsd: Tcsd,
    pub spans: SpanTable,
}

/// Shared token cursor for both grammars.
pub(crate) struct Cursor {
    tokens: Vec<lexer::Token>,
    pos: usize,
}

impl Cursor {
    pub(crate) fn new(source: &str, file: &str) -> Result<Self, ParseError> {
        Ok(Cursor {
            tokens: lexer::tokenize(source, file)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> &lexer::Tok {
        &self.tokens[self.pos].tok
    }

    pub(crate) fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    pub(crate) fn advance(&mut self) -> lexer::Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::new(
            ParseErrorKind::Syntax,
            self.span(),
            format!("unexpected {}", self.peek().describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), lexer::Tok::Ident(s) if s == kw)
    }

    pub(crate) fn keyword(&mut self, kw: &str) -> Result<SourceSpan, ParseError> {
        if self.is_keyword(kw) {
            Ok(self.advance().span)
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    pub(crate) fn expect(&mut self, tok: lexer::Tok) -> Result<SourceSpan, ParseError> {
        if *self.peek() == tok {
            Ok(self.advance().span)
        } else {
            Err(self.error(&[&tok.describe()]))
        }
    }

    /// An identifier that is not a reserved word of `reserved`.
    pub(crate) fn ident(&mut self, reserved: &[&str]) -> Result<(String, SourceSpan), ParseError> {
        match self.peek() {
            lexer::Tok::Ident(s) if !reserved.contains(&s.as_str()) => {
                let t = self.advance();
                let lexer::Tok::Ident(s) = t.tok else { unreachable!() };
                Ok((s, t.span))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// A non-negative integer literal.
    pub(crate) fn natural(&mut self, what: &str) -> Result<(u32, SourceSpan), ParseError> {
        match self.peek().clone() {
            lexer::Tok::Number(text) => {
                let span = self.advance().span;
                text.parse::<u32>().map(|n| (n, span.clone())).map_err(|_| {
                    ParseError::new(
                        ParseErrorKind::InvalidNumber,
                        span,
                        format!("`{what}` expects a non-negative integer, found `{text}`"),
                        vec!["non-negative integer".into()],
                    )
                })
            }
            _ => Err(self.error(&["non-negative integer"])),
        }
    }
}
