use super::{ParseError, ParseErrorKind, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Raw numeric text, possibly signed or fractional; validated by the parser.
    Number(String),
    Str(String),
    Arrow,
    Colon,
    Comma,
    Equals,
    LBrace,
    RBrace,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Arrow => "`->`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Equals => "`=`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub(crate) fn tokenize(source: &str, file: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = source.char_indices().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let span = |line, column| SourceSpan {
        file: file.to_string(),
        line,
        column,
    };

    while let Some(&(_, c)) = chars.peek() {
        let start = span(line, col);
        let bump = |chars: &mut std::iter::Peekable<std::str::CharIndices>, line: &mut usize, col: &mut usize| {
            let (_, c) = chars.next().unwrap();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        match c {
            '\r' | '\n' | ' ' | '\t' => {
                bump(&mut chars, &mut line, &mut col);
            }
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars, &mut line, &mut col);
                }
            }
            '{' | '}' | ':' | ',' | '=' => {
                bump(&mut chars, &mut line, &mut col);
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    _ => Tok::Equals,
                };
                out.push(Token { tok, span: start });
            }
            '-' => {
                bump(&mut chars, &mut line, &mut col);
                match chars.peek() {
                    Some(&(_, '>')) => {
                        bump(&mut chars, &mut line, &mut col);
                        out.push(Token {
                            tok: Tok::Arrow,
                            span: start,
                        });
                    }
                    Some(&(_, d)) if d.is_ascii_digit() => {
                        let mut text = String::from("-");
                        lex_number(&mut chars, &mut text, &mut line, &mut col, bump);
                        out.push(Token {
                            tok: Tok::Number(text),
                            span: start,
                        });
                    }
                    _ => {
                        return Err(ParseError::new(
                            ParseErrorKind::Lexical,
                            start,
                            "stray `-`",
                            vec!["`->`".into()],
                        ))
                    }
                }
            }
            '"' => {
                bump(&mut chars, &mut line, &mut col);
                let mut text = String::new();
                loop {
                    match chars.peek().map(|&(_, c)| c) {
                        None | Some('\n') => {
                            return Err(ParseError::new(
                                ParseErrorKind::Lexical,
                                start,
                                "unterminated string",
                                vec!["`\"`".into()],
                            ))
                        }
                        Some('"') => {
                            bump(&mut chars, &mut line, &mut col);
                            break;
                        }
                        Some('\\') => {
                            bump(&mut chars, &mut line, &mut col);
                            match chars.peek().map(|&(_, c)| c) {
                                Some(c @ ('"' | '\\')) => {
                                    bump(&mut chars, &mut line, &mut col);
                                    text.push(c);
                                }
                                _ => {
                                    return Err(ParseError::new(
                                        ParseErrorKind::Lexical,
                                        span(line, col),
                                        "unknown escape sequence",
                                        vec!["`\\\"`".into(), "`\\\\`".into()],
                                    ))
                                }
                            }
                        }
                        Some(_) => text.push(bump(&mut chars, &mut line, &mut col)),
                    }
                }
                out.push(Token {
                    tok: Tok::Str(text),
                    span: start,
                });
            }
            c if c.is_ascii_digit() => {
                let mut text = String::new();
                lex_number(&mut chars, &mut text, &mut line, &mut col, bump);
                out.push(Token {
                    tok: Tok::Number(text),
                    span: start,
                });
            }
            c if is_ident_start(c) => {
                let mut text = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if !is_ident_continue(c) {
                        break;
                    }
                    text.push(bump(&mut chars, &mut line, &mut col));
                }
                out.push(Token {
                    tok: Tok::Ident(text),
                    span: start,
                });
            }
            other => {
                return Err(ParseError::new(
                    ParseErrorKind::Lexical,
                    start,
                    format!("unexpected character {other:?}"),
                    Vec::new(),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span(line, col),
    });
    Ok(out)
}

type Bump = fn(&mut std::iter::Peekable<std::str::CharIndices>, &mut usize, &mut usize) -> char;

fn lex_number(
    chars: &mut std::iter::Peekable<std::str::CharIndices>,
    text: &mut String,
    line: &mut usize,
    col: &mut usize,
    bump: Bump,
) {
    let mut seen_dot = false;
    while let Some(&(_, c)) = chars.peek() {
        if c.is_ascii_digit() || (c == '.' && !seen_dot) {
            seen_dot |= c == '.';
            text.push(bump(chars, line, col));
        } else if is_ident_continue(c) {
            // trailing unit suffixes such as `10ms` are part of the bad literal
            text.push(bump(chars, line, col));
        } else {
            break;
        }
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

/// Whether `s` can be written without quotes.
pub(crate) fn is_bare_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_continue)
}
