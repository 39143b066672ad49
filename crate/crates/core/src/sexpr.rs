//! A small S-expression reader shared by every textual format in the crate.
//!
//! Besides parenthesised lists it understands bracketed lists (`[a, b]`,
//! commas are whitespace), string literals, and `#` line comments. Every
//! node remembers the line it started on so format-level errors can point
//! at the offending declaration.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, usize),
    Str(String, usize),
    List(Vec<Sexp>, usize),
    Bracket(Vec<Sexp>, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SexpError {
    pub line: usize,
    pub message: String,
}

impl SexpError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        SexpError {
            line,
            message: message.into(),
        }
    }
}

impl Sexp {
    pub fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::Str(_, l) | Sexp::List(_, l) | Sexp::Bracket(_, l) => *l,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            _ => None,
        }
    }

    /// Head symbol of a list form, e.g. `def` for `(def ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexp::as_atom)
    }

    pub fn is_atom(&self, s: &str) -> bool {
        self.as_atom() == Some(s)
    }

    pub fn error(&self, message: impl Into<String>) -> SexpError {
        SexpError::new(self.line(), message)
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a, _) => f.write_str(a),
            Sexp::Str(s, _) => write!(f, "{s:?}"),
            Sexp::List(items, _) | Sexp::Bracket(items, _) => {
                let (open, close) = match self {
                    Sexp::List(..) => ("(", ")"),
                    _ => ("[", "]"),
                };
                f.write_str(open)?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(close)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open(char),
    Close(char),
    Atom(String),
    Str(String),
}

fn tokenize(text: &str, first_line: usize) -> Result<Vec<(Token, usize)>, SexpError> {
    let mut out = Vec::new();
    let mut line = first_line;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() || c == ',' => {
                chars.next();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' | '[' => {
                out.push((Token::Open(c), line));
                chars.next();
            }
            ')' | ']' => {
                out.push((Token::Close(c), line));
                chars.next();
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err(SexpError::new(start, "unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some('n') => s.push('\n'),
                            Some(c) => s.push(c),
                            None => {
                                return Err(SexpError::new(start, "unterminated string literal"))
                            }
                        },
                        Some(c) => {
                            if c == '\n' {
                                line += 1;
                            }
                            s.push(c)
                        }
                    }
                }
                out.push((Token::Str(s), start));
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || "()[],\"#".contains(c) {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push((Token::Atom(s), line));
            }
        }
    }
    Ok(out)
}

struct Reader {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Reader {
    fn read(&mut self) -> Result<Sexp, SexpError> {
        let (tok, line) = self.tokens[self.pos].clone();
        self.pos += 1;
        match tok {
            Token::Atom(a) => Ok(Sexp::Atom(a, line)),
            Token::Str(s) => Ok(Sexp::Str(s, line)),
            Token::Close(c) => Err(SexpError::new(line, format!("unexpected '{c}'"))),
            Token::Open(open) => {
                let close = if open == '(' { ')' } else { ']' };
                let mut items = Vec::new();
                loop {
                    match self.tokens.get(self.pos) {
                        None => return Err(SexpError::new(line, format!("unclosed '{open}'"))),
                        Some((Token::Close(c), l)) => {
                            if *c != close {
                                return Err(SexpError::new(
                                    *l,
                                    format!("expected '{close}' but found '{c}'"),
                                ));
                            }
                            self.pos += 1;
                            break;
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
                Ok(if open == '(' {
                    Sexp::List(items, line)
                } else {
                    Sexp::Bracket(items, line)
                })
            }
        }
    }
}

/// Parses every top-level form in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    parse_all_at(text, 1)
}

/// Like [`parse_all`], numbering lines from `first_line`.
pub fn parse_all_at(text: &str, first_line: usize) -> Result<Vec<Sexp>, SexpError> {
    let tokens = tokenize(text, first_line)?;
    let mut reader = Reader { tokens, pos: 0 };
    let mut out = Vec::new();
    while reader.pos < reader.tokens.len() {
        out.push(reader.read()?);
    }
    Ok(out)
}

/// Parses exactly one form.
pub fn parse_one(text: &str) -> Result<Sexp, SexpError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(SexpError::new(1, "empty input")),
        _ => Err(SexpError::new(all[1].line(), "trailing input after expression")),
    }
}
