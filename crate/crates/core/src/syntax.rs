//! Term text syntax: `name` or `name(t1,...,tn)`.
//!
//! Parsing and printing are iterative so that deep terms (long Peano
//! numerals, long lists) do not exhaust the call stack.

use std::fmt;

use crate::term::{Head, TermError, TermId, TermPool};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '+' | '*' | '-')
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Ident(&'a str),
    Open,
    Close,
    Comma,
}

struct Lexer<'a> {
    text: &'a str,
    offset: usize,
    line: usize,
    line_start: usize,
    base_line: usize,
    base_column: usize,
}

impl<'a> Lexer<'a> {
    fn location(&self, at: usize) -> (usize, usize) {
        let column = at - self.line_start + 1;
        if self.line == 0 {
            (self.base_line, self.base_column + column - 1)
        } else {
            (self.base_line + self.line, column)
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.offset..].chars().next() {
            if c == '\n' {
                self.line += 1;
                self.line_start = self.offset + 1;
            } else if !c.is_whitespace() {
                break;
            }
            self.offset += c.len_utf8();
        }
    }

    /// Next token with its byte offset, or `None` at end of input.
    fn next(&mut self) -> Result<Option<(Tok<'a>, usize)>, ParseError> {
        self.skip_ws();
        let start = self.offset;
        let Some(c) = self.text[start..].chars().next() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => Tok::Open,
            ')' => Tok::Close,
            ',' => Tok::Comma,
            c if is_ident_char(c) => {
                let len = self.text[start..]
                    .find(|c: char| !is_ident_char(c))
                    .unwrap_or(self.text.len() - start);
                self.offset += len;
                return Ok(Some((Tok::Ident(&self.text[start..start + len]), start)));
            }
            other => {
                let (l, col) = self.location(start);
                return Err(ParseError::new(l, col, format!("unexpected character `{other}`")));
            }
        };
        self.offset += c.len_utf8();
        Ok(Some((tok, start)))
    }

    fn peek(&mut self) -> Result<Option<Tok<'a>>, ParseError> {
        let saved = (self.offset, self.line, self.line_start);
        let t = self.next()?.map(|(t, _)| t);
        (self.offset, self.line, self.line_start) = saved;
        Ok(t)
    }
}

/// Parses a term over the pool's signature. Names declared as variables
/// become variables; every other name must be a declared function symbol.
pub fn parse_term(pool: &mut TermPool, text: &str) -> Result<TermId, ParseError> {
    parse_term_at(pool, text, 1, 1)
}

/// Like [`parse_term`], reporting locations relative to `(line, column)`.
pub fn parse_term_at(
    pool: &mut TermPool,
    text: &str,
    line: usize,
    column: usize,
) -> Result<TermId, ParseError> {
    let mut lx = Lexer {
        text,
        offset: 0,
        line: 0,
        line_start: 0,
        base_line: line,
        base_column: column,
    };
    struct Frame<'a> {
        name: &'a str,
        at: (usize, usize),
        args: Vec<TermId>,
    }
    let mut frames: Vec<Frame> = Vec::new();
    let result = 'outer: loop {
        let (name, at) = match lx.next()? {
            Some((Tok::Ident(name), at)) => (name, lx.location(at)),
            Some((tok, at)) => {
                let (l, c) = lx.location(at);
                return Err(ParseError::new(l, c, format!("expected a symbol, found {tok:?}")));
            }
            None => {
                let (l, c) = lx.location(lx.offset);
                return Err(ParseError::new(l, c, "unexpected end of input"));
            }
        };
        let mut leaf = if lx.peek()? == Some(Tok::Open) {
            lx.next()?;
            if lx.peek()? == Some(Tok::Close) {
                lx.next()?;
                resolve(pool, name, at, &[])?
            } else {
                frames.push(Frame {
                    name,
                    at,
                    args: Vec::new(),
                });
                continue;
            }
        } else {
            resolve(pool, name, at, &[])?
        };
        loop {
            let Some(frame) = frames.last_mut() else {
                break 'outer leaf;
            };
            match lx.next()? {
                Some((Tok::Comma, _)) => {
                    frame.args.push(leaf);
                    continue 'outer;
                }
                Some((Tok::Close, _)) => {
                    frame.args.push(leaf);
                    let frame = frames.pop().expect("non-empty");
                    leaf = resolve(pool, frame.name, frame.at, &frame.args)?;
                }
                Some((tok, at)) => {
                    let (l, c) = lx.location(at);
                    return Err(ParseError::new(l, c, format!("expected `,` or `)`, found {tok:?}")));
                }
                None => {
                    let (l, c) = lx.location(lx.offset);
                    return Err(ParseError::new(l, c, "unbalanced parentheses"));
                }
            }
        }
    };
    if let Some((tok, at)) = lx.next()? {
        let (l, c) = lx.location(at);
        return Err(ParseError::new(l, c, format!("trailing input {tok:?}")));
    }
    Ok(result)
}

fn resolve(
    pool: &mut TermPool,
    name: &str,
    (l, c): (usize, usize),
    args: &[TermId],
) -> Result<TermId, ParseError> {
    if let Some(v) = pool.signature().variable(name) {
        if !args.is_empty() {
            return Err(ParseError::new(l, c, format!("variable `{name}` applied to arguments")));
        }
        return Ok(pool.var(v));
    }
    let Some(f) = pool.signature().function(name) else {
        return Err(ParseError::new(l, c, format!("unknown symbol `{name}`")));
    };
    pool.app(f, args).map_err(|e: TermError| ParseError::new(l, c, e.to_string()))
}

/// Displays a term in the same syntax [`parse_term`] accepts.
pub struct Display<'a> {
    pool: &'a TermPool,
    term: TermId,
}

pub fn display(pool: &TermPool, term: TermId) -> Display<'_> {
    Display { pool, term }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        enum Item {
            Term(TermId),
            Text(&'static str),
        }
        let sig = self.pool.signature();
        let mut stack = vec![Item::Term(self.term)];
        while let Some(item) = stack.pop() {
            match item {
                Item::Text(s) => f.write_str(s)?,
                Item::Term(t) => {
                    match self.pool.head(t) {
                        Head::Fn(g) => f.write_str(sig.fn_name(g))?,
                        Head::Var(v) => f.write_str(sig.var_name(v))?,
                    }
                    let args = self.pool.args(t);
                    if !args.is_empty() {
                        f.write_str("(")?;
                        stack.push(Item::Text(")"));
                        for (i, &a) in args.iter().enumerate().rev() {
                            stack.push(Item::Term(a));
                            if i > 0 {
                                stack.push(Item::Text(","));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn to_string(pool: &TermPool, term: TermId) -> String {
    display(pool, term).to_string()
}
