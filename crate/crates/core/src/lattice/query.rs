//! Boolean concept queries.
//!
//! ```text
//! expr   := term ('OR' term)*
//! term   := factor ('AND' factor)*
//! factor := 'NOT' factor | '(' expr ')' | literal
//! ```
//!
//! Keywords are case-insensitive. A literal is either a bare word (no
//! whitespace, parentheses or quotes) or a double-quoted string with `\"` and
//! `\\` escapes. Errors carry the byte offset where parsing failed.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryExpr {
    Concept(String),
    And(Box<QueryExpr>, Box<QueryExpr>),
    Or(Box<QueryExpr>, Box<QueryExpr>),
    Not(Box<QueryExpr>),
}

impl QueryExpr {
    pub fn concept(name: impl Into<String>) -> Self {
        QueryExpr::Concept(name.into())
    }

    pub fn and(lhs: QueryExpr, rhs: QueryExpr) -> Self {
        QueryExpr::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: QueryExpr, rhs: QueryExpr) -> Self {
        QueryExpr::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn not(child: QueryExpr) -> Self {
        QueryExpr::Not(Box::new(child))
    }

    pub fn depth(&self) -> usize {
        match self {
            QueryExpr::Concept(_) => 1,
            QueryExpr::Not(c) => 1 + c.depth(),
            QueryExpr::And(l, r) | QueryExpr::Or(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Concept names in left-to-right order.
    pub fn concepts(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            QueryExpr::Concept(n) => out.push(n),
            QueryExpr::Not(c) => c.collect(out),
            QueryExpr::And(l, r) | QueryExpr::Or(l, r) => {
                l.collect(out);
                r.collect(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            QueryExpr::Or(..) => 1,
            QueryExpr::And(..) => 2,
            QueryExpr::Not(_) => 3,
            QueryExpr::Concept(_) => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            QueryExpr::Concept(name) => {
                f.write_str("\"")?;
                for ch in name.chars() {
                    if ch == '"' || ch == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{ch}")?;
                }
                f.write_str("\"")?;
            }
            QueryExpr::Or(l, r) => {
                l.fmt_prec(f, 1)?;
                f.write_str(" OR ")?;
                r.fmt_prec(f, 2)?;
            }
            QueryExpr::And(l, r) => {
                l.fmt_prec(f, 2)?;
                f.write_str(" AND ")?;
                r.fmt_prec(f, 3)?;
            }
            QueryExpr::Not(c) => {
                f.write_str("NOT ")?;
                c.fmt_prec(f, 3)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Pretty-prints with the minimal parentheses needed to re-parse to the same tree.
impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Literal(String),
}

fn parse_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, ch)) = chars.peek() {
        match ch {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                tokens.push((start, Token::LParen));
            }
            ')' => {
                chars.next();
                tokens.push((start, Token::RParen));
            }
            '"' => {
                chars.next();
                let mut lit = String::new();
                let mut closed = false;
                while let Some((pos, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, e @ ('"' | '\\'))) => lit.push(e),
                            Some((p, other)) => {
                                return Err(parse_error(p, format!("invalid escape '\\{other}'")))
                            }
                            None => return Err(parse_error(pos, "dangling escape")),
                        },
                        c => lit.push(c),
                    }
                }
                if !closed {
                    return Err(parse_error(start, "unterminated quoted literal"));
                }
                if lit.trim().is_empty() {
                    return Err(parse_error(start, "empty concept literal"));
                }
                tokens.push((start, Token::Literal(lit)));
            }
            _ => {
                let mut end = start;
                while let Some(&(pos, c)) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' {
                        break;
                    }
                    end = pos + c.len_utf8();
                    chars.next();
                }
                let word = &text[start..end];
                let tok = if word.eq_ignore_ascii_case("and") {
                    Token::And
                } else if word.eq_ignore_ascii_case("or") {
                    Token::Or
                } else if word.eq_ignore_ascii_case("not") {
                    Token::Not
                } else {
                    Token::Literal(word.to_string())
                };
                tokens.push((start, tok));
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn expr(&mut self) -> Result<QueryExpr> {
        let mut lhs = self.term()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = QueryExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<QueryExpr> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = QueryExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<QueryExpr> {
        let offset = self.offset();
        match self.tokens.get(self.pos).map(|(_, t)| t.clone()) {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(QueryExpr::not(self.factor()?))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return Err(parse_error(
                        self.offset(),
                        format!("unbalanced parentheses: '(' at byte {offset} is never closed"),
                    ));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Literal(name)) => {
                self.pos += 1;
                Ok(QueryExpr::Concept(name))
            }
            Some(Token::RParen) => Err(parse_error(
                offset,
                "unbalanced parentheses: unexpected ')'",
            )),
            Some(tok) => Err(parse_error(
                offset,
                format!("expected a concept, 'NOT' or '(', found {}", describe(&tok)),
            )),
            None => Err(parse_error(offset, "unexpected end of query")),
        }
    }
}

fn describe(tok: &Token) -> &'static str {
    match tok {
        Token::LParen => "'('",
        Token::RParen => "')'",
        Token::And => "'AND'",
        Token::Or => "'OR'",
        Token::Not => "'NOT'",
        Token::Literal(_) => "a concept",
    }
}

/// Parses a query string into an AST.
pub fn parse_query(text: &str) -> Result<QueryExpr> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        let msg = if *tok == Token::RParen {
            "unbalanced parentheses: unexpected ')'".to_string()
        } else {
            format!("trailing input starting with {}", describe(tok))
        };
        return Err(parse_error(parser.offset(), msg));
    }
    Ok(expr)
}
