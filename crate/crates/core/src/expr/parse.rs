//! Recursive-descent parser for coordinate expressions.

use super::{Expression, Function, ParseError};

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    position: usize,
}

fn syntax(position: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { position, message: message.into() }
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let position = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '+' => {
                tokens.push(Token { kind: TokenKind::Plus, position });
                i += 1;
            }
            '-' => {
                tokens.push(Token { kind: TokenKind::Minus, position });
                i += 1;
            }
            '*' => {
                tokens.push(Token { kind: TokenKind::Star, position });
                i += 1;
            }
            '/' => {
                tokens.push(Token { kind: TokenKind::Slash, position });
                i += 1;
            }
            '^' => {
                tokens.push(Token { kind: TokenKind::Caret, position });
                i += 1;
            }
            '(' => {
                tokens.push(Token { kind: TokenKind::LParen, position });
                i += 1;
            }
            ')' => {
                tokens.push(Token { kind: TokenKind::RParen, position });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mark = i;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i].is_ascii_digit() {
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    } else {
                        // Not an exponent after all (e.g. "2e" before an
                        // identifier); treat the mantissa alone as the number.
                        i = mark;
                    }
                }
                let text = &source[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| syntax(start, format!("invalid number `{text}`")))?;
                tokens.push(Token { kind: TokenKind::Number(value), position: start });
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[start..i].to_string()),
                    position: start,
                });
            }
            _ => return Err(syntax(position, format!("unexpected character `{c}`"))),
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    cursor: usize,
    coords: &'a [&'a str],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.cursor).cloned();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.position).unwrap_or(self.end)
    }

    fn expect_rparen(&mut self, context: &str) -> Result<(), ParseError> {
        match self.advance() {
            Some(Token { kind: TokenKind::RParen, .. }) => Ok(()),
            Some(t) => Err(syntax(t.position, format!("expected `)` {context}"))),
            None => Err(syntax(self.end, format!("expected `)` {context}"))),
        }
    }

    fn expression(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            let op = match t.kind {
                TokenKind::Plus => true,
                TokenKind::Minus => false,
                _ => break,
            };
            self.advance();
            let rhs = self.term()?;
            lhs = if op {
                Expression::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expression::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(t) = self.peek() {
            let mul = match t.kind {
                TokenKind::Star => true,
                TokenKind::Slash => false,
                _ => break,
            };
            self.advance();
            let rhs = self.factor()?;
            lhs = if mul {
                Expression::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expression::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expression, ParseError> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Minus)) {
            self.advance();
            let inner = self.factor()?;
            return Ok(Expression::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            let caret_pos = self.here();
            self.advance();
            let exponent_expr = self.factor()?;
            let exponent = exponent_expr.constant_value().ok_or_else(|| {
                syntax(caret_pos, "exponent must be a numeric constant")
            })?;
            return Ok(Expression::Pow(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ParseError> {
        let token = self
            .advance()
            .ok_or_else(|| syntax(self.end, "unexpected end of input"))?;
        match token.kind {
            TokenKind::Number(v) => Ok(Expression::Constant(v)),
            TokenKind::LParen => {
                let inner = self.expression()?;
                self.expect_rparen("to close the group")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if let Some(func) = Function::from_name(&name) {
                    match self.advance() {
                        Some(Token { kind: TokenKind::LParen, .. }) => {}
                        _ => {
                            return Err(syntax(
                                token.position,
                                format!("function `{name}` requires parentheses"),
                            ))
                        }
                    }
                    let arg = self.expression()?;
                    self.expect_rparen("to close the function argument")?;
                    Ok(Expression::Call(func, Box::new(arg)))
                } else if let Some(index) = self.coords.iter().position(|c| *c == name) {
                    Ok(Expression::Coord { index, name })
                } else {
                    Err(ParseError::UnknownIdentifier { name })
                }
            }
            other => Err(syntax(token.position, format!("unexpected token `{other:?}`"))),
        }
    }
}

/// Parses `source` against the declared coordinate names.
pub fn parse(source: &str, coords: &[&str]) -> Result<Expression, ParseError> {
    let tokens = lex(source)?;
    if tokens.is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut parser = Parser { tokens, cursor: 0, coords, end: source.len() };
    let expr = parser.expression()?;
    if let Some(t) = parser.peek() {
        return Err(syntax(t.position, "unexpected trailing input"));
    }
    Ok(expr)
}
