//! Recursive-descent parser for rational expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := integer | identifier | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x1^2` is `-(x1^2)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use super::{Poly, RationalExpr};
use crate::error::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, ch) = bytes[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                i += 1;
            }
            let digits: String = bytes[start..i].iter().map(|b| b.1).collect();
            out.push((pos, Token::Int(digits.parse().expect("digits"))));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].1.is_alphanumeric() || bytes[i].1 == '_') {
                i += 1;
            }
            let name: String = bytes[start..i].iter().map(|b| b.1).collect();
            out.push((pos, Token::Ident(name)));
        } else if "+-*/^()".contains(ch) {
            out.push((pos, Token::Op(ch)));
            i += 1;
        } else {
            return Err(ExprError::Syntax { position: pos, message: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    at: usize,
    end: usize,
    coords: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at).map(|t| &t.1)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<RationalExpr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RationalExpr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let rhs = self.unary()?;
                acc = acc.checked_div(&rhs)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<RationalExpr, ExprError> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<RationalExpr, ExprError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let position = self.position();
        let exponent = self.unary()?;
        let k = exponent
            .constant_value()
            .filter(|c| c.is_integer() && !c.is_negative())
            .and_then(|c| c.to_integer().to_u32())
            .ok_or(ExprError::BadExponent { position })?;
        Ok(base.pow(k))
    }

    fn atom(&mut self) -> Result<RationalExpr, ExprError> {
        let nvars = self.coords.len();
        let position = self.position();
        match self.tokens.get(self.at).map(|t| t.1.clone()) {
            Some(Token::Int(k)) => {
                self.at += 1;
                Ok(RationalExpr::constant(nvars, BigRational::from_integer(k)))
            }
            Some(Token::Ident(name)) => {
                self.at += 1;
                match self.coords.iter().position(|c| *c == name) {
                    Some(i) => Ok(RationalExpr::var(nvars, i)),
                    None => Err(ExprError::UnknownIdentifier { name, position }),
                }
            }
            Some(Token::Op('(')) => {
                self.at += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(ExprError::Syntax { position: self.position(), message: "expected `)`".into() });
                }
                Ok(inner)
            }
            Some(Token::Op(op)) => Err(ExprError::Syntax { position, message: format!("unexpected `{op}`") }),
            None => Err(ExprError::Syntax { position, message: "unexpected end of input".into() }),
        }
    }
}

/// Parses `text` as a rational function of the named coordinates.
pub fn parse_expr(text: &str, coords: &[&str]) -> Result<RationalExpr, ExprError> {
    let mut parser = Parser { tokens: tokenize(text)?, at: 0, end: text.len(), coords };
    let value = parser.expr()?;
    if parser.at != parser.tokens.len() {
        return Err(ExprError::Syntax { position: parser.position(), message: "unexpected trailing input".into() });
    }
    Ok(value)
}

/// Parses `text`, requiring the result to be a polynomial.
pub fn parse_poly(text: &str, coords: &[&str]) -> Result<Poly, ExprError> {
    let e = parse_expr(text, coords)?;
    if !e.is_polynomial() {
        return Err(ExprError::Syntax { position: 0, message: "expected a polynomial".into() });
    }
    Ok(e.numerator().clone())
}
