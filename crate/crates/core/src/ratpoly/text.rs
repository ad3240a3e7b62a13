//! Text form of polynomials: `c * v1^e1*...*vk^ek` terms joined by `+`/`-`.
//!
//! The parser accepts a little more than the printer emits: parentheses,
//! integer powers of parenthesised expressions and rational literals `p/q`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::{AlgebraError, Monomial, MonomialOrder, MultiPoly, Rational, Ring};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms = self.sorted_terms(&MonomialOrder::DegRevLex);
        for (k, (m, c)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let vars: Vec<String> = m
                .support()
                .map(|(i, e)| {
                    if e == 1 {
                        self.ring().name(i).to_string()
                    } else {
                        format!("{}^{}", self.ring().name(i), e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{a}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

pub(super) fn parse(ring: &Ring, text: &str) -> Result<MultiPoly, AlgebraError> {
    let mut p = Parser {
        ring,
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input").into());
    }
    Ok(e)
}

struct Parser<'a> {
    ring: &'a Ring,
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<MultiPoly, AlgebraError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -self.term()?
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly, AlgebraError> {
        let mut acc = self.power()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.power()?;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<MultiPoly, AlgebraError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.integer()?;
            let e: u32 = e
                .try_into()
                .map_err(|_| self.err("exponent must be a small non-negative integer"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<MultiPoly, AlgebraError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`").into());
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.power()?)
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.integer()?;
                let mut value = Rational::from_integer(num);
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    self.skip_ws();
                    let den = self.integer()?;
                    if den.is_zero() {
                        return Err(self.err("zero denominator").into());
                    }
                    value /= Rational::from_integer(den);
                }
                Ok(MultiPoly::constant(self.ring, value))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                let i = self.ring.require(name)?;
                Ok(MultiPoly::monomial(
                    self.ring,
                    Monomial::var(i),
                    Rational::one(),
                ))
            }
            _ => Err(self.err("expected a number, variable or `(`").into()),
        }
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected digits"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        s.parse().map_err(|_| self.err("bad integer"))
    }
}

/// Variable names appearing in `text`, in order of first appearance.
pub fn scan_variables(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_alphabetic() || b[i] == b'_' {
            let s = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            let name = &text[s..i];
            if !out.iter().any(|n| n == name) {
                out.push(name.to_string());
            }
        } else if b[i].is_ascii_digit() {
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_then_parse_is_identity() {
        let r = Ring::new(["x", "y", "u1_10"]);
        let p = r.parse("3/4*x^2*y - u1_10 + 7 - x*y^3").unwrap();
        let s = p.to_string();
        assert_eq!(r.parse(&s).unwrap(), p);
        assert_eq!(s, "-x*y^3 + 3/4*x^2*y - u1_10 + 7");
    }

    #[test]
    fn parse_errors_are_located() {
        let r = Ring::new(["x"]);
        assert!(matches!(r.parse("x +"), Err(AlgebraError::Parse(_))));
        assert!(matches!(
            r.parse("q"),
            Err(AlgebraError::UnknownVariable(_))
        ));
        assert!(matches!(r.parse("1/0"), Err(AlgebraError::Parse(_))));
    }

    #[test]
    fn spaced_coefficient_form() {
        let r = Ring::new(["v1", "v2"]);
        assert_eq!(
            r.parse("2 * v1^2*v2 + -1/3 * v2").unwrap(),
            r.parse("2*v1^2*v2 - 1/3*v2").unwrap()
        );
    }

    #[test]
    fn scans_names_in_order() {
        assert_eq!(scan_variables("y^2 + 3*x1*y - 2/3"), vec!["y", "x1"]);
    }
}
