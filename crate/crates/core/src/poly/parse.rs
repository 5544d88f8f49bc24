//! Recursive-descent parser for polynomial expressions.
//!
//! ```text
//! expr       := ['-'] term (('+' | '-') term)*
//! term       := factor ('*' factor)*
//! factor     := '-' factor | base ('^' posint)?
//! base       := rational | identifier | '(' expr ')'
//! rational   := int ('/' posint)?
//! identifier := name ('(' arglist ')')?
//! ```
//!
//! The argument list of an identifier is kept verbatim (minus whitespace) as
//! part of the variable name, so `pi(X3=1|X1=2,X2=1)` is one variable.

use num_bigint::BigInt;
use num_traits::Zero;

use super::{PolyError, VarKind, VariableTable};
use crate::{Poly, Rational};

/// Parses against a frozen table; unknown identifiers are errors.
pub fn parse_polynomial(text: &str, table: &VariableTable) -> Result<Poly, PolyError> {
    parse_with(text, &mut |name, _| {
        table
            .get(name)
            .map(Poly::var)
            .ok_or_else(|| PolyError::UnknownIdentifier(name.to_string()))
    })
}

/// Parses and registers unknown identifiers with the given kind.
pub fn parse_polynomial_mut(text: &str, table: &mut VariableTable, kind: VarKind) -> Result<Poly, PolyError> {
    parse_with(text, &mut |name, _| Ok(Poly::var(table.intern(name, kind))))
}

/// Parses with a caller-supplied identifier resolver, which receives the
/// full identifier text and its byte offset and may expand it into any
/// polynomial.
pub fn parse_with(
    text: &str,
    resolve: &mut dyn FnMut(&str, usize) -> Result<Poly, PolyError>,
) -> Result<Poly, PolyError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, resolve };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}


struct Parser<'a, 'r> {
    src: &'a [u8],
    pos: usize,
    resolve: &'r mut dyn FnMut(&str, usize) -> Result<Poly, PolyError>,
}

impl Parser<'_, '_> {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Syntax {
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

    fn expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let t = self.term()?;
            acc = if c == b'+' { &acc + &t } else { &acc - &t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly, PolyError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let digits = self.digits();
            if digits.is_empty() {
                return Err(self.error("expected exponent"));
            }
            let e: u32 = digits.parse().map_err(|_| PolyError::Syntax {
                pos: start,
                msg: "exponent out of range".into(),
            })?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn base(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => self.rational(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error("expected a number, identifier or `(`")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn rational(&mut self) -> Result<Poly, PolyError> {
        let start = self.pos;
        let num: BigInt = self.digits().parse().expect("digits");
        if self.src.get(self.pos) == Some(&b'.') {
            return Err(self.error("decimal literals are not allowed"));
        }
        let save = self.pos;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let d = self.digits();
            if d.is_empty() {
                return Err(self.error("expected denominator"));
            }
            let den: BigInt = d.parse().expect("digits");
            if den.is_zero() {
                return Err(PolyError::ZeroDenominator { pos: start });
            }
            return Ok(Poly::constant(Rational::new(num, den)));
        }
        self.pos = save;
        Ok(Poly::constant(Rational::from_integer(num)))
    }

    fn identifier(&mut self) -> Result<Poly, PolyError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let mut name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
        let save = self.pos;
        if self.peek() == Some(b'(') {
            let open = self.pos;
            let close = self.src[open..]
                .iter()
                .position(|&b| b == b')')
                .map(|i| open + i)
                .ok_or_else(|| self.error("unterminated argument list"))?;
            let inner = &self.src[open + 1..close];
            if inner.contains(&b'(') {
                return Err(PolyError::Syntax {
                    pos: open,
                    msg: "nested parentheses in argument list".into(),
                });
            }
            let args: String = String::from_utf8_lossy(inner).chars().filter(|c| !c.is_whitespace()).collect();
            name.push('(');
            name.push_str(&args);
            name.push(')');
            self.pos = close + 1;
        } else {
            self.pos = save;
        }
        (self.resolve)(&name, start)
    }
}
