//! Polynomial expressions in x, y, z.
//!
//! Grammar (usual precedence, explicit `*` only):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' | 'y' | 'z' | 'pi' | 'sqrt' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Division and `sqrt` accept constant operands only.

use thiserror::Error;

use crate::moments::PolynomialField;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("expression error at {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolyExpr {
    Const(f64),
    Pi,
    Var(usize),
    Sqrt(Box<PolyExpr>),
    Neg(Box<PolyExpr>),
    Add(Box<PolyExpr>, Box<PolyExpr>),
    Sub(Box<PolyExpr>, Box<PolyExpr>),
    Mul(Box<PolyExpr>, Box<PolyExpr>),
    Div(Box<PolyExpr>, Box<PolyExpr>, usize),
    Pow(Box<PolyExpr>, u32),
}

impl PolyExpr {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error(format!("unexpected '{}'", p.src[p.pos] as char)));
        }
        Ok(e)
    }

    /// Expands into a polynomial.
    pub fn lower(&self) -> Result<PolynomialField, ParseError> {
        Ok(match self {
            Self::Const(c) => PolynomialField::constant(*c),
            Self::Pi => PolynomialField::constant(std::f64::consts::PI),
            Self::Var(a) => PolynomialField::coordinate(*a),
            Self::Sqrt(e) => {
                let v = constant_value(&e.lower()?).ok_or_else(|| ParseError {
                    pos: 0,
                    msg: "sqrt needs a constant argument".into(),
                })?;
                if v < 0.0 {
                    return Err(ParseError {
                        pos: 0,
                        msg: format!("sqrt of negative {v}"),
                    });
                }
                PolynomialField::constant(v.sqrt())
            }
            Self::Neg(e) => e.lower()?.scale(-1.0),
            Self::Add(a, b) => a.lower()?.add(&b.lower()?),
            Self::Sub(a, b) => a.lower()?.add(&b.lower()?.scale(-1.0)),
            Self::Mul(a, b) => a.lower()?.mul(&b.lower()?),
            Self::Div(a, b, pos) => {
                let d = constant_value(&b.lower()?).ok_or_else(|| ParseError {
                    pos: *pos,
                    msg: "division by a non-constant".into(),
                })?;
                if d == 0.0 {
                    return Err(ParseError {
                        pos: *pos,
                        msg: "division by zero".into(),
                    });
                }
                a.lower()?.scale(1.0 / d)
            }
            Self::Pow(e, k) => e.lower()?.pow(*k),
        })
    }
}

fn constant_value(f: &PolynomialField) -> Option<f64> {
    let mut out = 0.0;
    for (c, e) in f.terms() {
        if e != [0, 0, 0] {
            return None;
        }
        out = c;
    }
    Some(out)
}

/// Parses and expands an expression.
pub fn parse_polynomial(text: &str) -> Result<PolynomialField, ParseError> {
    PolyExpr::parse(text)?.lower()
}

/// Canonical text of a polynomial; parsing it gives the same polynomial.
pub fn format_polynomial(f: &PolynomialField) -> String {
    let mut terms: Vec<(f64, [u32; 3])> = f.terms().filter(|(c, _)| *c != 0.0).collect();
    if terms.is_empty() {
        return "0".into();
    }
    // higher degree first, then lexicographic exponents descending
    terms.sort_by(|a, b| {
        let da: u32 = a.1.iter().sum();
        let db: u32 = b.1.iter().sum();
        db.cmp(&da).then(b.1.cmp(&a.1))
    });
    let mut out = String::new();
    for (i, (c, e)) in terms.iter().enumerate() {
        let mag = c.abs();
        if i == 0 {
            if *c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if *c < 0.0 { " - " } else { " + " });
        }
        let mut factors = Vec::new();
        if mag != 1.0 || *e == [0, 0, 0] {
            factors.push(format!("{mag:?}"));
        }
        for (a, name) in ["x", "y", "z"].iter().enumerate() {
            match e[a] {
                0 => {}
                1 => factors.push(name.to_string()),
                k => factors.push(format!("{name}^{k}")),
            }
        }
        out.push_str(&factors.join("*"));
    }
    out
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.into(),
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

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<PolyExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = PolyExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = PolyExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<PolyExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = PolyExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    let at = self.pos;
                    self.pos += 1;
                    lhs = PolyExpr::Div(Box::new(lhs), Box::new(self.unary()?), at);
                }
                Some(c) if c.is_ascii_alphanumeric() || c == b'(' || c == b'.' => {
                    return Err(self.error("implicit multiplication; write '*'"));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<PolyExpr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(PolyExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<PolyExpr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a non-negative integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let k = text.parse::<u32>().map_err(|_| ParseError {
            pos: start,
            msg: "exponent too large".into(),
        })?;
        Ok(PolyExpr::Pow(Box::new(base), k))
    }

    fn atom(&mut self) -> Result<PolyExpr, ParseError> {
        let c = self
            .peek()
            .ok_or_else(|| self.error("unexpected end of expression"))?;
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                self.pos += 1;
            }
            let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii letters");
            return match word {
                "x" => Ok(PolyExpr::Var(0)),
                "y" => Ok(PolyExpr::Var(1)),
                "z" => Ok(PolyExpr::Var(2)),
                "pi" => Ok(PolyExpr::Pi),
                "sqrt" => {
                    self.expect(b'(')?;
                    let e = self.expr()?;
                    self.expect(b')')?;
                    Ok(PolyExpr::Sqrt(Box::new(e)))
                }
                other => Err(ParseError {
                    pos: start,
                    msg: format!("unknown name '{other}'"),
                }),
            };
        }
        Err(self.error(format!("unexpected '{}'", c as char)))
    }

    fn number(&mut self) -> Result<PolyExpr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if before == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>()
            .map(PolyExpr::Const)
            .map_err(|_| ParseError {
                pos: start,
                msg: format!("bad number '{text}'"),
            })
    }
}
