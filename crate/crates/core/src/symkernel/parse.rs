//! Reader for the canonical text form (and ordinary arithmetic expressions):
//! `+ - * / ^`, parentheses, integer or decimal literals and identifiers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Poly, RatFun, SymError, Symbol};

/// Parses `text`, resolving identifiers through `resolve`.
pub fn parse_with(
    text: &str,
    resolve: &dyn Fn(&str) -> Option<Symbol>,
) -> Result<RatFun, SymError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        resolve,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(v)
}

impl RatFun {
    /// Parses an expression over already-interned symbols.
    pub fn parse(text: &str) -> Result<RatFun, SymError> {
        parse_with(text, &Symbol::lookup)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    resolve: &'a dyn Fn(&str) -> Option<Symbol>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> SymError {
        SymError::Parse {
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

    fn expr(&mut self) -> Result<RatFun, SymError> {
        // polynomial terms are merged in place; long sums stay linear
        let mut poly = Poly::zero();
        let mut rest: Option<RatFun> = None;
        let mut add = |t: RatFun, neg: bool| match t.den().constant_value() {
            Some(d) => {
                let inv = if neg { -d.recip() } else { d.recip() };
                poly.add_assign_ref(&t.num().scale(&inv));
            }
            None => {
                let t = if neg { t.neg_ref() } else { t };
                rest = Some(match rest.take() {
                    Some(r) => &r + &t,
                    None => t,
                });
            }
        };
        add(self.term()?, false);
        while let Some(c) = self.peek() {
            match c {
                b'+' | b'-' => {
                    self.pos += 1;
                    add(self.term()?, c == b'-');
                }
                _ => break,
            }
        }
        let p = RatFun::from_poly(poly);
        Ok(match rest {
            Some(r) => &r + &p,
            None => p,
        })
    }

    fn term(&mut self) -> Result<RatFun, SymError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                b'/' => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = acc.div_ref(&rhs)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RatFun, SymError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RatFun, SymError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let e: i32 = digits.parse().map_err(|_| self.err("expected integer exponent"))?;
            return base.pow(if neg { -e } else { e });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RatFun, SymError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let sym = (self.resolve)(name).ok_or_else(|| SymError::UnknownSymbol(name.to_string()))?;
                Ok(RatFun::var(sym))
            }
            _ => Err(self.err("expected number, symbol or '('")),
        }
    }

    fn number(&mut self) -> Result<RatFun, SymError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        let mut frac_part = String::new();
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac_part = std::str::from_utf8(&self.src[fs..self.pos]).unwrap().to_string();
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(self.err("malformed number"));
        }
        let digits = format!("{int_part}{frac_part}");
        let n: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let mut d = BigInt::one();
        for _ in 0..frac_part.len() {
            d *= 10;
        }
        if d.is_zero() {
            return Err(self.err("malformed number"));
        }
        Ok(RatFun::constant(BigRational::new(n, d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::SymbolKind;

    #[test]
    fn parses_arithmetic() {
        let x = Symbol::named("parse_t_x", SymbolKind::Parameter);
        let f = RatFun::parse("3/2*parse_t_x^2 - (parse_t_x + 1)/2 + 0.25").unwrap();
        let xv = RatFun::var(x);
        let expected = &(&(&RatFun::from_ratio(3, 2) * &xv.pow(2).unwrap())
            - &(&(&xv + &RatFun::one()) * &RatFun::from_ratio(1, 2)))
            + &RatFun::from_ratio(1, 4);
        assert_eq!(f, expected);
    }

    #[test]
    fn canonical_text_round_trips() {
        Symbol::named("parse_t_y", SymbolKind::Parameter);
        let f = RatFun::parse("(parse_t_y^2 - 1/3)/(2*parse_t_y + 1)").unwrap();
        let back = RatFun::parse(&f.to_canonical_string()).unwrap();
        assert_eq!(f, back);
        let g = RatFun::parse("-parse_t_y^-2").unwrap();
        assert_eq!(RatFun::parse(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(RatFun::parse("no_such_symbol_xyz"), Err(SymError::UnknownSymbol(_))));
        assert!(matches!(RatFun::parse("1 +"), Err(SymError::Parse { .. })));
        assert!(matches!(RatFun::parse("1/0"), Err(SymError::DivisionByZero)));
        assert!(RatFun::parse("(1").is_err());
    }
}
