//! Exact computer algebra: multivariate polynomials and rational functions
//! over the rationals, substitution, reduction modulo `c^2 + s^2 - 1` and
//! exact linear algebra.
//!
//! Monomials are ordered graded-lexicographically with the symbol interning
//! order as variable order. Textual output does not depend on that order.

mod gcd;
mod matrix;
mod parse;
mod poly;
mod ratfun;
mod symbol;

pub use gcd::{content_in, gcd};
pub use matrix::RatMatrix;
pub use parse::parse_with;
pub use poly::{Monomial, Poly};
pub use ratfun::{substitute_poly, RatFun};
pub use symbol::{Symbol, SymbolKind};

pub(crate) use poly::rat;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid parameter assignment: {0}")]
    InvalidAssignment(String),
    #[error("evaluation point is a pole")]
    Pole,
    #[error("symbol {0} is not bound")]
    UnboundSymbol(String),
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("invalid symbol name {0:?}")]
    InvalidSymbolName(String),
    #[error("symbol {name} already interned as {existing:?}, requested {requested:?}")]
    SymbolKindMismatch {
        name: String,
        existing: SymbolKind,
        requested: SymbolKind,
    },
    #[error("singular matrix")]
    Singular,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Cosine and sine symbols of the symbolic rotation.
pub fn trig_symbols() -> (Symbol, Symbol) {
    (
        Symbol::named("c", SymbolKind::Trig),
        Symbol::named("s", SymbolKind::Trig),
    )
}
