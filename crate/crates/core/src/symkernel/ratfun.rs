use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::gcd::gcd;
use super::{Poly, SymError, Symbol};

/// Reduced fraction of polynomials: `gcd(num, den) = 1` and the leading
/// coefficient of `den` is one, so equal functions are structurally equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl Default for RatFun {
    fn default() -> Self {
        RatFun::zero()
    }
}

impl RatFun {
    pub fn zero() -> Self {
        RatFun {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        RatFun::from_poly(Poly::one())
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFun {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        RatFun::from_poly(Poly::from_int(n))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        RatFun::from_poly(Poly::from_ratio(n, d))
    }

    pub fn constant(c: BigRational) -> Self {
        RatFun::from_poly(Poly::constant(c))
    }

    pub fn var(s: Symbol) -> Self {
        RatFun::from_poly(Poly::var(s))
    }

    /// Builds `num / den`, reducing to normal form.
    pub fn new(num: Poly, den: Poly) -> Result<Self, SymError> {
        if den.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(RatFun::normalized(num, den))
    }

    fn normalized(num: Poly, den: Poly) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return RatFun::zero();
        }
        if den.is_constant() {
            let c = den.constant_value().unwrap();
            return if c.is_one() {
                RatFun { num, den }
            } else {
                RatFun {
                    num: num.scale(&c.recip()),
                    den: Poly::one(),
                }
            };
        }
        let (num, den) = if den.is_monomial() {
            // gcd with a monomial is a monomial
            let (dm, _) = den.leading().unwrap();
            let g = num.monomial_content().gcd(dm);
            if g.is_one() {
                (num, den)
            } else {
                (
                    num.div_monomial(&g).unwrap(),
                    den.div_monomial(&g).unwrap(),
                )
            }
        } else {
            let g = gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        let lc = den.leading().unwrap().1.clone();
        if lc.is_one() {
            RatFun { num, den }
        } else {
            let inv = lc.recip();
            RatFun {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn into_parts(self) -> (Poly, Poly) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_poly(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        self.is_poly().then_some(&self.num)
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_poly() {
            self.num.constant_value()
        } else {
            None
        }
    }

    pub fn add_ref(&self, other: &RatFun) -> RatFun {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && other.den.is_one() {
            return RatFun::from_poly(&self.num + &other.num);
        }
        if self.den == other.den {
            return RatFun::normalized(&self.num + &other.num, self.den.clone());
        }
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        RatFun::normalized(num, &self.den * &other.den)
    }

    pub fn sub_ref(&self, other: &RatFun) -> RatFun {
        self.add_ref(&other.neg_ref())
    }

    pub fn neg_ref(&self) -> RatFun {
        RatFun {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn mul_ref(&self, other: &RatFun) -> RatFun {
        if self.is_zero() || other.is_zero() {
            return RatFun::zero();
        }
        if self.den.is_one() && other.den.is_one() {
            return RatFun::from_poly(&self.num * &other.num);
        }
        RatFun::normalized(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn scale(&self, c: &BigRational) -> RatFun {
        if c.is_zero() {
            return RatFun::zero();
        }
        RatFun {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn mul_poly(&self, p: &Poly) -> RatFun {
        if self.den.is_one() {
            RatFun::from_poly(&self.num * p)
        } else {
            RatFun::normalized(&self.num * p, self.den.clone())
        }
    }

    pub fn inv(&self) -> Result<RatFun, SymError> {
        RatFun::new(self.den.clone(), self.num.clone())
    }

    pub fn div_ref(&self, other: &RatFun) -> Result<RatFun, SymError> {
        if other.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(RatFun::normalized(
            &self.num * &other.den,
            &self.den * &other.num,
        ))
    }

    pub fn pow(&self, e: i32) -> Result<RatFun, SymError> {
        if e >= 0 {
            Ok(RatFun {
                num: self.num.pow(e as u32),
                den: self.den.pow(e as u32),
            })
        } else {
            self.inv()?.pow(-e)
        }
    }

    /// Simultaneous substitution of symbols by rational functions. Unbound
    /// symbols pass through.
    pub fn substitute(&self, bindings: &HashMap<Symbol, RatFun>) -> Result<RatFun, SymError> {
        let num = substitute_poly(&self.num, bindings);
        if self.den.is_one() {
            return Ok(num);
        }
        let den = substitute_poly(&self.den, bindings);
        if den.is_zero() {
            return Err(SymError::InvalidAssignment(format!(
                "denominator {} vanishes identically",
                self.den
            )));
        }
        Ok(num.div_ref(&den).expect("checked nonzero"))
    }

    /// Exact value at a point binding every symbol of the function.
    pub fn eval(&self, point: &HashMap<Symbol, BigRational>) -> Result<BigRational, SymError> {
        let d = self.den.eval(point)?;
        if d.is_zero() {
            return Err(SymError::Pole);
        }
        Ok(self.num.eval(point)? / d)
    }

    pub fn eval_partial(&self, point: &HashMap<Symbol, BigRational>) -> Result<RatFun, SymError> {
        let num = self.num.eval_partial(point);
        if self.den.is_one() {
            return Ok(RatFun::from_poly(num));
        }
        let den = self.den.eval_partial(point);
        if den.is_zero() {
            return Err(SymError::Pole);
        }
        Ok(RatFun::normalized(num, den))
    }

    pub fn symbols(&self) -> std::collections::BTreeSet<Symbol> {
        let mut s = self.num.symbols();
        s.extend(self.den.symbols());
        s
    }

    pub fn to_canonical_string(&self) -> String {
        if self.den.is_one() {
            return self.num.to_canonical_string();
        }
        let wrap = |p: &Poly| {
            if p.num_terms() > 1 || p.leading().is_some_and(|(_, c)| !c.is_integer() || c < &BigRational::zero())
            {
                format!("({p})")
            } else {
                p.to_canonical_string()
            }
        };
        format!("{}/{}", wrap(&self.num), wrap(&self.den))
    }
}

/// Substitutes into a polynomial, caching powers of each bound value.
pub fn substitute_poly(p: &Poly, bindings: &HashMap<Symbol, RatFun>) -> RatFun {
    let mut cache: HashMap<(Symbol, u16), RatFun> = HashMap::new();
    let mut poly_part = Poly::zero();
    // Terms with rational bindings are grouped by their substituted denominator.
    let mut frac_parts: Vec<RatFun> = Vec::new();
    let mut by_den: HashMap<Poly, Poly> = HashMap::new();
    for (m, c) in p.terms() {
        let mut free = Vec::with_capacity(m.exps().len());
        free.extend_from_slice(m.exps());
        let mut acc = RatFun::constant(c.clone());
        for (s, e) in m.factors() {
            if let Some(v) = bindings.get(&s) {
                free[s.index()] = 0;
                let pw = cache
                    .entry((s, e))
                    .or_insert_with(|| v.pow(e as i32).expect("nonnegative power"))
                    .clone();
                acc = acc.mul_ref(&pw);
            }
        }
        let rest = super::Monomial::from_exps(free);
        let (n, d) = acc.into_parts();
        let n = n.mul_monomial(&rest, &BigRational::one());
        if d.is_one() {
            poly_part.add_assign_ref(&n);
        } else {
            by_den.entry(d).or_default().add_assign_ref(&n);
        }
    }
    for (d, n) in by_den {
        frac_parts.push(RatFun::normalized(n, d));
    }
    // Deterministic summation order.
    frac_parts.sort_by_key(|f| f.to_canonical_string());
    let mut out = RatFun::from_poly(poly_part);
    for f in frac_parts {
        out = out.add_ref(&f);
    }
    out
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

impl fmt::Debug for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

impl From<Poly> for RatFun {
    fn from(p: Poly) -> Self {
        RatFun::from_poly(p)
    }
}

impl Add for &RatFun {
    type Output = RatFun;
    fn add(self, rhs: &RatFun) -> RatFun {
        self.add_ref(rhs)
    }
}

impl Sub for &RatFun {
    type Output = RatFun;
    fn sub(self, rhs: &RatFun) -> RatFun {
        self.sub_ref(rhs)
    }
}

impl Mul for &RatFun {
    type Output = RatFun;
    fn mul(self, rhs: &RatFun) -> RatFun {
        self.mul_ref(rhs)
    }
}

/// Panics on division by zero; use [`RatFun::div_ref`] for a checked quotient.
impl Div for &RatFun {
    type Output = RatFun;
    fn div(self, rhs: &RatFun) -> RatFun {
        self.div_ref(rhs).expect("division by zero rational function")
    }
}

impl Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        self.neg_ref()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for RatFun {
            type Output = RatFun;
            fn $f(self, rhs: RatFun) -> RatFun {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::{rat, SymbolKind};

    fn sym(n: &str) -> Symbol {
        Symbol::named(n, SymbolKind::Parameter)
    }

    #[test]
    fn halves_add_to_whole() {
        let x = RatFun::var(sym("rf_t_x"));
        let half = RatFun::from_ratio(1, 2);
        assert_eq!(&(&half * &x) + &(&half * &x), x);
    }

    #[test]
    fn gcd_cancellation() {
        let x = Poly::var(sym("rf_t_x"));
        let num = &x.pow(2) - &Poly::one();
        let den = &x - &Poly::one();
        let f = RatFun::new(num, den).unwrap();
        assert_eq!(f, RatFun::from_poly(&x + &Poly::one()));
    }

    #[test]
    fn inverse_pair() {
        let sigma = RatFun::var(sym("rf_t_sigma"));
        let a = &sigma + &RatFun::from_ratio(1, 2);
        let b = RatFun::one().div_ref(&a).unwrap();
        assert!((&a * &b).is_one());
        // denominator normalized monic
        assert_eq!(b.den().leading().unwrap().1, &rat(1, 1));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let x = RatFun::var(sym("rf_t_x"));
        assert!(matches!(x.div_ref(&RatFun::zero()), Err(SymError::DivisionByZero)));
        assert!(RatFun::new(Poly::one(), Poly::zero()).is_err());
    }

    #[test]
    fn substitution_examples() {
        let c = Symbol::named("c", SymbolKind::Trig);
        let s = Symbol::named("s", SymbolKind::Trig);
        let circle = &RatFun::var(c).pow(2).unwrap() + &RatFun::var(s).pow(2).unwrap();
        let b: HashMap<_, _> = [(c, RatFun::from_ratio(3, 5)), (s, RatFun::from_ratio(4, 5))].into();
        assert!(circle.substitute(&b).unwrap().is_one());

        let sigma = sym("rf_t_sigma");
        let s_of = RatFun::one()
            .div_ref(&(&RatFun::var(sigma) + &RatFun::from_ratio(1, 2)))
            .unwrap();
        let b: HashMap<_, _> = [(sigma, RatFun::from_ratio(1, 2))].into();
        assert!(s_of.substitute(&b).unwrap().is_one());

        let b: HashMap<_, _> = [(sigma, RatFun::from_ratio(-1, 2))].into();
        assert!(matches!(s_of.substitute(&b), Err(SymError::InvalidAssignment(_))));
    }

    #[test]
    fn eval_examples() {
        let sigma = sym("rf_t_sigma");
        let f = RatFun::var(sigma)
            .div_ref(&(&RatFun::var(sigma) + &RatFun::one()))
            .unwrap();
        let pt: HashMap<_, _> = [(sigma, rat(1, 1))].into();
        assert_eq!(f.eval(&pt).unwrap(), rat(1, 2));
        let pole: HashMap<_, _> = [(sigma, rat(-1, 1))].into();
        assert!(matches!(f.eval(&pole), Err(SymError::Pole)));
    }
}
