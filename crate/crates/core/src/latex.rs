//! LaTeX rendering of symbols, moments and rational functions.

use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::symkernel::{Monomial, Poly, RatFun, Symbol};

fn greek(name: &str) -> String {
    match name {
        "rho" => r"\rho".into(),
        "qx" => "q_x".into(),
        "qy" => "q_y".into(),
        "qz" => "q_z".into(),
        "eps" => r"\varepsilon".into(),
        "eps2" => r"\varepsilon_2".into(),
        "phix" => r"\varphi_x".into(),
        "phiy" => r"\varphi_y".into(),
        "xx" => r"\varphi_{xx}".into(),
        "xy" => r"\varphi_{xy}".into(),
        other => format!(r"\mathrm{{{}}}", other.replace('_', r"\_")),
    }
}

/// LaTeX name of a moment.
pub fn moment_latex(name: &str) -> String {
    greek(name)
}

/// LaTeX name of a symbol: `E_y_w`, `sigma_y`, `lambda` and `dt` get their
/// conventional forms.
pub fn symbol_latex(sym: Symbol) -> String {
    let name = sym.name();
    match name.as_str() {
        "lambda" => return r"\lambda".into(),
        "dt" => return r"\Delta t".into(),
        "c" => return r"\cos\theta".into(),
        "s" => return r"\sin\theta".into(),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("E_") {
        if let Some((y, w)) = rest.split_once('_') {
            return format!("E_{{{}}}^{{{}}}", greek(y), greek(w));
        }
    }
    if let Some(y) = name.strip_prefix("sigma_") {
        return format!(r"\sigma_{{{}}}", greek(y));
    }
    format!(r"\mathrm{{{}}}", name.replace('_', r"\_"))
}

fn monomial_latex(m: &Monomial) -> String {
    let mut parts: Vec<(String, u16)> = m.factors().map(|(s, e)| (symbol_latex(s), e)).collect();
    parts.sort();
    parts
        .into_iter()
        .map(|(s, e)| if e == 1 { s } else { format!("{s}^{{{e}}}") })
        .collect::<Vec<_>>()
        .join(" ")
}

fn coeff_latex(c: &BigRational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!(r"\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

pub fn poly_latex(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(&Monomial, &BigRational)> = p.terms().collect();
    terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(monomial_latex(a.0).cmp(&monomial_latex(b.0))));
    let mut out = String::new();
    for (k, (m, c)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if m.is_one() {
            out.push_str(&coeff_latex(&a));
        } else if a.is_one() {
            out.push_str(&monomial_latex(m));
        } else {
            out.push_str(&coeff_latex(&a));
            out.push(' ');
            out.push_str(&monomial_latex(m));
        }
    }
    out
}

pub fn ratfun_latex(f: &RatFun) -> String {
    if f.is_poly() {
        poly_latex(f.num())
    } else {
        format!(r"\frac{{{}}}{{{}}}", poly_latex(f.num()), poly_latex(f.den()))
    }
}
