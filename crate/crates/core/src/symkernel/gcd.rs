//! Multivariate polynomial gcd over the rationals by recursive primitive
//! pseudo-remainder sequences.

use super::{Poly, Symbol};

/// Monic gcd (leading coefficient one); `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let mg = ma.gcd(&mb);
    let a = a.div_monomial(&ma).expect("monomial content divides");
    let b = b.div_monomial(&mb).expect("monomial content divides");
    let g = gcd_no_monomial(&a, &b);
    g.mul_monomial(&mg, &num_traits::One::one()).monic()
}

fn gcd_no_monomial(a: &Poly, b: &Poly) -> Poly {
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a.is_monomial() || b.is_monomial() {
        // monomial content already removed, so a monomial here is a constant multiple of 1
        return Poly::one();
    }
    let va = a.symbols();
    let vb = b.symbols();
    // A variable present in only one argument cannot occur in the gcd.
    if let Some(&x) = va.difference(&vb).next() {
        let ca = content_in(a, x);
        return gcd(&ca, b);
    }
    if let Some(&x) = vb.difference(&va).next() {
        let cb = content_in(b, x);
        return gcd(a, &cb);
    }
    // Eliminate the shared variable of lowest degree first.
    let x = *va
        .iter()
        .min_by_key(|&&s| a.degree_in(s).max(b.degree_in(s)))
        .expect("non-constant");
    univariate_gcd(a, b, x)
}

fn gcd_list(items: &[Poly]) -> Poly {
    let mut g = Poly::zero();
    for p in items {
        if g.is_one() {
            break;
        }
        g = gcd(&g, p);
    }
    g
}

/// Gcd of the coefficients of `p` viewed as a polynomial in `x`.
pub fn content_in(p: &Poly, x: Symbol) -> Poly {
    gcd_list(&p.as_univariate(x))
}

fn univariate_gcd(a: &Poly, b: &Poly, x: Symbol) -> Poly {
    let ua = a.as_univariate(x);
    let ub = b.as_univariate(x);
    let ca = gcd_list(&ua);
    let cb = gcd_list(&ub);
    let c = gcd(&ca, &cb);
    let mut p = primitive_part(ua, &ca);
    let mut q = primitive_part(ub, &cb);
    if p.len() < q.len() {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = pseudo_rem(&p, &q);
        if r.is_empty() {
            break;
        }
        if r.len() == 1 {
            q = vec![Poly::one()];
            break;
        }
        let cr = gcd_list(&r);
        p = q;
        q = primitive_part(r, &cr);
    }
    let g = Poly::from_univariate(x, &q);
    &c * &g
}

fn primitive_part(coeffs: Vec<Poly>, content: &Poly) -> Vec<Poly> {
    if content.is_one() {
        return coeffs;
    }
    coeffs
        .iter()
        .map(|c| c.div_exact(content).expect("content divides coefficients"))
        .collect()
}

/// Pseudo-remainder of `p` by `q` as coefficient vectors in the main variable,
/// without the final power of the leading coefficient (only the primitive part
/// of the result matters). Empty vector means zero.
fn pseudo_rem(p: &[Poly], q: &[Poly]) -> Vec<Poly> {
    let mut r: Vec<Poly> = p.to_vec();
    trim(&mut r);
    let dq = q.len() - 1;
    let lq = &q[dq];
    while !r.is_empty() && r.len() > dq {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        let g = gcd(&lr, lq);
        let (fr, fq) = if g.is_one() {
            (lq.clone(), lr)
        } else {
            (
                lq.div_exact(&g).expect("gcd divides"),
                lr.div_exact(&g).expect("gcd divides"),
            )
        };
        // r <- fr * r - fq * x^(dr - dq) * q
        for c in r.iter_mut() {
            *c = &*c * &fr;
        }
        let shift = dr - dq;
        for (k, qc) in q.iter().enumerate() {
            let t = &fq * qc;
            r[k + shift].sub_assign_ref(&t);
        }
        trim(&mut r);
    }
    r
}

fn trim(v: &mut Vec<Poly>) {
    while v.last().is_some_and(|p| p.is_zero()) {
        v.pop();
    }
}
