//! Branch-splitting solver for the extracted condition systems, used to
//! compare them with the bullets up to algebraic equivalence.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};

use super::ConditionError;
use crate::isotropy::{is_positive_symbol, normalize_condition};
use crate::symkernel::{content_in, substitute_poly, Poly, RatFun, Symbol};

/// One solution component: each bound symbol as a function of free ones.
pub type Solution = HashMap<Symbol, RatFun>;

const MAX_BRANCHES: usize = 4096;

/// `p` cannot vanish when every positive symbol is positive.
pub fn sign_definite(p: &Poly) -> bool {
    if p.is_zero() {
        return false;
    }
    if !p.symbols().into_iter().all(is_positive_symbol) {
        return false;
    }
    let mut signs = p.terms().map(|(_, c)| c.is_positive());
    let first = signs.next().expect("nonzero");
    signs.all(|s| s == first)
}

/// Splits off factors found as contents with respect to single variables.
pub fn split_factors(p: &Poly) -> Vec<Poly> {
    for x in p.symbols() {
        let c = content_in(p, x);
        if !c.is_constant() {
            let rest = p.div_exact(&c).expect("content divides");
            let mut out = split_factors(&c);
            out.extend(split_factors(&rest));
            return out;
        }
    }
    vec![p.clone()]
}

fn compose(bindings: &Solution, x: Symbol, value: RatFun) -> Result<Solution, ConditionError> {
    let single: Solution = [(x, value.clone())].into_iter().collect();
    let mut out = Solution::new();
    for (k, v) in bindings {
        out.insert(*k, v.substitute(&single)?);
    }
    out.insert(x, value);
    Ok(out)
}

fn reduce(polys: &[Poly], bindings: &Solution) -> Option<Vec<Poly>> {
    let mut seen = BTreeMap::new();
    for p in polys {
        let q = substitute_poly(p, bindings);
        let Some(n) = normalize_condition(q.num()) else { continue };
        if n.is_constant() || sign_definite(&n) {
            return None;
        }
        seen.entry(n.to_canonical_string()).or_insert(n);
    }
    Some(seen.into_values().collect())
}

/// Solves `polys = 0` over positive `sigma`s by splitting factors and
/// eliminating one linear variable at a time. `preferred` orders the
/// variables to eliminate first.
pub fn solve_system(polys: &[Poly], preferred: &[Symbol]) -> Result<Vec<Solution>, ConditionError> {
    let mut out = Vec::new();
    descend(polys.to_vec(), Solution::new(), preferred, &mut out)?;
    let mut unique = BTreeMap::new();
    for s in out {
        let mut key: Vec<String> = s.iter().map(|(k, v)| format!("{}={}", k.name(), v.to_canonical_string())).collect();
        key.sort();
        unique.entry(key.join(";")).or_insert(s);
    }
    Ok(unique.into_values().collect())
}

fn descend(
    polys: Vec<Poly>,
    bindings: Solution,
    preferred: &[Symbol],
    out: &mut Vec<Solution>,
) -> Result<(), ConditionError> {
    if out.len() > MAX_BRANCHES {
        return Err(ConditionError::NotSolvable("system".into(), "too many branches".into()));
    }
    let Some(reduced) = reduce(&polys, &bindings) else {
        return Ok(());
    };
    let Some(p) = reduced.iter().min_by_key(|p| (p.num_terms(), p.total_degree())).cloned() else {
        out.push(bindings);
        return Ok(());
    };
    let mut factors: Vec<Poly> = split_factors(&p)
        .into_iter()
        .filter(|f| !f.is_constant() && !sign_definite(f))
        .map(|f| normalize_condition(&f).expect("nonzero"))
        .collect();
    factors.sort_by_key(|f| f.to_canonical_string());
    factors.dedup();
    for f in factors {
        let rank = |x: &Symbol| {
            let a = &f.as_univariate(*x)[1];
            let kind = if a.is_constant() {
                0
            } else if sign_definite(a) {
                1
            } else {
                2
            };
            let pref = preferred.iter().position(|s| s == x).unwrap_or(preferred.len());
            (kind, pref, is_positive_symbol(*x), x.name())
        };
        let Some(x) = f.symbols().into_iter().filter(|x| f.degree_in(*x) == 1).min_by_key(rank) else {
            return Err(ConditionError::NotSolvable(f.to_canonical_string(), "any variable".into()));
        };
        let coeffs = f.as_univariate(x);
        let (b, a) = (&coeffs[0], &coeffs[1]);
        let generic_coeff = !a.is_constant() && !sign_definite(a);
        let value = RatFun::from_poly(b.clone()).neg_ref().div_ref(&RatFun::from_poly(a.clone()))?;
        descend(polys.clone(), compose(&bindings, x, value)?, preferred, out)?;
        if generic_coeff {
            let mut more = polys.clone();
            more.push(a.clone());
            more.push(b.clone());
            descend(more, bindings.clone(), preferred, out)?;
        }
    }
    Ok(())
}

/// Every polynomial vanishes at `point`.
pub fn all_vanish(
    polys: &[Poly],
    point: &HashMap<Symbol, num_rational::BigRational>,
) -> Result<bool, ConditionError> {
    for p in polys {
        if !p.eval(point)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::{parse_with, Symbol, SymbolKind};

    fn poly(text: &str) -> Poly {
        parse_with(text, &|n| Some(Symbol::named(n, SymbolKind::Parameter)))
        .unwrap()
        .num()
        .clone()
    }

    #[test]
    fn product_splits_into_branches() {
        // a (b - 1) = 0, a + b = 2
        let sols = solve_system(&[poly("slv_a*(slv_b - 1)"), poly("slv_a + slv_b - 2")], &[]).unwrap();
        assert_eq!(sols.len(), 2);
    }

    #[test]
    fn positive_sum_has_no_solution() {
        let sols = solve_system(&[poly("sigma_slv1 + 2*sigma_slv2")], &[]).unwrap();
        assert!(sols.is_empty());
        let sols = solve_system(&[poly("slv_e*(sigma_slv1 + sigma_slv2)")], &[]).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(sols[0].values().all(RatFun::is_zero));
    }
}
