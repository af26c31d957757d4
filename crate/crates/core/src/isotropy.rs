//! Orthogonal group action on equivalent-equation tensors and extraction of
//! isotropy conditions.
//!
//! `Phi_n(r)(A)[i][a_1..a_n][j] = sum R(r)[i][l] A[l][b_1..b_n][k]
//! r[a_1][b_1]..r[a_n][b_n] R(r)^{-1}[k][j]`. A tensor is isotropic when it is
//! a fixed point for every `r` in `O_2`, which is checked on the symbolic
//! rotation `[[c, -s], [s, c]]` modulo `c^2 + s^2 - 1` and on the reflection
//! `Diag(1, -1)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expansion::{alphas_of, counts_of, CoeffTensor, ExpansionResult};
use crate::latex::poly_latex;
use crate::scheme::ConservedKind;
use crate::symkernel::{rat, trig_symbols, Poly, RatFun, RatMatrix, SymError, Symbol, SymbolKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Identity,
    Rational,
    SymbolicRotation,
    Reflection,
}

/// Exact orthogonal `d x d` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthoTransform {
    pub matrix: RatMatrix,
    pub flavor: Flavor,
}

impl OrthoTransform {
    pub fn identity(d: usize) -> Self {
        OrthoTransform {
            matrix: RatMatrix::identity(d),
            flavor: Flavor::Identity,
        }
    }

    /// `[[c, -s], [s, c]]` in the trig symbols.
    pub fn symbolic_rotation() -> Self {
        let (c, s) = trig_symbols();
        let (c, s) = (RatFun::var(c), RatFun::var(s));
        OrthoTransform {
            matrix: RatMatrix::from_rows(vec![vec![c.clone(), -&s], vec![s, c]]).expect("2x2"),
            flavor: Flavor::SymbolicRotation,
        }
    }

    /// Rotation by the angle with rational cosine `c` and sine `s`.
    pub fn rotation(c: BigRational, s: BigRational) -> Result<Self, SymError> {
        if &c * &c + &s * &s != BigRational::one() {
            return Err(SymError::InvalidAssignment(format!("({c}, {s}) is not on the unit circle")));
        }
        let (c, s) = (RatFun::constant(c), RatFun::constant(s));
        Ok(OrthoTransform {
            matrix: RatMatrix::from_rows(vec![vec![c.clone(), -&s], vec![s, c]]).expect("2x2"),
            flavor: Flavor::Rational,
        })
    }

    /// Rotation through the rational point `((1-t^2)/(1+t^2), 2t/(1+t^2))`.
    pub fn pythagorean(t: &BigRational) -> Self {
        let one = BigRational::one();
        let d = &one + t * t;
        Self::rotation((&one - t * t) / &d, (t + t) / &d).expect("on the unit circle")
    }

    /// `Diag(1, -1)`.
    pub fn reflection() -> Self {
        OrthoTransform {
            matrix: RatMatrix::diag(&[RatFun::one(), RatFun::from_int(-1)]),
            flavor: Flavor::Reflection,
        }
    }

    /// `[[0, -1], [1, 0]]`.
    pub fn quarter_turn() -> Self {
        Self::rotation(BigRational::zero(), BigRational::one()).expect("on the unit circle")
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn is_symbolic(&self) -> bool {
        self.flavor == Flavor::SymbolicRotation
    }

    /// `self * other`.
    pub fn compose(&self, other: &OrthoTransform) -> OrthoTransform {
        let m = self.matrix.mul(&other.matrix).expect("same dimension");
        let symbolic = self.is_symbolic() || other.is_symbolic();
        let flavor = if symbolic {
            Flavor::SymbolicRotation
        } else if m.is_identity() {
            Flavor::Identity
        } else {
            Flavor::Rational
        };
        OrthoTransform {
            matrix: if symbolic { reduce_matrix(&m) } else { m },
            flavor,
        }
    }

    pub fn inverse(&self) -> OrthoTransform {
        OrthoTransform {
            matrix: self.matrix.transpose(),
            flavor: self.flavor,
        }
    }

    /// `r^T r = Id`, modulo the circle relation for the symbolic rotation.
    pub fn is_orthogonal(&self) -> bool {
        let g = self.matrix.transpose().mul(&self.matrix).expect("square");
        reduce_matrix(&g).is_identity()
    }
}

/// Reduces numerators modulo `c^2 + s^2 - 1`; denominators must be free of
/// `c` and `s`.
pub fn pyth_reduce_ratfun(f: &RatFun) -> RatFun {
    let (c, s) = trig_symbols();
    if !f.num().symbols().contains(&s) || f.num().degree_in(s) < 2 {
        return f.clone();
    }
    debug_assert!(f.den().degree_in(c) == 0 && f.den().degree_in(s) == 0);
    RatFun::new(f.num().pyth_reduce(c, s), f.den().clone()).expect("nonzero denominator")
}

fn reduce_matrix(m: &RatMatrix) -> RatMatrix {
    m.map(pyth_reduce_ratfun)
}

/// `R(r)`: scalars are fixed, each run of vector components `x, y[, z]`
/// transforms with `r`.
pub fn representation(r: &OrthoTransform, kinds: &[ConservedKind]) -> RatMatrix {
    let mut group = Vec::with_capacity(kinds.len());
    let mut g = 0usize;
    for k in kinds {
        if *k == ConservedKind::X {
            g += 1;
        }
        group.push(if k.component().is_some() { g } else { 0 });
    }
    RatMatrix::from_fn(kinds.len(), kinds.len(), |i, j| match (kinds[i].component(), kinds[j].component()) {
        (None, None) if i == j => RatFun::one(),
        (Some(a), Some(b)) if group[i] == group[j] => r.matrix[(a, b)].clone(),
        _ => RatFun::zero(),
    })
}

/// `Phi_n(r)(A)`.
pub fn apply_phi(r: &OrthoTransform, a: &CoeffTensor, kinds: &[ConservedKind]) -> CoeffTensor {
    let d = a.dim();
    let n = a.order();
    let rep = representation(r, kinds);
    let rep_inv = representation(&r.inverse(), kinds);
    let symbolic = r.is_symbolic();
    let keys: Vec<Vec<u8>> = a.entries().map(|(e, _)| e.clone()).collect();
    let tuples = all_tuples(d, n);

    let blocks: Vec<(Vec<u8>, RatMatrix)> = keys
        .par_iter()
        .map(|out| {
            let alphas = alphas_of(out);
            // weight of each input multiset: sum over its tuples of prod r[a_m][b_m]
            let mut weights: BTreeMap<Vec<u8>, RatFun> = BTreeMap::new();
            for beta in &tuples {
                let mut w = RatFun::one();
                for (am, bm) in alphas.iter().zip(beta) {
                    w = &w * &r.matrix[(*am, *bm)];
                    if w.is_zero() {
                        break;
                    }
                }
                if w.is_zero() {
                    continue;
                }
                let key = counts_of(beta, d);
                let e = weights.entry(key).or_insert_with(RatFun::zero);
                *e = &*e + &w;
            }
            let mut acc = RatMatrix::zeros(a.rows(), a.cols());
            for (key, w) in weights {
                let w = if symbolic { pyth_reduce_ratfun(&w) } else { w };
                if !w.is_zero() {
                    acc = acc.add(&a.matrix(&key).scale_by(&w)).expect("shapes agree");
                }
            }
            let mut m = rep.mul(&acc).and_then(|x| x.mul(&rep_inv)).expect("shapes agree");
            if symbolic {
                m = reduce_matrix(&m);
            }
            (out.clone(), m)
        })
        .collect();

    let mut out = CoeffTensor::zeros(n, d, a.rows(), a.cols());
    for (k, m) in blocks {
        *out.matrix_mut(&k) = m;
    }
    out
}

fn all_tuples(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..d).map(move |a| {
                    let mut t = t.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

/// The tensors of the same equations written in the frame rotated by `r`:
/// `Phi_n(r^{-1})(A_n)`.
pub fn transform_pde(tensors: &[CoeffTensor], r: &OrthoTransform, kinds: &[ConservedKind]) -> Vec<CoeffTensor> {
    let inv = r.inverse();
    tensors.iter().map(|a| apply_phi(&inv, a, kinds)).collect()
}

#[derive(Debug, Clone)]
pub struct IsotropyResidual {
    pub order: usize,
    pub flavor: Flavor,
    /// `Phi_n(r)(A_n) - A_n`.
    pub residual: CoeffTensor,
}

impl IsotropyResidual {
    pub fn is_zero(&self) -> bool {
        self.residual.is_zero()
    }
}

/// Residuals `Phi_n(r)(A_n) - A_n` for `n = 1..=order`.
pub fn lack_of_isotropy(res: &ExpansionResult, r: &OrthoTransform, order: usize) -> Vec<IsotropyResidual> {
    res.a[..order.min(res.a.len())]
        .iter()
        .map(|a| IsotropyResidual {
            order: a.order(),
            flavor: r.flavor,
            residual: apply_phi(r, a, &res.kinds).sub(a),
        })
        .collect()
}

/// Zero residual for the symbolic rotation and the reflection at every
/// order through `order`.
pub fn is_isotropic(res: &ExpansionResult, order: usize) -> bool {
    [OrthoTransform::symbolic_rotation(), OrthoTransform::reflection()]
        .iter()
        .all(|r| lack_of_isotropy(res, r, order).iter().all(IsotropyResidual::is_zero))
}

/// Symbols treated as positive when normalizing conditions: the scales and
/// the relaxation parameters.
pub fn is_positive_symbol(s: Symbol) -> bool {
    s.kind() == SymbolKind::Scale || s.name().starts_with("sigma_")
}

/// Normal form of a condition `p = 0`: positive factors (monomials in
/// positive symbols and `sigma + 1/2`) removed, content removed, leading
/// coefficient positive. `None` if `p` is zero; the constant `1` marks a
/// condition that no positive parameters satisfy.
pub fn normalize_condition(p: &Poly) -> Option<Poly> {
    if p.is_zero() {
        return None;
    }
    let mono = p.monomial_content();
    let positive: Vec<(Symbol, u16)> = mono.factors().filter(|(s, _)| is_positive_symbol(*s)).collect();
    let mut q = p.clone();
    for (s, e) in positive {
        q = q
            .div_exact(&Poly::var(s).pow(e as u32))
            .expect("monomial content divides");
    }
    let half = Poly::constant(rat(1, 2));
    let sigmas: Vec<Symbol> = q.symbols().into_iter().filter(|s| s.name().starts_with("sigma_")).collect();
    for s in sigmas {
        let f = &Poly::var(s) + &half;
        while let Some(r) = q.div_exact(&f) {
            q = r;
        }
    }
    Some(q.primitive())
}

/// Coefficients in `(c, s, lambda)` of every entry numerator.
fn collect_coefficients(t: &CoeffTensor, split: &[Symbol], out: &mut BTreeMap<String, Poly>) {
    for (_, m) in t.entries() {
        for e in m.entries() {
            for (_, coeff) in e.num().split_by(split) {
                if let Some(p) = normalize_condition(&coeff) {
                    out.entry(p.to_canonical_string()).or_insert(p);
                }
            }
        }
    }
}

/// A condition `poly = 0` with an optional readable name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub poly: Poly,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionSet {
    pub order: usize,
    pub conditions: Vec<Condition>,
}

impl ConditionSet {
    pub fn from_polys(order: usize, polys: impl IntoIterator<Item = Poly>) -> Self {
        let mut map = BTreeMap::new();
        for p in polys {
            if let Some(q) = normalize_condition(&p) {
                map.entry(q.to_canonical_string()).or_insert(q);
            }
        }
        ConditionSet {
            order,
            conditions: map.into_values().map(|poly| Condition { poly, name: None }).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn polys(&self) -> impl Iterator<Item = &Poly> {
        self.conditions.iter().map(|c| &c.poly)
    }

    /// Labels conditions that equal a named polynomial, or a product of
    /// named polynomials (reported as `a OR b`).
    pub fn apply_names(&mut self, names: &[(String, Poly)]) {
        let named: Vec<(String, Poly)> = names
            .iter()
            .filter_map(|(n, p)| normalize_condition(p).map(|q| (n.clone(), q)))
            .collect();
        for c in &mut self.conditions {
            let mut rest = c.poly.clone();
            let mut parts = Vec::new();
            'outer: loop {
                if rest.is_constant() {
                    break;
                }
                for (n, p) in &named {
                    if let Some(q) = rest.div_exact(p) {
                        parts.push(n.clone());
                        rest = q;
                        continue 'outer;
                    }
                }
                parts.clear();
                break;
            }
            c.name = (!parts.is_empty()).then(|| parts.join(" OR "));
        }
    }

    pub fn to_dump(&self) -> ConditionSetDump {
        ConditionSetDump {
            order: self.order,
            conditions: self
                .conditions
                .iter()
                .map(|c| ConditionDump {
                    equation: format!("{} = 0", c.poly.to_canonical_string()),
                    name: c.name.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_dump()).expect("condition set serializes")
    }

    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        for c in &self.conditions {
            out.push_str(&poly_latex(&c.poly));
            out.push_str(" = 0");
            if let Some(n) = &c.name {
                out.push_str(&format!(r" \quad \text{{({n})}}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.conditions {
            out.push_str(&format!("{} = 0", c.poly.to_canonical_string()));
            if let Some(n) = &c.name {
                out.push_str(&format!("    [{n}]"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionDump {
    pub equation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionSetDump {
    pub order: usize,
    pub conditions: Vec<ConditionDump>,
}

/// Raw residual coefficients through `order`, symbolic rotation and
/// reflection, each normalized.
pub fn residual_conditions(res: &ExpansionResult, order: usize) -> ConditionSet {
    let (c, s) = trig_symbols();
    let lambda = Symbol::named("lambda", SymbolKind::Scale);
    let mut map = BTreeMap::new();
    for resid in lack_of_isotropy(res, &OrthoTransform::symbolic_rotation(), order) {
        collect_coefficients(&resid.residual, &[c, s, lambda], &mut map);
    }
    for resid in lack_of_isotropy(res, &OrthoTransform::reflection(), order) {
        collect_coefficients(&resid.residual, &[lambda], &mut map);
    }
    ConditionSet {
        order,
        conditions: map.into_values().map(|poly| Condition { poly, name: None }).collect(),
    }
}

/// Conditions for isotropy at every order through `order` on the tensors as
/// given.
pub fn extract_conditions(res: &ExpansionResult, order: usize) -> ConditionSet {
    residual_conditions(res, order)
}

/// Conditions for isotropy through `order` once `lower` (the conditions of
/// the previous orders, solved as bindings) are substituted.
pub fn extract_conditions_chained(
    res: &ExpansionResult,
    order: usize,
    lower: &HashMap<Symbol, RatFun>,
) -> Result<ConditionSet, SymError> {
    let sub = res.truncated(order).substitute(lower)?;
    Ok(residual_conditions(&sub, order))
}

/// Symbols in a condition set.
pub fn condition_symbols(set: &ConditionSet) -> BTreeSet<Symbol> {
    set.polys().flat_map(|p| p.symbols()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        rat(n, d)
    }

    #[test]
    fn transforms_are_orthogonal() {
        assert!(OrthoTransform::symbolic_rotation().is_orthogonal());
        assert!(OrthoTransform::reflection().is_orthogonal());
        assert!(OrthoTransform::pythagorean(&r(2, 7)).is_orthogonal());
        assert!(OrthoTransform::rotation(r(3, 5), r(1, 2)).is_err());
        let q = OrthoTransform::quarter_turn();
        assert!(q.compose(&q).compose(&q).compose(&q).matrix.is_identity());
    }

    #[test]
    fn representation_is_block_diagonal() {
        let kinds = [ConservedKind::Scalar, ConservedKind::X, ConservedKind::Y];
        let rot = OrthoTransform::rotation(r(3, 5), r(4, 5)).unwrap();
        let rep = representation(&rot, &kinds);
        assert!(rep[(0, 0)].is_one());
        assert!(rep[(0, 1)].is_zero());
        assert_eq!(rep.block(1, 1, 2, 2), rot.matrix);
    }

    #[test]
    fn quarter_turn_swaps_mass_row_entries() {
        let kinds = [ConservedKind::Scalar, ConservedKind::X, ConservedKind::Y];
        let mut a = CoeffTensor::zeros(1, 2, 3, 3);
        a.matrix_mut(&[1, 0])[(0, 1)] = RatFun::from_int(5);
        a.matrix_mut(&[0, 1])[(0, 2)] = RatFun::from_int(7);
        let out = apply_phi(&OrthoTransform::quarter_turn(), &a, &kinds);
        assert_eq!(*out.get(0, 1, &[0]), RatFun::from_int(7));
        assert_eq!(*out.get(0, 2, &[1]), RatFun::from_int(5));
        assert!(out.get(0, 1, &[1]).is_zero());
    }

    #[test]
    fn laplacian_is_isotropic() {
        let kinds = [ConservedKind::Scalar, ConservedKind::X, ConservedKind::Y];
        let mut a = CoeffTensor::zeros(2, 2, 3, 3);
        *a.matrix_mut(&[2, 0]) = RatMatrix::identity(3);
        *a.matrix_mut(&[0, 2]) = RatMatrix::identity(3);
        for t in [OrthoTransform::symbolic_rotation(), OrthoTransform::reflection()] {
            assert_eq!(apply_phi(&t, &a, &kinds), a);
        }
    }

    #[test]
    fn normalization_drops_positive_factors() {
        let sxx = Symbol::named("sigma_xx", SymbolKind::Parameter);
        let e = Symbol::named("E_xx_rho", SymbolKind::Parameter);
        let lambda = Symbol::named("lambda", SymbolKind::Scale);
        let p = &(&Poly::var(sxx) + &Poly::constant(rat(1, 2))) * &Poly::var(lambda).pow(2);
        let p = &p * &Poly::var(e).scale(&rat(-3, 1));
        assert_eq!(normalize_condition(&p), Some(Poly::var(e)));
        assert_eq!(normalize_condition(&Poly::var(sxx).pow(3)), Some(Poly::one()));
        assert!(normalize_condition(&Poly::zero()).is_none());
    }
}
