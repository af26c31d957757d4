use std::collections::HashMap;
use std::sync::OnceLock;

use lbm_isotropy::expansion::{alphas_of, derive_equivalent_equations, exponent_vectors, CoeffTensor, ExpansionResult};
use lbm_isotropy::isotropy::{apply_phi, is_isotropic, lack_of_isotropy, representation, OrthoTransform};
use lbm_isotropy::scheme::{d2q9_preset, SchemeSpec};
use lbm_isotropy::symkernel::{trig_symbols, RatFun, RatMatrix};
use num_rational::BigRational;
use proptest::prelude::*;

fn spec() -> &'static SchemeSpec {
    static SPEC: OnceLock<SchemeSpec> = OnceLock::new();
    SPEC.get_or_init(d2q9_preset)
}

fn full() -> &'static ExpansionResult {
    static RES: OnceLock<ExpansionResult> = OnceLock::new();
    RES.get_or_init(|| derive_equivalent_equations(spec(), 4).unwrap())
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn transforms() -> Vec<OrthoTransform> {
    vec![
        OrthoTransform::rotation(q(3, 5), q(4, 5)).unwrap(),
        OrthoTransform::rotation(q(5, 13), q(12, 13)).unwrap(),
        OrthoTransform::reflection(),
    ]
}

#[test]
fn identity_acts_trivially() {
    let res = full();
    let id = OrthoTransform::identity(2);
    for a in &res.a {
        assert_eq!(&apply_phi(&id, a, &res.kinds), a, "order {}", a.order());
    }
}

#[test]
fn action_is_a_homomorphism() {
    let res = full();
    let ts = transforms();
    for a in &res.a {
        for r in &ts {
            for s in &ts {
                let lhs = apply_phi(&r.compose(s), a, &res.kinds);
                let rhs = apply_phi(r, &apply_phi(s, a, &res.kinds), &res.kinds);
                assert_eq!(lhs, rhs, "order {}", a.order());
            }
        }
    }
}

/// `sum_alpha A[alpha] prod k_alpha` with every index tuple counted.
fn symbol_at(a: &CoeffTensor, k: &[BigRational]) -> RatMatrix {
    let mut acc = RatMatrix::zeros(a.rows(), a.cols());
    for counts in exponent_vectors(a.dim(), a.order()) {
        let alphas = alphas_of(&counts);
        let mut weight = BigRational::from_integer(0.into());
        // all orderings of the multiset
        for perm in orderings(&alphas) {
            weight += perm.iter().map(|&i| k[i].clone()).product::<BigRational>();
        }
        acc = acc.add(&a.matrix(&counts).scale_by(&RatFun::constant(weight))).unwrap();
    }
    acc
}

fn orderings(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        if i > 0 && items[..i].contains(&items[i]) {
            continue;
        }
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in orderings(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn numeric_tensors() -> &'static ExpansionResult {
    static RES: OnceLock<ExpansionResult> = OnceLock::new();
    RES.get_or_init(|| {
        let point: HashMap<_, _> = spec()
            .parameters
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, RatFun::constant(q((i as i64 * 5) % 11 + 1, 3))))
            .collect();
        full().substitute(&point).unwrap()
    })
}

// (Phi(r) A)(k) = R A(r^T k) R^{-1}, evaluated as polynomials in k
#[test]
fn action_matches_rotated_symbol() {
    let res = numeric_tensors();
    let k = [q(2, 7), q(-3, 5)];
    for r in transforms() {
        let rep = representation(&r, &res.kinds);
        let rep_inv = representation(&r.inverse(), &res.kinds);
        let rt_k: Vec<BigRational> = (0..2)
            .map(|b| (0..2).map(|a| r.matrix[(a, b)].constant_value().unwrap() * &k[a]).sum())
            .collect();
        for a in &res.a {
            let lhs = symbol_at(&apply_phi(&r, a, &res.kinds), &k);
            let rhs = rep.mul(&symbol_at(a, &rt_k)).unwrap().mul(&rep_inv).unwrap();
            assert_eq!(lhs, rhs, "order {}", a.order());
        }
    }
}

#[test]
fn symbolic_rotation_specializes_to_rational_rotations() {
    let res = numeric_tensors();
    let (c, s) = trig_symbols();
    let sym = OrthoTransform::symbolic_rotation();
    for (cv, sv) in [(q(3, 5), q(4, 5)), (q(-5, 13), q(12, 13)), (q(8, 17), q(-15, 17))] {
        let rat = OrthoTransform::rotation(cv.clone(), sv.clone()).unwrap();
        let at: HashMap<_, _> = [(c, RatFun::constant(cv)), (s, RatFun::constant(sv))].into_iter().collect();
        for a in &res.a[..3] {
            let via_symbolic = apply_phi(&sym, a, &res.kinds).substitute(&at).unwrap();
            assert_eq!(via_symbolic, apply_phi(&rat, a, &res.kinds));
        }
    }
}

#[test]
fn four_quarter_turns_act_as_identity() {
    let res = full();
    let r = OrthoTransform::quarter_turn();
    let four = r.compose(&r).compose(&r).compose(&r);
    assert_eq!(four.matrix, OrthoTransform::identity(2).matrix);
    for a in &res.a[..2] {
        let mut b = a.clone();
        for _ in 0..4 {
            b = apply_phi(&r, &b, &res.kinds);
        }
        assert_eq!(&b, a);
    }
}

#[test]
fn generic_scheme_is_not_isotropic() {
    let res = full();
    assert!(is_isotropic(res, 1) == lack_of_isotropy(res, &OrthoTransform::symbolic_rotation(), 1).iter().all(|r| r.is_zero()));
    assert!(!is_isotropic(res, 1));
}

fn small_rational() -> impl Strategy<Value = BigRational> {
    (-12i64..=12, 1i64..=9).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homomorphism_on_random_pythagorean_rotations(t in small_rational(), u in small_rational(), reflect in any::<bool>()) {
        let res = numeric_tensors();
        let r = OrthoTransform::pythagorean(&t);
        let s = if reflect { OrthoTransform::pythagorean(&u).compose(&OrthoTransform::reflection()) } else { OrthoTransform::pythagorean(&u) };
        prop_assert!(r.is_orthogonal() && s.is_orthogonal());
        for a in &res.a[..3] {
            let lhs = apply_phi(&r.compose(&s), a, &res.kinds);
            let rhs = apply_phi(&r, &apply_phi(&s, a, &res.kinds), &res.kinds);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn action_is_linear(t in small_rational(), w in small_rational()) {
        let res = numeric_tensors();
        let r = OrthoTransform::pythagorean(&t);
        for n in 0..3 {
            let a = &res.a[n];
            let b = a.try_map(|e| Ok(e.scale(&w))).unwrap();
            let sum = a.add(&b);
            let lhs = apply_phi(&r, &sum, &res.kinds);
            let rhs = apply_phi(&r, a, &res.kinds).add(&apply_phi(&r, &b, &res.kinds));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn inverse_undoes_the_action(t in small_rational()) {
        let res = numeric_tensors();
        let r = OrthoTransform::pythagorean(&t);
        for a in &res.a {
            let back = apply_phi(&r.inverse(), &apply_phi(&r, a, &res.kinds), &res.kinds);
            prop_assert_eq!(&back, a);
        }
    }
}
