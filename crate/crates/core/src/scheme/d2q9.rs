use num_rational::BigRational;

use super::{ConservedKind, MomentSpec, MomentTermSpec, SchemeFile, SchemeSpec, SCHEME_FILE_VERSION};

pub const D2Q9_CONSERVED: [&str; 3] = ["rho", "qx", "qy"];
pub const D2Q9_NONCONSERVED: [&str; 6] = ["eps", "eps2", "phix", "phiy", "xx", "xy"];

const DEGREE_W: [u32; 3] = [0, 1, 1];
const DEGREE_Y: [u32; 6] = [2, 4, 3, 3, 2, 2];

fn term(coeff: &str, x: u32, y: u32, lambda: u32) -> MomentTermSpec {
    MomentTermSpec {
        coeff: coeff.parse::<BigRational>().expect("literal").to_string(),
        powers: vec![x, y],
        lambda,
    }
}

fn moment(name: &str, conserved: Option<ConservedKind>, terms: Vec<MomentTermSpec>) -> MomentSpec {
    MomentSpec {
        name: name.into(),
        conserved,
        terms,
    }
}

/// The D2Q9 preset as a scheme file.
pub(crate) fn d2q9_file() -> SchemeFile {
    let velocities = vec![
        vec![0, 0],
        vec![1, 0],
        vec![0, 1],
        vec![-1, 0],
        vec![0, -1],
        vec![1, 1],
        vec![-1, 1],
        vec![-1, -1],
        vec![1, -1],
    ];
    let moments = vec![
        moment("rho", Some(ConservedKind::Scalar), vec![term("1", 0, 0, 0)]),
        moment("qx", Some(ConservedKind::X), vec![term("1", 1, 0, 0)]),
        moment("qy", Some(ConservedKind::Y), vec![term("1", 0, 1, 0)]),
        // 3(X^2+Y^2) - 4 lambda^2
        moment(
            "eps",
            None,
            vec![term("3", 2, 0, 0), term("3", 0, 2, 0), term("-4", 0, 0, 2)],
        ),
        // (9(X^2+Y^2)^2 - 21 lambda^2 (X^2+Y^2) + 8 lambda^4)/2
        moment(
            "eps2",
            None,
            vec![
                term("9/2", 4, 0, 0),
                term("9", 2, 2, 0),
                term("9/2", 0, 4, 0),
                term("-21/2", 2, 0, 2),
                term("-21/2", 0, 2, 2),
                term("4", 0, 0, 4),
            ],
        ),
        // (3(X^2+Y^2) - 5 lambda^2) X
        moment(
            "phix",
            None,
            vec![term("3", 3, 0, 0), term("3", 1, 2, 0), term("-5", 1, 0, 2)],
        ),
        moment(
            "phiy",
            None,
            vec![term("3", 2, 1, 0), term("3", 0, 3, 0), term("-5", 0, 1, 2)],
        ),
        moment("xx", None, vec![term("1", 2, 0, 0), term("-1", 0, 2, 0)]),
        moment("xy", None, vec![term("1", 1, 1, 0)]),
    ];

    let mut parameters = Vec::new();
    let mut equilibrium = Vec::new();
    for (y, dy) in D2Q9_NONCONSERVED.iter().zip(DEGREE_Y) {
        let mut row = Vec::new();
        for (w, dw) in D2Q9_CONSERVED.iter().zip(DEGREE_W) {
            let name = format!("E_{y}_{w}");
            row.push(match dy - dw {
                1 => format!("{name}*lambda"),
                p => format!("{name}*lambda^{p}"),
            });
            parameters.push(name);
        }
        equilibrium.push(row);
    }
    let relaxation: Vec<String> = D2Q9_NONCONSERVED.iter().map(|y| format!("sigma_{y}")).collect();
    parameters.extend(relaxation.iter().cloned());

    SchemeFile {
        version: SCHEME_FILE_VERSION,
        name: "d2q9".into(),
        dimension: 2,
        velocities,
        moments,
        parameters,
        equilibrium,
        relaxation,
    }
}

/// D2Q9 with fully symbolic equilibrium `E_{y}_{w}` and relaxation `sigma_{y}`.
pub fn d2q9_preset() -> SchemeSpec {
    d2q9_file().build().expect("the D2Q9 preset is well formed")
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::scheme::build_collision;
    use crate::symkernel::{RatFun, RatMatrix, Symbol, SymbolKind};

    #[test]
    fn parameter_count() {
        let spec = d2q9_preset();
        assert_eq!(spec.q(), 9);
        assert_eq!(spec.n_conserved(), 3);
        assert_eq!(spec.parameters.len(), 24);
        assert_eq!(spec.sigmas.len(), 6);
        assert_eq!(spec.equilibrium.rows() * spec.equilibrium.cols(), 18);
    }

    #[test]
    fn lattice_closure() {
        let spec = d2q9_preset();
        for v in spec.velocities.iter() {
            assert!(v.iter().all(|c| c.abs() <= 1));
        }
    }

    #[test]
    fn moments_are_orthogonal() {
        let spec = d2q9_preset();
        let m = spec.moment_matrix();
        let gram = m.mul(&m.transpose()).unwrap();
        for k in 0..9 {
            for l in 0..9 {
                if k != l {
                    assert!(gram[(k, l)].is_zero(), "rows {k} and {l}");
                }
            }
        }
        // energy row against the density row by hand: (-4) + 4(-1) + 4(2) = 0
        let lambda = RatFun::var(spec.lambda);
        let l2 = &lambda * &lambda;
        let eps: Vec<RatFun> = (0..9).map(|j| m[(3, j)].clone()).collect();
        assert_eq!(eps[0], l2.scale(&"-4".parse().unwrap()));
        assert_eq!(eps[1], -&l2);
        assert_eq!(eps[5], l2.scale(&"2".parse().unwrap()));
    }

    #[test]
    fn moment_inverse_is_exact() {
        let spec = d2q9_preset();
        let m = spec.moment_matrix();
        let inv = spec.moment_inverse();
        assert!(inv.mul(m).unwrap().is_identity());
        assert!(m.mul(inv).unwrap().is_identity());
        let det = m.determinant().unwrap();
        assert!(!det.is_zero());
        assert!(det.num().is_monomial());
    }

    #[test]
    fn equilibrium_scaling() {
        let spec = d2q9_preset();
        let lambda = spec.lambda;
        let expected = [[2, 1, 1], [4, 3, 3], [3, 2, 2], [3, 2, 2], [2, 1, 1], [2, 1, 1]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                let e = &spec.equilibrium[(i, j)];
                assert_eq!(e.num().degree_in(lambda) as u32, p);
                assert!(e.num().is_monomial());
            }
        }
        for p in &spec.basis.polys {
            assert!(p.lambda_degree().is_some());
        }
    }

    #[test]
    fn collision_structure() {
        let spec = d2q9_preset();
        let j = build_collision(&spec).j;
        assert!(j.block(0, 0, 3, 3).is_identity());
        assert!(j.block(0, 3, 3, 6).is_zero());
        // unit rates project onto the equilibrium
        let half = RatFun::from_ratio(1, 2);
        let bindings: HashMap<Symbol, RatFun> = spec
            .parameters
            .iter()
            .filter(|s| s.name().starts_with("sigma_"))
            .map(|&s| (s, half.clone()))
            .collect();
        let unit = build_collision(&spec.specialize(&bindings).unwrap()).j;
        assert!(unit.block(3, 3, 6, 6).is_zero());
        assert_eq!(unit.block(3, 0, 6, 3), spec.equilibrium);
    }

    #[test]
    fn collision_characteristic_polynomial() {
        // parameters at exact rational points, the spectral variable symbolic
        let spec = d2q9_preset();
        let x = RatFun::var(Symbol::named("xi", SymbolKind::Auxiliary));
        for seed in 1..4i64 {
            let bindings: HashMap<Symbol, RatFun> = spec
                .parameters
                .iter()
                .enumerate()
                .map(|(k, &p)| (p, RatFun::from_ratio((k as i64 * seed) % 7 + 1, seed + 2)))
                .collect();
            let numeric = spec.specialize(&bindings).unwrap();
            let j = build_collision(&numeric).j;
            let xi = RatMatrix::identity(9).scale_by(&x);
            let charpoly = xi.sub(&j).unwrap().determinant().unwrap();
            let mut expected = (&x - &RatFun::one()).pow(3).unwrap();
            for s in numeric.rates() {
                expected = &expected * &(&x - &(&RatFun::one() - &s));
            }
            assert_eq!(charpoly, expected);
        }
    }

    #[test]
    fn collision_keeps_conserved_moments() {
        let spec = d2q9_preset();
        let j = build_collision(&spec).j;
        let m = RatMatrix::from_fn(9, 1, |k, _| RatFun::from_ratio(k as i64 * 7 - 3, 5));
        let out = j.mul(&m).unwrap();
        for k in 0..3 {
            assert_eq!(out[(k, 0)], m[(k, 0)]);
        }
    }
}
