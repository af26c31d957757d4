use std::collections::HashMap;
use std::sync::OnceLock;

use lbm_isotropy::conditions::*;
use lbm_isotropy::expansion::{derive_equivalent_equations, gamma_count, ExpansionResult};
use lbm_isotropy::isotropy::{extract_conditions, is_isotropic};
use lbm_isotropy::scheme::{d2q9_preset, SchemeSpec};
use lbm_isotropy::symkernel::{RatFun, Symbol};

fn spec() -> &'static SchemeSpec {
    static SPEC: OnceLock<SchemeSpec> = OnceLock::new();
    SPEC.get_or_init(d2q9_preset)
}

fn full() -> &'static ExpansionResult {
    static RES: OnceLock<ExpansionResult> = OnceLock::new();
    RES.get_or_init(|| derive_equivalent_equations(spec(), 4).unwrap())
}

fn var(name: &str) -> RatFun {
    RatFun::var(spec().resolve(name).unwrap())
}

fn sym(name: &str) -> Symbol {
    spec().resolve(name).unwrap()
}

#[test]
fn counting_matches_storage() {
    assert_eq!([2, 3, 4].map(|n| gamma_count(2, n)), [3, 4, 5]);
    let n_w = full().conserved.len();
    for a in &full().a {
        assert_eq!(a.independent_entries(), n_w * n_w * gamma_count(2, a.order()));
        assert_eq!(a.entries().count(), gamma_count(2, a.order()));
    }
}

#[test]
fn sufficiency_holds_on_every_branch_except_second_order() {
    let bullets = proposition_bullets(spec());
    for order in [1, 3, 4] {
        for br in branches(&bullets, order) {
            let r = verify_sufficiency(full(), &bullets, order, &br).unwrap();
            assert!(r.sufficient, "order {order} [{}]: {:?}", r.branch, r.offending);
        }
    }
    let br = &branches(&bullets, 2)[0];
    let r = verify_sufficiency(full(), &bullets, 2, br).unwrap();
    assert!(!r.sufficient);
    assert!(r.offending.unwrap().contains("[qx][qx]"));
}

/// Bullets 1-2 need `sigma_xx (1 - E) = 2 sigma_xy (2 + E)` with `E = E_phix_qx`
/// for second-order isotropy.
#[test]
fn second_order_needs_the_flux_relation() {
    let bullets = proposition_bullets(spec());
    let br = &branches(&bullets, 2)[0];
    let mut bindings = solve_bindings(&cumulative_conditions(&bullets, br)).unwrap();
    let e = var("E_phix_qx");
    let one = RatFun::one();
    // sigma_xy = sigma_xx (1 - E) / (2 (2 + E))
    let sxy = (&var("sigma_xx") * &(&one - &e))
        .div_ref(&(&RatFun::from_int(2) * &(&RatFun::from_int(2) + &e)))
        .unwrap();
    let bindings: HashMap<Symbol, RatFun> = bindings
        .drain()
        .map(|(k, v)| (k, v.substitute(&[(sym("sigma_xy"), sxy.clone())].into()).unwrap()))
        .chain([(sym("sigma_xy"), sxy.clone())])
        .collect();
    assert!(verify_bindings(full(), 2, &bindings, "with relation".into()).unwrap().sufficient);
}

#[test]
fn energy_flux_terms_are_free_on_the_third_order_locus() {
    let locus = ParameterAssignment::from_pairs(&[
        ("E_eps_qx", "0"),
        ("E_eps_qy", "0"),
        ("E_xx_rho", "0"),
        ("E_xx_qx", "0"),
        ("E_xx_qy", "0"),
        ("E_xy_rho", "0"),
        ("E_xy_qx", "0"),
        ("E_xy_qy", "0"),
        ("E_phix_rho", "0"),
        ("E_phix_qy", "0"),
        ("E_phiy_rho", "0"),
        ("E_phiy_qx", "0"),
        ("E_phix_qx", "-1"),
        ("E_phiy_qy", "-1"),
        ("sigma_xy", "sigma_xx"),
        ("sigma_eps", "sigma_xx"),
        ("sigma_phix", "1/(12*sigma_xx)"),
        ("sigma_phiy", "1/(12*sigma_xx)"),
    ]);
    let bindings = locus.bindings(spec()).unwrap();
    assert!(!bindings.contains_key(&sym("E_eps2_qx")));
    assert!(verify_bindings(full(), 3, &bindings, "locus".into()).unwrap().sufficient);
    let mut off = locus.clone();
    off.set("sigma_eps", "2*sigma_xx");
    assert!(!verify_bindings(full(), 3, &off.bindings(spec()).unwrap(), "off".into()).unwrap().sufficient);
}

#[test]
fn necessity_probes_detect_every_violation() {
    let bullets = proposition_bullets(spec());
    for order in 1..=4 {
        let probes = verify_necessity(spec(), full(), &bullets, order, &[1, 2, 3]).unwrap();
        assert!(!probes.is_empty());
        for p in probes {
            assert!(p.detected(), "order {order}, {} seed {}", p.violated, p.seed);
        }
    }
}

#[test]
fn control_probes_are_clean_where_sufficient() {
    let bullets = proposition_bullets(spec());
    for order in [1, 3, 4] {
        for br in branches(&bullets, order) {
            let c = control_probe(spec(), full(), &bullets, order, &br, 11).unwrap();
            assert!(!c.detected(), "order {order}: {:?}", c.witness);
        }
    }
}

#[test]
fn bullet_one_matches_extraction() {
    let reports = extraction_equivalence(spec(), full(), 1, 5, 7).unwrap();
    assert!(reports.iter().all(EquivalenceReport::equivalent));
    let extracted = extract_conditions(full(), 1);
    assert!(!extracted.is_empty());
}

#[test]
fn fourth_order_extraction_matches_on_the_compatible_branch() {
    let reports = extraction_equivalence(spec(), full(), 4, 5, 7).unwrap();
    assert!(reports.iter().any(|r| r.equivalent() && r.components > 0));
    assert!(reports.iter().all(|r| r.stated_implies_extracted));
}

#[test]
fn sound_speed_from_energy_equilibrium() {
    let bullets = proposition_bullets(spec());
    let br = &branches(&bullets, 3)[0];
    let bindings = solve_bindings(&cumulative_conditions(&bullets, br)).unwrap();
    let r = physical_readout(full(), &bindings).unwrap();
    let lambda = var("lambda");
    let expected = (&(&lambda * &lambda) * &(&RatFun::from_int(4) + &var("E_eps_rho"))).scale(&"1/6".parse().unwrap());
    assert_eq!(r.sound_speed_sq, expected);
    let at: HashMap<Symbol, RatFun> = [(sym("E_eps_rho"), RatFun::from_int(-2))].into();
    assert_eq!(r.sound_speed_sq.substitute(&at).unwrap(), (&lambda * &lambda).scale(&"1/3".parse().unwrap()));
    assert_eq!(r.shear, (&(&lambda * &lambda) * &var("sigma_xx")).scale(&"1/3".parse().unwrap()));
}

#[test]
fn readout_refuses_anisotropic_tensors() {
    assert!(matches!(
        physical_readout(full(), &HashMap::new()),
        Err(ReadoutError::DirectionDependent)
    ));
}

#[test]
fn stock_assignments_sit_where_expected() {
    let iso4 = order4_assignment().bindings(spec()).unwrap();
    assert!(is_isotropic(&full().substitute(&iso4).unwrap(), 4));
    let classical = classical_assignment().bindings(spec()).unwrap();
    let c = full().substitute(&classical).unwrap();
    assert!(is_isotropic(&c, 3) && !is_isotropic(&c, 4));
    let bad = order3_violating_assignment().bindings(spec()).unwrap();
    let b = full().truncated(3).substitute(&bad).unwrap();
    assert!(!is_isotropic(&b, 3));
}

#[test]
fn assignment_json_round_trip() {
    let a = classical_assignment();
    let back = ParameterAssignment::from_json(&a.to_json()).unwrap();
    assert_eq!(a, back);
    let bad = ParameterAssignment::from_pairs(&[("no_such_parameter", "1")]);
    assert!(matches!(bad.bindings(spec()), Err(ConditionError::UnknownParameter(_))));
}

#[test]
fn report_marks_second_order_as_not_reproduced() {
    let report = proposition_report(spec(), full(), 4, &[7]).unwrap();
    assert!(!report.all_sufficient());
    assert!(report.orders.iter().filter(|o| o.order != 2).all(|o| o.sufficient() && o.necessary()));
    assert_eq!(report.readouts.len(), 2);
    assert!(report.readouts.iter().all(|r| r.shear.is_some()));
    let text = report.to_text();
    assert!(text.contains("bullet 2: NOT reproduced"));
    assert!(text.contains("bullet 4: reproduced"));
}
