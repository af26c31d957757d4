use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

use lbm_isotropy::conditions::{
    classical_assignment, order3_violating_assignment, order4_assignment, physical_readout, ParameterAssignment,
};
use lbm_isotropy::expansion::{derive_equivalent_equations, ExpansionResult};
use lbm_isotropy::scheme::{d2q9_preset, SchemeSpec};
use lbm_isotropy::simulate::*;
use nalgebra::DVector;
use num_complex::Complex64;
use num_traits::ToPrimitive;

fn spec() -> &'static SchemeSpec {
    static SPEC: OnceLock<SchemeSpec> = OnceLock::new();
    SPEC.get_or_init(d2q9_preset)
}

fn tensors() -> &'static ExpansionResult {
    static RES: OnceLock<ExpansionResult> = OnceLock::new();
    RES.get_or_init(|| derive_equivalent_equations(spec(), 2).unwrap())
}

fn numeric(a: &ParameterAssignment) -> NumericScheme {
    NumericScheme::new(spec(), a, &SimConfig::default()).unwrap()
}

fn with(base: ParameterAssignment, changes: &[(&str, &str)]) -> ParameterAssignment {
    let mut a = base;
    for (k, v) in changes {
        a.set(k, v);
    }
    a
}

fn sorted_re(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn zero_wavevector_spectrum() {
    let num = numeric(&classical_assignment());
    let eig = amplification_matrix(&num, &[0.0, 0.0]).eigenvalues();
    assert!(eig.iter().all(|z| z.im.abs() < 1e-12));
    let mut expected = vec![1.0; 3];
    expected.extend(num.rates.iter().map(|s| 1.0 - s));
    for (a, b) in sorted_re(eig.iter().map(|z| z.re).collect()).iter().zip(sorted_re(expected)) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn unit_rates_give_sixfold_zero() {
    let mut a = classical_assignment();
    for s in ["sigma_eps", "sigma_eps2", "sigma_phix", "sigma_phiy", "sigma_xx", "sigma_xy"] {
        a.set(s, "1/2");
    }
    let eig = amplification_matrix(&numeric(&a), &[0.0, 0.0]).eigenvalues();
    assert_eq!(eig.iter().filter(|z| z.norm() < 1e-10).count(), 6);
}

#[test]
fn conserved_branches_do_not_grow() {
    let num = numeric(&classical_assignment());
    for theta in [0.0, 0.3, FRAC_PI_4] {
        let k = 0.05 / num.dx;
        let sym = amplification_matrix(&num, &[k * theta.cos(), k * theta.sin()]);
        assert!(sym.spectral_radius() <= 1.0 + 1e-12);
    }
}

#[test]
fn acoustic_and_shear_coefficients_match_readout() {
    let a = classical_assignment();
    let num = numeric(&a);
    let readout = physical_readout(tensors(), &a.bindings(spec()).unwrap()).unwrap();
    let c2 = readout.sound_speed_sq.eval(&num.point).unwrap().to_f64().unwrap();
    let shear = readout.shear.eval(&num.point).unwrap().to_f64().unwrap();
    assert!((c2 - 1.0 / 3.0).abs() < 1e-15);
    let fit = eigenvalue_expansion(&num, 0.3, &FitOptions::default(), 2).unwrap();
    let c = c2.sqrt();
    let g1: Vec<f64> = fit.branches.iter().map(|b| b.coefficients[0]).collect();
    assert!((g1[0] + c).abs() / c < 1e-6);
    assert!(g1[1].abs() < 1e-6 * c);
    assert!((g1[2] - c).abs() / c < 1e-6);
    // omega = -g_2 k^2 on the shear branch, and the second-order term
    // carries one factor dt
    let g2 = fit.branches[1].coefficients[1];
    assert!((g2 - num.dt * shear).abs() / g2.abs() < 1e-6, "{g2} vs {}", num.dt * shear);
}

#[test]
fn quarter_turn_gives_identical_fits() {
    let a = with(order3_violating_assignment(), &[("E_phix_qx", "0"), ("E_phiy_qy", "0"), ("E_eps_rho", "-1")]);
    let num = numeric(&a);
    let f0 = eigenvalue_expansion(&num, 0.0, &FitOptions::default(), 4).unwrap();
    let f1 = eigenvalue_expansion(&num, FRAC_PI_2, &FitOptions::default(), 4).unwrap();
    for (x, y) in f0.branches.iter().zip(&f1.branches) {
        for (n, (p, q)) in x.coefficients.iter().zip(&y.coefficients).enumerate() {
            let scale = num.lambda.powi(n as i32 + 1) * num.dt.powi(n as i32);
            assert!((p - q).abs() < 1e-5 * scale, "order {}: {p} vs {q}", n + 1);
        }
    }
    let aniso = measure_anisotropy(&num, &[0.0, FRAC_PI_2], &AnisotropyOptions::default());
    if let Ok(r) = aniso {
        assert!(r.spread < 1e-12, "{}", r.spread);
    }
}

#[test]
fn halving_the_range_keeps_coefficients() {
    let num = numeric(&classical_assignment());
    let wide = eigenvalue_expansion(&num, 0.3, &FitOptions::default(), 4).unwrap();
    let narrow = eigenvalue_expansion(
        &num,
        0.3,
        &FitOptions {
            kmax_dx: 5e-3,
            ..Default::default()
        },
        4,
    )
    .unwrap();
    for (x, y) in wide.branches.iter().zip(&narrow.branches) {
        for n in 0..3 {
            let scale = num.dt.powi(n as i32).max(x.coefficients[n].abs());
            assert!((x.coefficients[n] - y.coefficients[n]).abs() < 1e-5 * scale);
        }
    }
}

#[test]
fn fit_against_itself_passes() {
    let num = numeric(&classical_assignment());
    let fit = eigenvalue_expansion(&num, 0.3, &FitOptions::default(), 3).unwrap();
    let own: Vec<Vec<f64>> = fit.branches.iter().map(|b| b.coefficients.clone()).collect();
    let cmp = compare_series(&fit, &own, &[0.0 + f64::MIN_POSITIVE], num.lambda, num.dt);
    assert!(cmp.pass());
    assert!(cmp.rows.iter().all(|r| r.rel_error == 0.0));
}

#[test]
fn one_step_multiplies_plane_wave_by_symbol() {
    let num = numeric(&order3_violating_assignment());
    let (nx, ny) = (16, 8);
    let modes = [3, -2];
    let k = [
        2.0 * PI * modes[0] as f64 / (nx as f64 * num.dx),
        2.0 * PI * modes[1] as f64 / (ny as f64 * num.dx),
    ];
    let amp = DVector::from_fn(num.q, |j, _| Complex64::new(1.0 + j as f64 * 0.1, 0.3 - j as f64 * 0.05));
    let grid = GridState::plane_wave(nx, ny, modes, &amp);
    let after = run_lbm(&num, grid, 1).unwrap();
    let expected = GridState::plane_wave(nx, ny, modes, &(&amplification_matrix(&num, &k).g * &amp));
    let err = after.f.iter().zip(&expected.f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
}

#[test]
fn equilibrium_is_a_fixed_point_of_unit_rates() {
    let mut a = classical_assignment();
    for s in ["sigma_eps", "sigma_eps2", "sigma_phix", "sigma_phiy", "sigma_xx", "sigma_xy"] {
        a.set(s, "1/2");
    }
    let num = numeric(&a);
    let w = [Complex64::new(1.3, 0.0), Complex64::new(0.2, 0.0), Complex64::new(-0.1, 0.0)];
    let feq = num.equilibrium_populations(&w);
    let grid = GridState::plane_wave(4, 4, [0, 0], &feq);
    let after = run_lbm(&num, grid.clone(), 1).unwrap();
    let err = after.f.iter().zip(&grid.f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-14);
}

#[test]
fn grid_conserves_moments() {
    let num = numeric(&order3_violating_assignment());
    let mut grid = GridState::new(32, 32, num.q);
    let mut state = 0x2545_f491_4f6c_dd1du64;
    for v in grid.f.iter_mut() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        *v = 0.1 + (state % 1000) as f64 / 1000.0;
    }
    let before = grid.conserved_totals(&num);
    let after = run_lbm(&num, grid, 500).unwrap().conserved_totals(&num);
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).abs() <= 1e-12 * before[0].abs(), "{a} vs {b}");
    }
}

#[test]
fn anisotropy_separates_assignments() {
    let angles = [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];
    let opts = AnisotropyOptions::default();
    let iso = measure_anisotropy(&numeric(&order4_assignment()), &angles, &opts).unwrap();
    let bad = measure_anisotropy(&numeric(&order3_violating_assignment()), &angles, &opts).unwrap();
    assert!(iso.spread < 1e-6, "{}", iso.spread);
    assert!(bad.spread > 10.0 * iso.spread);
}

/// The second-order shear coefficient read off the scheme's own spectrum:
/// with the bullet-1 and bullet-2 equalities but `E_phix_qx = 0`, it depends
/// on direction unless `sigma_xx (1 - E) = 2 sigma_xy (2 + E)`.
#[test]
fn second_order_isotropy_needs_the_flux_relation() {
    let base = with(
        classical_assignment(),
        &[("E_phix_qx", "0"), ("E_phiy_qy", "0"), ("sigma_xx", "1/4")],
    );
    let shear_g2 = |a: &ParameterAssignment, theta: f64| {
        eigenvalue_expansion(&numeric(a), theta, &FitOptions::default(), 2).unwrap().branches[1].coefficients[1]
    };
    let violated = with(base.clone(), &[("sigma_xy", "1/4")]);
    let (a, b) = (shear_g2(&violated, 0.0), shear_g2(&violated, FRAC_PI_4));
    assert!((a - b).abs() > 1e-2 * a.abs(), "{a} vs {b}");
    // E = 0: sigma_xx = 4 sigma_xy
    let related = with(base, &[("sigma_xy", "1/16")]);
    let (a, b) = (shear_g2(&related, 0.0), shear_g2(&related, FRAC_PI_4));
    assert!((a - b).abs() < 1e-7 * a.abs(), "{a} vs {b}");
}
