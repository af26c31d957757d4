//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Report-only by default; set `ACCEPTANCE_STRICT=1` to exit nonzero when any
//! criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use lbm_isotropy::conditions::*;
use lbm_isotropy::expansion::{derive_equivalent_equations, gamma_count, ExpansionResult};
use lbm_isotropy::isotropy::{apply_phi, OrthoTransform};
use lbm_isotropy::scheme::{d2q9_preset, SchemeSpec};
use lbm_isotropy::simulate::*;
use num_rational::BigRational;

const ORDER: usize = 4;
const NECESSITY_SEEDS: [u64; 3] = [1, 2, 3];
const EQUIVALENCE_POINTS: usize = 5;
const EQUIVALENCE_SEED: u64 = 7;
const SUFFICIENCY_BUDGET_SECS: f64 = 600.0;
const FOURIER_KMAX_DX: f64 = 1e-2;
const FOURIER_TOL: [f64; 4] = [1e-6, 1e-6, 1e-4, 1e-4];
const FOURIER_THETAS: [f64; 3] = [0.0, 0.3, PI / 4.0];
const ANISOTROPY_ANGLES: [f64; 4] = [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];
const ANISOTROPY_ISO_MAX: f64 = 1e-6;
const ANISOTROPY_SEPARATION: f64 = 10.0;
const CONSERVATION_STEPS: u64 = 10_000;
const CONSERVATION_GRID: usize = 64;
const CONSERVATION_TOL: f64 = 1e-12;
const SPECTRUM_TOL: f64 = 1e-12;

type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sufficiency(full: &ExpansionResult, spec: &SchemeSpec) -> Outcome {
    let start = Instant::now();
    let bullets = proposition_bullets(spec);
    let mut failed = Vec::new();
    let mut checked = 0;
    for order in 1..=ORDER {
        for br in branches(&bullets, order) {
            checked += 1;
            match verify_sufficiency(full, &bullets, order, &br) {
                Ok(r) if r.sufficient => {}
                Ok(r) => failed.push(format!("order {order} [{}]", r.branch)),
                Err(e) => failed.push(format!("order {order}: {e}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failed.is_empty() && secs < SUFFICIENCY_BUDGET_SECS;
    outcome(
        pass,
        format!("{}/{checked} branches isotropic in {secs:.1}s; failing: {failed:?}", checked - failed.len()),
    )
}

fn necessity(full: &ExpansionResult, spec: &SchemeSpec) -> Outcome {
    let bullets = proposition_bullets(spec);
    let mut total = 0;
    let mut missed = Vec::new();
    for order in 1..=ORDER {
        match verify_necessity(spec, full, &bullets, order, &NECESSITY_SEEDS) {
            Ok(probes) => {
                total += probes.len();
                missed.extend(
                    probes
                        .iter()
                        .filter(|p| !p.detected())
                        .map(|p| format!("order {order} [{}] seed {}", p.violated, p.seed)),
                );
            }
            Err(e) => missed.push(format!("order {order}: {e}")),
        }
    }
    outcome(
        missed.is_empty() && total > 0,
        format!("{}/{total} probes detected over seeds {NECESSITY_SEEDS:?}; missed: {missed:?}", total - missed.len()),
    )
}

fn extraction(full: &ExpansionResult, spec: &SchemeSpec) -> Outcome {
    let mut failing = Vec::new();
    let mut count = 0;
    for order in 1..=ORDER {
        match extraction_equivalence(spec, full, order, EQUIVALENCE_POINTS, EQUIVALENCE_SEED) {
            Ok(reports) => {
                for r in reports {
                    count += 1;
                    if !r.equivalent() {
                        failing.push(format!(
                            "order {order} [{}]: stated=>extracted {}, extracted=>stated {}",
                            r.lower_branch, r.stated_implies_extracted, r.extracted_implies_stated
                        ));
                    }
                }
            }
            Err(e) => failing.push(format!("order {order}: {e}")),
        }
    }
    outcome(
        failing.is_empty(),
        format!("{}/{count} order/branch pairs equivalent; failing: {failing:?}", count - failing.len()),
    )
}

fn group_laws(full: &ExpansionResult) -> Outcome {
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let ts = [
        OrthoTransform::rotation(q(3, 5), q(4, 5)).unwrap(),
        OrthoTransform::rotation(q(5, 13), q(12, 13)).unwrap(),
        OrthoTransform::reflection(),
    ];
    let id = OrthoTransform::identity(2);
    let mut failing = Vec::new();
    for a in &full.a {
        let n = a.order();
        if &apply_phi(&id, a, &full.kinds) != a {
            failing.push(format!("identity at order {n}"));
        }
        for (i, r) in ts.iter().enumerate() {
            for (j, s) in ts.iter().enumerate() {
                let lhs = apply_phi(&r.compose(s), a, &full.kinds);
                let rhs = apply_phi(r, &apply_phi(s, a, &full.kinds), &full.kinds);
                if lhs != rhs {
                    failing.push(format!("order {n}, pair ({i}, {j})"));
                }
            }
        }
    }
    outcome(
        failing.is_empty(),
        format!("identity and 9 compositions exact for n = 1..{ORDER}; failing: {failing:?}"),
    )
}

fn counting(full: &ExpansionResult) -> Outcome {
    let gammas = [2, 3, 4].map(|n| gamma_count(2, n));
    let n_w = full.conserved.len();
    let storage: Vec<(usize, usize)> = full
        .a
        .iter()
        .map(|a| (a.independent_entries(), n_w * n_w * gamma_count(2, a.order())))
        .collect();
    let pass = gammas == [3, 4, 5] && storage.iter().all(|(got, want)| got == want);
    outcome(pass, format!("gamma(2, 2..4) = {gammas:?}; stored vs N^2 Gamma per order: {storage:?}"))
}

fn fourier(full: &ExpansionResult, spec: &SchemeSpec) -> Outcome {
    let num = match NumericScheme::new(spec, &classical_assignment(), &SimConfig::default()) {
        Ok(n) => n,
        Err(e) => return outcome(false, e.to_string()),
    };
    let opts = FitOptions {
        kmax_dx: FOURIER_KMAX_DX,
        ..Default::default()
    };
    let mut worst = [0.0f64; ORDER];
    let mut failures = Vec::new();
    for theta in FOURIER_THETAS {
        let cmp = eigenvalue_expansion(&num, theta, &opts, ORDER)
            .and_then(|fit| compare_with_tensors(&fit, full, &num, &FOURIER_TOL));
        match cmp {
            Ok(c) => {
                for (n, w) in worst.iter_mut().enumerate() {
                    *w = w.max(c.worst(n + 1));
                }
                failures.extend(c.failures());
            }
            Err(e) => failures.push(format!("theta {theta}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "worst relative error by order {:?} (tolerances {FOURIER_TOL:?}); failing: {failures:?}",
            worst.map(|w| format!("{w:.1e}"))
        ),
    )
}

fn anisotropy(spec: &SchemeSpec) -> Outcome {
    let opts = AnisotropyOptions::default();
    let run = |a: &ParameterAssignment| {
        NumericScheme::new(spec, a, &SimConfig::default()).and_then(|n| measure_anisotropy(&n, &ANISOTROPY_ANGLES, &opts))
    };
    match (run(&order4_assignment()), run(&order3_violating_assignment())) {
        (Ok(iso), Ok(bad)) => outcome(
            iso.spread < ANISOTROPY_ISO_MAX && bad.spread >= ANISOTROPY_SEPARATION * iso.spread,
            format!("spread {:.2e} (order-4 assignment) vs {:.2e} (sigma_xy = sigma_xx/2)", iso.spread, bad.spread),
        ),
        (a, b) => outcome(false, format!("{:?} / {:?}", a.err(), b.err())),
    }
}

fn conservation(spec: &SchemeSpec) -> Outcome {
    let num = match NumericScheme::new(spec, &classical_assignment(), &SimConfig::default()) {
        Ok(n) => n,
        Err(e) => return outcome(false, e.to_string()),
    };
    let n = CONSERVATION_GRID;
    let mut grid = GridState::new(n, n, num.q);
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    for v in grid.f.iter_mut() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        *v = 0.05 + (state >> 11) as f64 / (1u64 << 53) as f64;
    }
    let before = grid.conserved_totals(&num);
    let after = match run_lbm(&num, grid, CONSERVATION_STEPS) {
        Ok(g) => g.conserved_totals(&num),
        Err(e) => return outcome(false, e.to_string()),
    };
    // relative to the total mass, since momentum totals may be near zero
    let scale = before[0].abs();
    let drift: Vec<f64> = before.iter().zip(&after).map(|(a, b)| (a - b).abs() / scale).collect();

    let eig = amplification_matrix(&num, &[0.0, 0.0]).eigenvalues();
    let mut got: Vec<f64> = eig.iter().map(|z| z.re).collect();
    let mut want: Vec<f64> = vec![1.0; num.n_conserved];
    want.extend(num.rates.iter().map(|s| 1.0 - s));
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    let spec_err = got
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).abs())
        .chain(eig.iter().map(|z| z.im.abs()))
        .fold(0.0, f64::max);

    outcome(
        drift.iter().all(|d| *d <= CONSERVATION_TOL) && spec_err <= SPECTRUM_TOL,
        format!(
            "relative drift of rho, qx, qy after {CONSERVATION_STEPS} steps on {n}x{n}: {:?}; G(0) spectrum error {spec_err:.1e}",
            drift.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let spec = d2q9_preset();
    let full = derive_equivalent_equations(&spec, ORDER).expect("D2Q9 derivation");
    println!("derived A_1..A_{ORDER} in {:.1}s", start.elapsed().as_secs_f64());

    let criteria: Vec<Criterion> = vec![
        ("sufficiency of every bullet and branch", Box::new(|| sufficiency(&full, &spec))),
        ("necessity of every condition", Box::new(|| necessity(&full, &spec))),
        ("extracted conditions equal stated ones", Box::new(|| extraction(&full, &spec))),
        ("group-action laws", Box::new(|| group_laws(&full))),
        ("counting and storage", Box::new(|| counting(&full))),
        ("Fourier oracle", Box::new(|| fourier(&full, &spec))),
        ("anisotropy separation", Box::new(|| anisotropy(&spec))),
        ("conservation and G(0) spectrum", Box::new(|| conservation(&spec))),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
