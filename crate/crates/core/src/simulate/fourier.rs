use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NumericScheme, SimError};
use crate::expansion::{multinomial, ExpansionResult};

/// `G(k) = D(k) M^-1 J M` with `D(k) = Diag(exp(-i k.v_j dt))`.
#[derive(Debug, Clone)]
pub struct FourierSymbol {
    pub k: Vec<f64>,
    pub g: DMatrix<Complex64>,
}

impl FourierSymbol {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let t = self.g.clone().schur().unpack().1;
        (0..t.nrows()).map(|i| t[(i, i)]).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Unit eigenvector for the eigenvalue `mu`.
    pub fn eigenvector(&self, mu: Complex64) -> DVector<Complex64> {
        let n = self.g.nrows();
        let shifted = &self.g - DMatrix::from_diagonal_element(n, n, mu);
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
        v_t.row(imin).adjoint().normalize()
    }
}

pub fn amplification_matrix(num: &NumericScheme, k: &[f64]) -> FourierSymbol {
    let q = num.q;
    let phase = DMatrix::from_fn(q, q, |i, j| {
        if i == j {
            let kc: f64 = num.velocities[j].iter().zip(k).map(|(&c, &kk)| c as f64 * kk).sum();
            Complex64::from_polar(1.0, -kc * num.dx)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    FourierSymbol {
        k: k.to_vec(),
        g: phase * num.kernel.map(|x| Complex64::new(x, 0.0)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Largest sampled `|k| dx`.
    pub kmax_dx: f64,
    pub n_samples: usize,
    /// Fitted powers beyond the requested order.
    pub extra_degree: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            kmax_dx: 1e-2,
            n_samples: 24,
            extra_degree: 2,
        }
    }
}

/// `ln(mu(k)) / dt = sum_n g_n (i |k|)^n` along one conserved branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchFit {
    pub branch: usize,
    /// `g_1 .. g_order`.
    pub coefficients: Vec<f64>,
    /// Root-mean-square fit residual relative to the largest sample.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionFit {
    pub theta: f64,
    pub kmax_dx: f64,
    pub n_samples: usize,
    pub order: usize,
    /// Branches sorted by `g_1`.
    pub branches: Vec<BranchFit>,
}

impl DispersionFit {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,branch,order,coefficient,fit_residual\n");
        for b in &self.branches {
            for (n, g) in b.coefficients.iter().enumerate() {
                out.push_str(&format!("{},{},{},{:.15e},{:.3e}\n", self.theta, b.branch, n + 1, g, b.residual));
            }
        }
        out
    }
}

/// Samples `|k|` geometrically between `kmax/32` and `kmax` along
/// `(cos theta, sin theta)`, follows the conserved eigenvalues from the
/// smallest radius by eigenvector overlap and fits each branch.
pub fn eigenvalue_expansion(
    num: &NumericScheme,
    theta: f64,
    opts: &FitOptions,
    order: usize,
) -> Result<DispersionFit, SimError> {
    if num.dim != 2 {
        return Err(SimError::Invalid("dispersion fits are implemented for two dimensions".into()));
    }
    let degree = order + opts.extra_degree;
    let needed = order + 2;
    if opts.n_samples < needed {
        return Err(SimError::TooFewSamples {
            needed,
            got: opts.n_samples,
        });
    }
    let kmax = opts.kmax_dx / num.dx;
    let n = opts.n_samples;
    let radii: Vec<f64> = (0..n)
        .map(|i| kmax * (1.0f64 / 32.0).powf((n - 1 - i) as f64 / (n - 1) as f64))
        .collect();
    let dir = [theta.cos(), theta.sin()];
    let spectra: Vec<(Vec<Complex64>, Vec<DVector<Complex64>>)> = radii
        .par_iter()
        .map(|&r| {
            let sym = amplification_matrix(num, &[r * dir[0], r * dir[1]]);
            let vals = sym.eigenvalues();
            let vecs = vals.iter().map(|&mu| sym.eigenvector(mu)).collect();
            (vals, vecs)
        })
        .collect();

    // the N eigenvalues closest to 1, ordered by phase
    let (vals0, vecs0) = &spectra[0];
    let mut idx: Vec<usize> = (0..vals0.len()).collect();
    idx.sort_by(|&a, &b| (vals0[a] - 1.0).norm().total_cmp(&(vals0[b] - 1.0).norm()));
    let mut tracked: Vec<usize> = idx[..num.n_conserved].to_vec();
    tracked.sort_by(|&a, &b| vals0[a].ln().im.total_cmp(&vals0[b].ln().im));
    let mut current: Vec<DVector<Complex64>> = tracked.iter().map(|&i| vecs0[i].clone()).collect();
    let mut samples: Vec<Vec<Complex64>> = vec![tracked.iter().map(|&i| vals0[i]).collect()];

    for (step, (vals, vecs)) in spectra.iter().enumerate().skip(1) {
        let mut row = Vec::new();
        let mut used = vec![false; vals.len()];
        for v in current.iter_mut() {
            let mut scored: Vec<(f64, usize)> = vecs.iter().enumerate().map(|(i, w)| (v.dotc(w).norm(), i)).collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            let (best, bi) = scored[0];
            let second = scored[1].0;
            // eigenvectors of G are not orthogonal; require a clear gap instead
            if best < 0.9 || best - second < 0.1 || used[bi] {
                return Err(SimError::BranchCollision { radius: radii[step] * num.dx });
            }
            used[bi] = true;
            row.push(vals[bi]);
            *v = vecs[bi].clone();
        }
        samples.push(row);
    }

    let branches = (0..num.n_conserved)
        .map(|b| {
            let z: Vec<Complex64> = samples.iter().map(|row| row[b].ln() / num.dt).collect();
            fit_branch(b, &radii, &z, kmax, degree, order)
        })
        .collect();
    Ok(DispersionFit {
        theta,
        kmax_dx: opts.kmax_dx,
        n_samples: n,
        order,
        branches,
    })
}

/// Real part against even powers, imaginary part against odd powers, in
/// the scaled variable `|k| / kmax`.
fn fit_branch(branch: usize, radii: &[f64], z: &[Complex64], kmax: f64, degree: usize, order: usize) -> BranchFit {
    let mut g = vec![0.0; degree + 1];
    let mut sq = 0.0;
    for parity in [0usize, 1] {
        let powers: Vec<usize> = (1..=degree).filter(|n| n % 2 == parity).collect();
        if powers.is_empty() {
            continue;
        }
        let a = DMatrix::from_fn(radii.len(), powers.len(), |i, j| (radii[i] / kmax).powi(powers[j] as i32));
        let rhs = DVector::from_iterator(radii.len(), z.iter().map(|w| if parity == 0 { w.re } else { w.im }));
        let sol = a.clone().svd(true, true).solve(&rhs, 1e-14).expect("both factors computed");
        let resid = &a * &sol - &rhs;
        sq += resid.norm_squared();
        for (j, &p) in powers.iter().enumerate() {
            // (i k)^p = i^p k^p; i^p is +-1 for even p and +-i for odd p
            let sign = if (p / 2) % 2 == 0 { 1.0 } else { -1.0 };
            g[p] = sign * sol[j] / kmax.powi(p as i32);
        }
    }
    let scale = z.iter().map(|w| w.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    BranchFit {
        branch,
        coefficients: g[1..=order].to_vec(),
        residual: (sq / radii.len() as f64).sqrt() / scale,
    }
}

/// Conserved block of `dt^{n-1} A_n` contracted with `(cos theta, sin theta)`
/// for `n = 1..order`.
pub fn tensor_symbol(
    full: &ExpansionResult,
    num: &NumericScheme,
    theta: f64,
    order: usize,
) -> Result<Vec<DMatrix<f64>>, SimError> {
    let dir = [theta.cos(), theta.sin()];
    (1..=order)
        .map(|n| {
            let a = full.a(n);
            let mut c = DMatrix::zeros(a.rows(), a.cols());
            for (e, m) in a.entries() {
                let mut w = multinomial(e).to_f64().unwrap_or(f64::NAN);
                for (axis, &k) in e.iter().enumerate() {
                    w *= dir[axis].powi(k as i32);
                }
                for i in 0..a.rows() {
                    for j in 0..a.cols() {
                        let v = m[(i, j)].eval(&num.point)?.to_f64().unwrap_or(f64::NAN);
                        c[(i, j)] += w * v;
                    }
                }
            }
            Ok(c * num.dt.powi(n as i32 - 1))
        })
        .collect()
}

/// Truncated power series in `z`.
#[derive(Debug, Clone, PartialEq)]
struct Series(Vec<f64>);

impl Series {
    fn zero(len: usize) -> Self {
        Series(vec![0.0; len])
    }

    fn constant(c: f64, len: usize) -> Self {
        let mut s = Series::zero(len);
        s.0[0] = c;
        s
    }

    fn add(&self, o: &Series) -> Series {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn sub(&self, o: &Series) -> Series {
        Series(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }

    fn scale(&self, c: f64) -> Series {
        Series(self.0.iter().map(|a| a * c).collect())
    }

    fn mul(&self, o: &Series) -> Series {
        let n = self.0.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        Series(out)
    }

    fn div(&self, o: &Series) -> Series {
        let n = self.0.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.0[i];
            for j in 1..=i {
                acc -= o.0[j] * out[i - j];
            }
            out[i] = acc / o.0[0];
        }
        Series(out)
    }
}

fn eval_poly(coeffs: &[Series], x: &Series) -> Series {
    let mut acc = coeffs.last().expect("nonempty").clone();
    for c in coeffs.iter().rev().skip(1) {
        acc = acc.mul(x).add(c);
    }
    acc
}

fn derivative(coeffs: &[Series]) -> Vec<Series> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| c.scale(k as f64)).collect()
}

/// Characteristic polynomial coefficients (constant first) of a matrix of
/// series, by Faddeev-LeVerrier.
fn char_poly(a: &[Vec<Series>], len: usize) -> Vec<Series> {
    let n = a.len();
    let matmul = |x: &[Vec<Series>], y: &[Vec<Series>]| -> Vec<Vec<Series>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(Series::zero(len), |acc, k| acc.add(&x[i][k].mul(&y[k][j]))))
                    .collect()
            })
            .collect()
    };
    let mut coeffs = vec![Series::zero(len); n + 1];
    coeffs[n] = Series::constant(1.0, len);
    let mut m: Vec<Vec<Series>> = vec![vec![Series::zero(len); n]; n];
    for k in 1..=n {
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = row[i].add(&coeffs[n - k + 1]);
        }
        let am = matmul(a, &m);
        let tr = (0..n).fold(Series::zero(len), |acc, i| acc.add(&am[i][i]));
        coeffs[n - k] = tr.scale(-1.0 / k as f64);
        m = am;
    }
    coeffs
}

/// Eigenvalue branches of `-sum_n (i k)^n C_n` as series: per branch the
/// coefficients of `(i k)^1 .. (i k)^order`, sorted by the first.
pub fn branch_series(c: &[DMatrix<f64>], order: usize) -> Result<Vec<Vec<f64>>, SimError> {
    let n = c[0].nrows();
    let len = order;
    // K(z) = -sum_n z^{n-1} C_n
    let k: Vec<Vec<Series>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Series((0..len).map(|p| c.get(p).map_or(0.0, |m| -m[(i, j)])).collect()))
                .collect()
        })
        .collect();
    let p = char_poly(&k, len);
    let dp = derivative(&p);
    let k0 = DMatrix::from_fn(n, n, |i, j| -c[0][(i, j)]);
    let mut roots: Vec<f64> = Vec::new();
    for z in k0.complex_eigenvalues().iter() {
        if z.im.abs() > 1e-9 * (1.0 + z.re.abs()) {
            return Err(SimError::Invalid("first-order symbol has complex eigenvalues".into()));
        }
        roots.push(z.re);
    }
    roots.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for r in roots {
        let mut x = Series::constant(r, len);
        for _ in 0..len + 8 {
            let f = eval_poly(&p, &x);
            let d = eval_poly(&dp, &x);
            if d.0[0].abs() < 1e-300 {
                return Err(SimError::Invalid("first-order symbol has a repeated eigenvalue".into()));
            }
            x = x.sub(&f.div(&d));
        }
        out.push(x.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub theta: f64,
    pub branch: usize,
    pub order: usize,
    pub fitted: f64,
    pub predicted: f64,
    /// `max(max_b |predicted|, lambda^n dt^{n-1})`, the denominator of the
    /// relative error.
    pub scale: f64,
    pub rel_error: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Largest relative error at `order`.
    pub fn worst(&self, order: usize) -> f64 {
        self.rows.iter().filter(|r| r.order == order).map(|r| r.rel_error).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,branch,order,fitted,predicted,rel_error,tol,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.15e},{:.15e},{:.3e},{:.1e},{}\n",
                r.theta, r.branch, r.order, r.fitted, r.predicted, r.rel_error, r.tol, r.pass
            ));
        }
        out
    }

    pub fn failures(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| {
                format!(
                    "theta {} order {} branch {}: fitted {:.6e}, predicted {:.6e}, rel error {:.2e}",
                    r.theta, r.order, r.branch, r.fitted, r.predicted, r.rel_error
                )
            })
            .collect()
    }
}

/// Compares a fit with predicted branch series; `tol[n-1]` applies at order `n`.
pub fn compare_series(fit: &DispersionFit, predicted: &[Vec<f64>], tol: &[f64], lambda: f64, dt: f64) -> Comparison {
    let mut rows = Vec::new();
    for n in 1..=fit.order {
        let natural = lambda.powi(n as i32) * dt.powi(n as i32 - 1);
        let scale = predicted.iter().map(|b| b[n - 1].abs()).fold(natural, f64::max);
        let t = tol[(n - 1).min(tol.len() - 1)];
        for (b, pred) in fit.branches.iter().zip(predicted) {
            let rel = (b.coefficients[n - 1] - pred[n - 1]).abs() / scale;
            rows.push(ComparisonRow {
                theta: fit.theta,
                branch: b.branch,
                order: n,
                fitted: b.coefficients[n - 1],
                predicted: pred[n - 1],
                scale,
                rel_error: rel,
                tol: t,
                pass: rel < t,
            });
        }
    }
    Comparison { rows }
}

/// Fitted coefficients against the eigenvalue series of the tensor symbol.
pub fn compare_with_tensors(
    fit: &DispersionFit,
    full: &ExpansionResult,
    num: &NumericScheme,
    tol: &[f64],
) -> Result<Comparison, SimError> {
    let c = tensor_symbol(full, num, fit.theta, fit.order)?;
    let predicted = branch_series(&c, fit.order)?;
    Ok(compare_series(fit, &predicted, tol, num.lambda, num.dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_division_inverts_multiplication() {
        let a = Series(vec![2.0, -1.0, 0.5, 3.0]);
        let b = Series(vec![1.0, 4.0, -2.0, 0.25]);
        let back = a.mul(&b).div(&b);
        for (x, y) in back.0.iter().zip(&a.0) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn char_poly_of_constant_matrix() {
        // [[1, 2], [3, 4]]: x^2 - 5x - 2
        let s = |v| Series(vec![v, 0.0]);
        let p = char_poly(&[vec![s(1.0), s(2.0)], vec![s(3.0), s(4.0)]], 2);
        assert_eq!(p[0].0[0], -2.0);
        assert_eq!(p[1].0[0], -5.0);
        assert_eq!(p[2].0[0], 1.0);
    }

    #[test]
    fn scalar_symbol_series_is_its_coefficients() {
        // one conserved quantity: omega = -sum (i k)^n c_n
        let c: Vec<DMatrix<f64>> = [0.5, -0.25, 0.125].iter().map(|&v| DMatrix::from_element(1, 1, v)).collect();
        let s = branch_series(&c, 3).unwrap();
        assert_eq!(s, vec![vec![-0.5, 0.25, -0.125]]);
    }

    #[test]
    fn diagonal_branches_sorted() {
        let c1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0]));
        let c2 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.7]));
        let s = branch_series(&[c1, c2], 2).unwrap();
        let want = [[-1.0, -0.3], [2.0, -0.7]];
        for (row, w) in s.iter().zip(want) {
            for (x, y) in row.iter().zip(w) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }
}
