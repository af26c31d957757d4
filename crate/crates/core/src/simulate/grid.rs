use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{amplification_matrix, NumericScheme, SimError};

/// Populations on a periodic `nx` by `ny` lattice, node-major:
/// `f[(y * nx + x) * q + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub nx: usize,
    pub ny: usize,
    pub q: usize,
    pub f: Vec<f64>,
    pub step: u64,
}

impl GridState {
    pub fn new(nx: usize, ny: usize, q: usize) -> Self {
        GridState {
            nx,
            ny,
            q,
            f: vec![0.0; nx * ny * q],
            step: 0,
        }
    }

    pub fn node(&self, x: usize, y: usize) -> &[f64] {
        let o = (y * self.nx + x) * self.q;
        &self.f[o..o + self.q]
    }

    pub fn node_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let o = (y * self.nx + x) * self.q;
        &mut self.f[o..o + self.q]
    }

    /// Real part of `amplitude exp(i 2 pi (mx x / nx + my y / ny))` at every
    /// node, `amplitude` given per population.
    pub fn plane_wave(nx: usize, ny: usize, modes: [i64; 2], amplitude: &DVector<Complex64>) -> Self {
        let q = amplitude.len();
        let mut g = GridState::new(nx, ny, q);
        for y in 0..ny {
            for x in 0..nx {
                let phase = std::f64::consts::TAU
                    * (modes[0] as f64 * x as f64 / nx as f64 + modes[1] as f64 * y as f64 / ny as f64);
                let e = Complex64::from_polar(1.0, phase);
                for (j, v) in g.node_mut(x, y).iter_mut().enumerate() {
                    *v = (amplitude[j] * e).re;
                }
            }
        }
        g
    }

    /// Lattice sums of the conserved moments.
    pub fn conserved_totals(&self, num: &NumericScheme) -> Vec<f64> {
        let mut tot = vec![0.0; num.n_conserved];
        for node in self.f.chunks(self.q) {
            for (i, t) in tot.iter_mut().enumerate() {
                *t += (0..self.q).map(|j| num.m[(i, j)] * node[j]).sum::<f64>();
            }
        }
        tot
    }
}

const MAX_Q: usize = 64;

/// Collide then stream, `steps` times.
pub fn run_lbm(num: &NumericScheme, mut grid: GridState, steps: u64) -> Result<GridState, SimError> {
    if num.dim != 2 || grid.q != num.q || num.q > MAX_Q {
        return Err(SimError::Invalid("grid does not match a two-dimensional scheme".into()));
    }
    let (nx, ny, q) = (grid.nx, grid.ny, grid.q);
    // collision as an increment f + D f, D = M^-1 (J - I) M, projected onto the
    // kernel of the conserved rows so rounding does not accumulate a bias
    let n = num.n_conserved;
    let ident = DMatrix::<f64>::identity(q, q);
    let d = &num.m_inv * (&num.collision - &ident) * &num.m;
    let mc = num.m.rows(0, n).into_owned();
    let gram = (&mc * mc.transpose())
        .try_inverse()
        .ok_or_else(|| SimError::Invalid("conserved rows are dependent".into()))?;
    let proj = &ident - mc.transpose() * gram * &mc;
    let d = &proj * d;
    let flat = |a: &DMatrix<f64>| -> Vec<f64> { (0..q).flat_map(|i| (0..q).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect() };
    let (d, proj) = (flat(&d), flat(&proj));
    let shifts: Vec<(usize, usize)> = num
        .velocities
        .iter()
        .map(|c| (c[0].rem_euclid(nx as i64) as usize, c[1].rem_euclid(ny as i64) as usize))
        .collect();
    let mut post = vec![0.0; grid.f.len()];
    for _ in 0..steps {
        post.par_chunks_mut(q).zip(grid.f.par_chunks(q)).for_each(|(out, f)| {
            let mut delta = [0.0; MAX_Q];
            for i in 0..q {
                delta[i] = (0..q).map(|j| d[i * q + j] * f[j]).sum();
            }
            for i in 0..q {
                out[i] = f[i] + (0..q).map(|j| proj[i * q + j] * delta[j]).sum::<f64>();
            }
        });
        grid.f.par_chunks_mut(nx * q).enumerate().for_each(|(y, row)| {
            for x in 0..nx {
                for (j, &(sx, sy)) in shifts.iter().enumerate() {
                    let xs = (x + nx - sx) % nx;
                    let ys = (y + ny - sy) % ny;
                    row[x * q + j] = post[(ys * nx + xs) * q + j];
                }
            }
        });
        grid.step += 1;
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy)]
pub struct AnisotropyOptions {
    /// `|k| dx` of the plane wave.
    pub kmag_dx: f64,
    /// Number of steps; the decay rate is measured over the second half.
    pub horizon: u64,
}

impl Default for AnisotropyOptions {
    fn default() -> Self {
        AnisotropyOptions {
            kmag_dx: 0.02,
            horizon: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnisotropyResult {
    pub kmag_dx: f64,
    pub horizon: u64,
    pub angles: Vec<f64>,
    /// Shear-wave decay rate per angle, in inverse time units.
    pub rates: Vec<f64>,
    /// `(max - min) / mean` of the rates.
    pub spread: f64,
}

impl AnisotropyResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle,decay_rate\n");
        for (a, r) in self.angles.iter().zip(&self.rates) {
            out.push_str(&format!("{a},{r:.15e}\n"));
        }
        out
    }
}

/// Starts a transverse momentum wave at equilibrium for each angle, evolves
/// the single Fourier mode in time and measures its decay rate.
pub fn measure_anisotropy(
    num: &NumericScheme,
    angles: &[f64],
    opts: &AnisotropyOptions,
) -> Result<AnisotropyResult, SimError> {
    let (ix, iy) = match (num.conserved_axis(0), num.conserved_axis(1)) {
        (Some(a), Some(b)) if num.dim == 2 => (a, b),
        _ => return Err(SimError::Invalid("a two-dimensional scheme with conserved momentum is required".into())),
    };
    let kmag = opts.kmag_dx / num.dx;
    let half = opts.horizon / 2;
    if half == 0 {
        return Err(SimError::Invalid("horizon must be at least 2 steps".into()));
    }
    let rates = angles
        .par_iter()
        .map(|&theta| {
            let (s, c) = theta.sin_cos();
            let sym = amplification_matrix(num, &[kmag * c, kmag * s]);
            let radius = sym.spectral_radius();
            if radius > 1.0 + 1e-12 {
                return Err(SimError::Unstable(format!("spectral radius {radius} at angle {theta}")));
            }
            let mut w = vec![Complex64::new(0.0, 0.0); num.n_conserved];
            w[ix] = Complex64::new(-s, 0.0);
            w[iy] = Complex64::new(c, 0.0);
            let mut f = num.equilibrium_populations(&w);
            let transverse = |f: &DVector<Complex64>| {
                let qx: Complex64 = (0..num.q).map(|j| f[j] * num.m[(ix, j)]).sum();
                let qy: Complex64 = (0..num.q).map(|j| f[j] * num.m[(iy, j)]).sum();
                (qy * c - qx * s).norm()
            };
            let start = transverse(&f);
            let mut mid = 0.0;
            for t in 1..=opts.horizon {
                f = &sym.g * f;
                let a = transverse(&f);
                if !a.is_finite() || a > start * (1.0 + 1e-9) {
                    return Err(SimError::Unstable(format!("growth at angle {theta}, step {t}")));
                }
                if t == half {
                    mid = a;
                }
            }
            let end = transverse(&f);
            Ok(-(end / mid).ln() / ((opts.horizon - half) as f64 * num.dt))
        })
        .collect::<Result<Vec<f64>, SimError>>()?;
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    Ok(AnisotropyResult {
        kmag_dx: opts.kmag_dx,
        horizon: opts.horizon,
        angles: angles.to_vec(),
        rates,
        spread: (max - min) / mean.abs(),
    })
}
