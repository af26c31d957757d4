use std::collections::HashMap;
use std::fmt;

use num_rational::BigRational;

use super::{RatFun, SymError, Symbol};

/// Dense row-major matrix of rational functions.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<RatFun>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![RatFun::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = RatFun::one();
        }
        m
    }

    pub fn diag(entries: &[RatFun]) -> Self {
        let mut m = RatMatrix::zeros(entries.len(), entries.len());
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<RatFun>>) -> Result<Self, SymError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(SymError::DimensionMismatch("ragged rows".into()));
        }
        Ok(RatMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> RatFun) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RatMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(RatFun::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let e = &self[(i, j)];
                    if i == j {
                        e.is_one()
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    pub fn entries(&self) -> impl Iterator<Item = &RatFun> {
        self.data.iter()
    }

    pub fn map(&self, f: impl Fn(&RatFun) -> RatFun) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(&RatFun) -> Result<RatFun, SymError>) -> Result<RatMatrix, SymError> {
        Ok(RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    pub fn transpose(&self) -> RatMatrix {
        RatMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> RatMatrix {
        RatMatrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &RatMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)].clone();
            }
        }
    }

    pub fn add(&self, other: &RatMatrix) -> Result<RatMatrix, SymError> {
        self.check_same(other)?;
        Ok(RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &RatMatrix) -> Result<RatMatrix, SymError> {
        self.check_same(other)?;
        Ok(RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: &BigRational) -> RatMatrix {
        self.map(|e| e.scale(c))
    }

    pub fn scale_by(&self, f: &RatFun) -> RatMatrix {
        self.map(|e| e * f)
    }

    fn check_same(&self, other: &RatMatrix) -> Result<(), SymError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(SymError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &RatMatrix) -> Result<RatMatrix, SymError> {
        if self.cols != other.rows {
            return Err(SymError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let t = a * b;
                    let e = &mut out[(i, j)];
                    *e = &*e + &t;
                }
            }
        }
        Ok(out)
    }

    /// Inverse by fraction-free (Bareiss) elimination on `[A | I]`; the
    /// division by the previous pivot is exact at every step.
    pub fn inverse(&self) -> Result<RatMatrix, SymError> {
        if self.rows != self.cols {
            return Err(SymError::DimensionMismatch("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let w = 2 * n;
        let mut a = RatMatrix::zeros(n, w);
        a.set_block(0, 0, self);
        a.set_block(0, n, &RatMatrix::identity(n));
        let mut prev = RatFun::one();
        for k in 0..n {
            let p = (k..n).find(|&r| !a[(r, k)].is_zero()).ok_or(SymError::Singular)?;
            if p != k {
                for j in 0..w {
                    a.data.swap(k * w + j, p * w + j);
                }
            }
            let pivot = a[(k, k)].clone();
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)].clone();
                for j in 0..w {
                    if j == k {
                        continue;
                    }
                    let v = &(&pivot * &a[(i, j)]) - &(&f * &a[(k, j)]);
                    a[(i, j)] = v.div_ref(&prev)?;
                }
                a[(i, k)] = RatFun::zero();
            }
            prev = pivot;
        }
        // Gauss-Jordan form: row i is (d_i e_i | d_i A^{-1} row i).
        let mut inv = RatMatrix::zeros(n, n);
        for i in 0..n {
            let d = a[(i, i)].clone();
            if d.is_zero() {
                return Err(SymError::Singular);
            }
            for j in 0..n {
                inv[(i, j)] = a[(i, n + j)].div_ref(&d)?;
            }
        }
        Ok(inv)
    }

    /// Determinant by Bareiss elimination.
    pub fn determinant(&self) -> Result<RatFun, SymError> {
        if self.rows != self.cols {
            return Err(SymError::DimensionMismatch("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(RatFun::one());
        }
        let mut a = self.clone();
        let mut sign = 1i64;
        let mut prev = RatFun::one();
        for k in 0..n - 1 {
            let Some(p) = (k..n).find(|&r| !a[(r, k)].is_zero()) else {
                return Ok(RatFun::zero());
            };
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                sign = -sign;
            }
            let pivot = a[(k, k)].clone();
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &(&pivot * &a[(i, j)]) - &(&a[(i, k)] * &a[(k, j)]);
                    a[(i, j)] = v.div_ref(&prev)?;
                }
                a[(i, k)] = RatFun::zero();
            }
            prev = pivot;
        }
        let d = a[(n - 1, n - 1)].clone();
        Ok(if sign < 0 { -&d } else { d })
    }

    pub fn substitute(&self, bindings: &HashMap<Symbol, RatFun>) -> Result<RatMatrix, SymError> {
        self.try_map(|e| e.substitute(bindings))
    }

    pub fn eval(&self, point: &HashMap<Symbol, BigRational>) -> Result<Vec<Vec<BigRational>>, SymError> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].eval(point)).collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = RatFun;
    fn index(&self, (i, j): (usize, usize)) -> &RatFun {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut RatFun {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
