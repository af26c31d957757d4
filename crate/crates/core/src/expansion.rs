//! Equivalent equations of a linear scheme by Taylor expansion.
//!
//! In moment space one time step reads `m(t + dt) = exp(-dt L) J m(t)` with
//! `L = sum_a L_a d_a` and `L_a = M V_a M^{-1}`. Writing the non-conserved
//! moments as `Y = E W + sum_n dt^n B_n : grad^n W` and the conserved ones as
//! solutions of `d_t W + sum_n dt^{n-1} A_n : grad^n W = 0`, both series are
//! identified degree by degree in the space derivatives.
//!
//! Operators are polynomials in the commuting symbols `d_a` with matrix
//! coefficients. Grading by total degree with `dt = 1` gives the same
//! coefficients as grading by powers of `dt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latex::{moment_latex, ratfun_latex};
use crate::scheme::{build_collision, ConservedKind, SchemeSpec};
use crate::symkernel::{parse_with, RatFun, RatMatrix, SymError, Symbol};

pub const MAX_ORDER: usize = 4;
pub const AXES: [char; 3] = ['x', 'y', 'z'];

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("order {0} outside 1..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("relaxation rate of moment {0} vanishes identically")]
    ZeroRate(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("tensor dump: {0}")]
    Format(String),
}

/// `(d + n - 1)! / (n! (d - 1)!)`, the number of multisets of size `n` over
/// `d` axes.
pub fn gamma_count(d: usize, n: usize) -> usize {
    assert!(d >= 1);
    let mut c: u128 = 1;
    for k in 1..=n as u128 {
        c = c * (d as u128 - 1 + k) / k;
    }
    c as usize
}

/// Number of index tuples with the given per-axis counts.
pub fn multinomial(counts: &[u8]) -> BigInt {
    let mut out = BigInt::from(1);
    let mut total = 0u32;
    for &c in counts {
        for k in 1..=c as u32 {
            total += 1;
            out = out * BigInt::from(total) / BigInt::from(k);
        }
    }
    out
}

/// All exponent vectors of length `d` with total `n`, in lexicographically
/// decreasing order (`x^n` first).
pub fn exponent_vectors(d: usize, n: usize) -> Vec<Vec<u8>> {
    fn rec(d: usize, n: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if d == 1 {
            prefix.push(n as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=n).rev() {
            prefix.push(k as u8);
            rec(d - 1, n - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, n, &mut Vec::new(), &mut out);
    out
}

pub fn counts_of(alphas: &[usize], d: usize) -> Vec<u8> {
    let mut c = vec![0u8; d];
    for &a in alphas {
        c[a] += 1;
    }
    c
}

/// Sorted index tuple of an exponent vector, e.g. `[1, 2] -> [0, 1, 1]`.
pub fn alphas_of(counts: &[u8]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(a, &c)| std::iter::repeat_n(a, c as usize))
        .collect()
}

pub fn index_label(counts: &[u8]) -> String {
    alphas_of(counts).into_iter().map(|a| AXES[a]).collect()
}

fn counts_from_label(label: &str, d: usize) -> Option<Vec<u8>> {
    let mut c = vec![0u8; d];
    for ch in label.chars() {
        let a = AXES.iter().position(|&x| x == ch)?;
        if a >= d {
            return None;
        }
        c[a] += 1;
    }
    Some(c)
}

/// Differential operator `sum_mu C_mu d^mu` with matrix coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffOp {
    rows: usize,
    cols: usize,
    dim: usize,
    terms: BTreeMap<Vec<u8>, RatMatrix>,
}

impl DiffOp {
    pub fn zero(rows: usize, cols: usize, dim: usize) -> Self {
        DiffOp {
            rows,
            cols,
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(m: RatMatrix, dim: usize) -> Self {
        let mut op = DiffOp::zero(m.rows(), m.cols(), dim);
        op.add_term(vec![0; dim], m);
        op
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &RatMatrix)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u8]) -> Option<&RatMatrix> {
        self.terms.get(exps)
    }

    pub fn add_term(&mut self, exps: Vec<u8>, m: RatMatrix) {
        debug_assert_eq!(exps.len(), self.dim);
        if m.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(e) => {
                let s = e.add(&m).expect("shapes agree");
                if s.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *e = s;
                }
            }
            None => {
                self.terms.insert(exps, m);
            }
        }
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for (e, m) in &other.terms {
            out.add_term(e.clone(), m.clone());
        }
        out
    }

    pub fn sub(&self, other: &DiffOp) -> DiffOp {
        self.add(&other.scale(&BigRational::from_integer((-1).into())))
    }

    pub fn scale(&self, c: &BigRational) -> DiffOp {
        let mut out = DiffOp::zero(self.rows, self.cols, self.dim);
        for (e, m) in &self.terms {
            out.add_term(e.clone(), m.scale(c));
        }
        out
    }

    /// Homogeneous part of total degree `n`.
    pub fn part(&self, n: usize) -> DiffOp {
        DiffOp {
            rows: self.rows,
            cols: self.cols,
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| degree(e) == n)
                .map(|(e, m)| (e.clone(), m.clone()))
                .collect(),
        }
    }

    /// Product truncated above total degree `max_deg`.
    pub fn mul_trunc(&self, other: &DiffOp, max_deg: usize) -> DiffOp {
        let mut out = DiffOp::zero(self.rows, other.cols, self.dim);
        for (ea, ma) in &self.terms {
            for (eb, mb) in &other.terms {
                if degree(ea) + degree(eb) > max_deg {
                    continue;
                }
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ma.mul(mb).expect("shapes agree"));
            }
        }
        out
    }

    /// Degree-`n` part of the product, using only the needed pairs.
    pub fn mul_part(&self, other: &DiffOp, n: usize) -> DiffOp {
        let mut out = DiffOp::zero(self.rows, other.cols, self.dim);
        for (ea, ma) in &self.terms {
            let da = degree(ea);
            if da > n {
                continue;
            }
            for (eb, mb) in &other.terms {
                if da + degree(eb) != n {
                    continue;
                }
                let e: Vec<u8> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ma.mul(mb).expect("shapes agree"));
            }
        }
        out
    }

    /// `exp(self)` through degree `max_deg`; `self` must have no constant part.
    pub fn exp_trunc(&self, max_deg: usize) -> DiffOp {
        assert!(self.rows == self.cols);
        assert!(self.terms.keys().all(|e| degree(e) > 0));
        let mut out = DiffOp::constant(RatMatrix::identity(self.rows), self.dim);
        let mut power = out.clone();
        for p in 1..=max_deg {
            power = power.mul_trunc(self, max_deg);
            if power.is_zero() {
                break;
            }
            let inv_fact = BigRational::new(1.into(), factorial(p));
            out = out.add(&power.scale(&inv_fact));
        }
        out
    }

    /// Rows `r0..r0+rows` of every coefficient.
    pub fn row_block(&self, r0: usize, rows: usize) -> DiffOp {
        let mut out = DiffOp::zero(rows, self.cols, self.dim);
        for (e, m) in &self.terms {
            out.add_term(e.clone(), m.block(r0, 0, rows, self.cols));
        }
        out
    }

    /// Left multiplication of every coefficient by a constant matrix.
    pub fn left_mul(&self, m: &RatMatrix) -> DiffOp {
        let mut out = DiffOp::zero(m.rows(), self.cols, self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), m.mul(c).expect("shapes agree"));
        }
        out
    }

    /// Stacks `top` over `bottom`.
    pub fn stack(top: &DiffOp, bottom: &DiffOp) -> DiffOp {
        assert_eq!(top.cols, bottom.cols);
        let rows = top.rows + bottom.rows;
        let mut keys: Vec<&Vec<u8>> = top.terms.keys().chain(bottom.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut out = DiffOp::zero(rows, top.cols, top.dim);
        for e in keys {
            let mut m = RatMatrix::zeros(rows, top.cols);
            if let Some(t) = top.terms.get(e) {
                m.set_block(0, 0, t);
            }
            if let Some(b) = bottom.terms.get(e) {
                m.set_block(top.rows, 0, b);
            }
            out.add_term(e.clone(), m);
        }
        out
    }
}

fn degree(e: &[u8]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * BigInt::from(k))
}

/// Symmetric tensor `T[i][j][a_1..a_n]`, stored once per multiset of spatial
/// indices, i.e. `Gamma_d^n` matrices of size `rows x cols`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffTensor {
    order: usize,
    dim: usize,
    rows: usize,
    cols: usize,
    entries: BTreeMap<Vec<u8>, RatMatrix>,
}

/// The equivalent-equation tensor `A_n`.
pub type TensorA = CoeffTensor;

impl CoeffTensor {
    pub fn zeros(order: usize, dim: usize, rows: usize, cols: usize) -> Self {
        let entries = exponent_vectors(dim, order)
            .into_iter()
            .map(|e| (e, RatMatrix::zeros(rows, cols)))
            .collect();
        CoeffTensor {
            order,
            dim,
            rows,
            cols,
            entries,
        }
    }

    /// Tensor of the homogeneous degree-`order` part of `op`: the entry for a
    /// multiset is the operator coefficient divided by its multiplicity.
    pub fn from_operator(op: &DiffOp, order: usize) -> Self {
        let mut t = CoeffTensor::zeros(order, op.dim, op.rows, op.cols);
        for (e, m) in op.terms() {
            if degree(e) == order {
                let w = BigRational::new(1.into(), multinomial(e));
                t.entries.insert(e.clone(), m.scale(&w));
            }
        }
        t
    }

    pub fn to_operator(&self) -> DiffOp {
        let mut op = DiffOp::zero(self.rows, self.cols, self.dim);
        for (e, m) in &self.entries {
            op.add_term(e.clone(), m.scale(&BigRational::from_integer(multinomial(e))));
        }
        op
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored scalar entries, `rows * cols * Gamma_d^n`.
    pub fn independent_entries(&self) -> usize {
        self.entries.len() * self.rows * self.cols
    }

    /// Stored multisets with their coefficient matrices.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<u8>, &RatMatrix)> {
        self.entries.iter()
    }

    pub fn matrix(&self, counts: &[u8]) -> &RatMatrix {
        &self.entries[counts]
    }

    pub fn matrix_mut(&mut self, counts: &[u8]) -> &mut RatMatrix {
        self.entries.get_mut(counts).expect("multiset of the tensor order")
    }

    /// `T[i][j][alphas]` for any ordering of `alphas`.
    pub fn get(&self, i: usize, j: usize, alphas: &[usize]) -> &RatFun {
        assert_eq!(alphas.len(), self.order);
        &self.entries[&counts_of(alphas, self.dim)][(i, j)]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(RatMatrix::is_zero)
    }

    pub fn try_map(&self, f: impl Fn(&RatFun) -> Result<RatFun, SymError>) -> Result<CoeffTensor, SymError> {
        Ok(CoeffTensor {
            entries: self
                .entries
                .iter()
                .map(|(e, m)| Ok((e.clone(), m.try_map(&f)?)))
                .collect::<Result<_, SymError>>()?,
            ..self.clone()
        })
    }

    pub fn substitute(&self, bindings: &std::collections::HashMap<Symbol, RatFun>) -> Result<CoeffTensor, SymError> {
        self.try_map(|e| e.substitute(bindings))
    }

    pub fn sub(&self, other: &CoeffTensor) -> CoeffTensor {
        assert_eq!((self.order, self.dim, self.rows, self.cols), (other.order, other.dim, other.rows, other.cols));
        CoeffTensor {
            entries: self
                .entries
                .iter()
                .map(|(e, m)| (e.clone(), m.sub(&other.entries[e]).expect("shapes agree")))
                .collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &CoeffTensor) -> CoeffTensor {
        assert_eq!((self.order, self.dim, self.rows, self.cols), (other.order, other.dim, other.rows, other.cols));
        CoeffTensor {
            entries: self
                .entries
                .iter()
                .map(|(e, m)| (e.clone(), m.add(&other.entries[e]).expect("shapes agree")))
                .collect(),
            ..self.clone()
        }
    }

    /// `sum_{a_1..a_n} T[.][.][a_1..a_n] k_{a_1}..k_{a_n}` as a matrix.
    pub fn contract(&self, k: &[RatFun]) -> RatMatrix {
        assert_eq!(k.len(), self.dim);
        let mut out = RatMatrix::zeros(self.rows, self.cols);
        for (e, m) in &self.entries {
            let mut w = RatFun::constant(BigRational::from_integer(multinomial(e)));
            for (a, &c) in e.iter().enumerate() {
                for _ in 0..c {
                    w = &w * &k[a];
                }
            }
            if !w.is_zero() {
                out = out.add(&m.scale_by(&w)).expect("shapes agree");
            }
        }
        out
    }
}

/// Per-row contraction of column `j` of `A` with `k`.
pub fn tensor_contract(a: &CoeffTensor, k: &[RatFun], j: usize) -> Vec<RatFun> {
    let m = a.contract(k);
    (0..a.rows()).map(|i| m[(i, j)].clone()).collect()
}

/// `L_a = M Diag((v_j)_a) M^{-1}`, one per axis.
#[derive(Debug, Clone)]
pub struct TransportOperators {
    pub lambda_ops: Vec<RatMatrix>,
}

pub fn transport_matrices(spec: &SchemeSpec) -> TransportOperators {
    let lambda = RatFun::var(spec.lambda);
    let m = spec.moment_matrix();
    let inv = spec.moment_inverse();
    let lambda_ops = (0..spec.dim())
        .map(|a| {
            let v: Vec<RatFun> = spec
                .velocities
                .iter()
                .map(|c| lambda.scale(&BigRational::from_integer(c[a].into())))
                .collect();
            m.mul(&RatMatrix::diag(&v)).and_then(|x| x.mul(inv)).expect("square")
        })
        .collect();
    TransportOperators { lambda_ops }
}

impl TransportOperators {
    /// `sum_a L_a d_a`.
    pub fn as_operator(&self) -> DiffOp {
        let d = self.lambda_ops.len();
        let q = self.lambda_ops[0].rows();
        let mut op = DiffOp::zero(q, q, d);
        for (a, l) in self.lambda_ops.iter().enumerate() {
            let mut e = vec![0u8; d];
            e[a] = 1;
            op.add_term(e, l.clone());
        }
        op
    }
}

#[derive(Debug, Clone)]
pub struct ExpansionResult {
    pub dim: usize,
    pub conserved: Vec<String>,
    /// Frame behaviour of each conserved moment.
    pub kinds: Vec<ConservedKind>,
    pub nonconserved: Vec<String>,
    /// `A_1..A_M`, `N x N`.
    pub a: Vec<CoeffTensor>,
    /// `B_1..B_M`, `(q - N) x N`.
    pub b: Vec<CoeffTensor>,
}

impl ExpansionResult {
    pub fn order(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self, n: usize) -> &CoeffTensor {
        &self.a[n - 1]
    }

    pub fn conserved_index(&self, name: &str) -> Option<usize> {
        self.conserved.iter().position(|n| n == name)
    }

    /// Keeps the tensors through `order`.
    pub fn truncated(&self, order: usize) -> ExpansionResult {
        ExpansionResult {
            a: self.a[..order.min(self.a.len())].to_vec(),
            b: self.b[..order.min(self.b.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn substitute(&self, bindings: &std::collections::HashMap<Symbol, RatFun>) -> Result<ExpansionResult, SymError> {
        Ok(ExpansionResult {
            a: self.a.iter().map(|t| t.substitute(bindings)).collect::<Result<_, _>>()?,
            b: self.b.iter().map(|t| t.substitute(bindings)).collect::<Result<_, _>>()?,
            ..self.clone()
        })
    }
}

/// Derives `A_1..A_order` and `B_1..B_order`.
pub fn derive_equivalent_equations(spec: &SchemeSpec, order: usize) -> Result<ExpansionResult, ExpansionError> {
    if order == 0 || order > MAX_ORDER {
        return Err(ExpansionError::OrderOutOfRange(order));
    }
    for (k, s) in spec.rates().iter().enumerate() {
        if s.is_zero() {
            return Err(ExpansionError::ZeroRate(spec.basis.names[spec.n_conserved() + k].clone()));
        }
    }
    let d = spec.dim();
    let q = spec.q();
    let n_w = spec.n_conserved();
    let n_y = q - n_w;

    let transport = transport_matrices(spec).as_operator();
    let stream = transport
        .scale(&BigRational::from_integer((-1).into()))
        .exp_trunc(order);

    // Work with C_n = S B_n so every quantity stays polynomial in sigma:
    // B_n = D C_n and (Id - S) B_n = (D - Id) C_n, where D = S^{-1}.
    let half = RatFun::from_ratio(1, 2);
    let dd = RatMatrix::diag(&spec.sigmas.iter().map(|s| s + &half).collect::<Vec<_>>());
    let dd_minus = dd.sub(&RatMatrix::identity(n_y)).expect("square");

    let mut a_ops: Vec<DiffOp> = Vec::new();
    let mut c_ops: Vec<DiffOp> = Vec::new();
    let id_w = DiffOp::constant(RatMatrix::identity(n_w), d);
    let eq = DiffOp::constant(spec.equilibrium.clone(), d);

    for n in 1..=order {
        let start = std::time::Instant::now();
        let mut g = DiffOp::zero(n_w, n_w, d);
        for a in &a_ops {
            g = g.sub(a);
        }
        let exp_g = g.exp_trunc(n);
        let mut y_p = eq.clone();
        let mut y_jp = eq.clone();
        for c in &c_ops {
            y_p = y_p.add(&c.left_mul(&dd));
            y_jp = y_jp.add(&c.left_mul(&dd_minus));
        }
        let p = DiffOp::stack(&id_w, &y_p);
        let jp = DiffOp::stack(&id_w, &y_jp);
        let r = p.mul_part(&exp_g, n).sub(&stream.mul_part(&jp, n));
        let a_n = r.row_block(0, n_w);
        let c_n = a_n.left_mul(&spec.equilibrium).sub(&r.row_block(n_w, n_y));
        a_ops.push(a_n);
        c_ops.push(c_n);
        log::info!("derived order {n} in {:.2?}", start.elapsed());
    }

    let a = a_ops
        .iter()
        .enumerate()
        .map(|(k, op)| CoeffTensor::from_operator(op, k + 1))
        .collect();
    let b = c_ops
        .iter()
        .enumerate()
        .map(|(k, op)| CoeffTensor::from_operator(&op.left_mul(&dd), k + 1))
        .collect();
    Ok(ExpansionResult {
        dim: d,
        conserved: spec.basis.names[..n_w].to_vec(),
        kinds: spec.basis.conserved.clone(),
        nonconserved: spec.basis.names[n_w..].to_vec(),
        a,
        b,
    })
}

/// `P exp(G) - exp(-L) J P` through degree `M`, with
/// `P = [Id; E + sum B_n]` and `G = -sum A_n`. Zero for a correct expansion.
pub fn remainder(spec: &SchemeSpec, res: &ExpansionResult) -> DiffOp {
    let order = res.order();
    let d = spec.dim();
    let n_w = spec.n_conserved();
    let j = build_collision(spec).j;
    let stream = transport_matrices(spec)
        .as_operator()
        .scale(&BigRational::from_integer((-1).into()))
        .exp_trunc(order);
    let mut g = DiffOp::zero(n_w, n_w, d);
    for a in &res.a {
        g = g.sub(&a.to_operator());
    }
    let mut y = DiffOp::constant(spec.equilibrium.clone(), d);
    for b in &res.b {
        y = y.add(&b.to_operator());
    }
    let p = DiffOp::stack(&DiffOp::constant(RatMatrix::identity(n_w), d), &y);
    let lhs = p.mul_trunc(&g.exp_trunc(order), order);
    let rhs = stream.mul_trunc(&p.left_mul(&j), order);
    lhs.sub(&rhs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntryDump {
    pub row: String,
    pub col: String,
    pub index: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorDump {
    pub order: usize,
    pub entries: Vec<TensorEntryDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionDump {
    pub dimension: usize,
    pub conserved: Vec<String>,
    pub kinds: Vec<ConservedKind>,
    pub nonconserved: Vec<String>,
    pub a: Vec<TensorDump>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<TensorDump>,
}

fn dump_tensor(t: &CoeffTensor, rows: &[String], cols: &[String]) -> TensorDump {
    let mut entries = Vec::new();
    for (e, m) in t.entries() {
        for i in 0..t.rows() {
            for j in 0..t.cols() {
                if !m[(i, j)].is_zero() {
                    entries.push(TensorEntryDump {
                        row: rows[i].clone(),
                        col: cols[j].clone(),
                        index: index_label(e),
                        value: m[(i, j)].to_canonical_string(),
                    });
                }
            }
        }
    }
    TensorDump {
        order: t.order(),
        entries,
    }
}

fn load_tensor(
    dump: &TensorDump,
    dim: usize,
    rows: &[String],
    cols: &[String],
    resolve: &dyn Fn(&str) -> Option<Symbol>,
) -> Result<CoeffTensor, ExpansionError> {
    let mut t = CoeffTensor::zeros(dump.order, dim, rows.len(), cols.len());
    for e in &dump.entries {
        let bad = |what: &str| ExpansionError::Format(format!("unknown {what} in {e:?}"));
        let i = rows.iter().position(|r| *r == e.row).ok_or_else(|| bad("row"))?;
        let j = cols.iter().position(|c| *c == e.col).ok_or_else(|| bad("column"))?;
        let counts = counts_from_label(&e.index, dim)
            .filter(|c| degree(c) == dump.order)
            .ok_or_else(|| bad("index"))?;
        t.matrix_mut(&counts)[(i, j)] = parse_with(&e.value, resolve)?;
    }
    Ok(t)
}

impl ExpansionResult {
    pub fn to_dump(&self, with_b: bool) -> ExpansionDump {
        ExpansionDump {
            dimension: self.dim,
            conserved: self.conserved.clone(),
            kinds: self.kinds.clone(),
            nonconserved: self.nonconserved.clone(),
            a: self.a.iter().map(|t| dump_tensor(t, &self.conserved, &self.conserved)).collect(),
            b: if with_b {
                self.b
                    .iter()
                    .map(|t| dump_tensor(t, &self.nonconserved, &self.conserved))
                    .collect()
            } else {
                Vec::new()
            },
        }
    }

    pub fn to_json(&self, with_b: bool) -> String {
        serde_json::to_string_pretty(&self.to_dump(with_b)).expect("dump serializes")
    }

    pub fn from_dump(dump: &ExpansionDump, resolve: &dyn Fn(&str) -> Option<Symbol>) -> Result<ExpansionResult, ExpansionError> {
        let a = dump
            .a
            .iter()
            .map(|t| load_tensor(t, dump.dimension, &dump.conserved, &dump.conserved, resolve))
            .collect::<Result<_, _>>()?;
        let b = dump
            .b
            .iter()
            .map(|t| load_tensor(t, dump.dimension, &dump.nonconserved, &dump.conserved, resolve))
            .collect::<Result<_, _>>()?;
        Ok(ExpansionResult {
            dim: dump.dimension,
            conserved: dump.conserved.clone(),
            kinds: dump.kinds.clone(),
            nonconserved: dump.nonconserved.clone(),
            a,
            b,
        })
    }

    pub fn from_json(text: &str, resolve: &dyn Fn(&str) -> Option<Symbol>) -> Result<ExpansionResult, ExpansionError> {
        let dump: ExpansionDump = serde_json::from_str(text).map_err(|e| ExpansionError::Format(e.to_string()))?;
        ExpansionResult::from_dump(&dump, resolve)
    }

    /// One LaTeX equation per conserved moment, with all orders through
    /// `self.order()`.
    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        for (i, wi) in self.conserved.iter().enumerate() {
            let mut line = format!(r"\partial_t {}", moment_latex(wi));
            for t in &self.a {
                let n = t.order();
                let dt = match n {
                    1 => String::new(),
                    2 => r"\Delta t\,".to_string(),
                    _ => format!(r"\Delta t^{{{}}}\,", n - 1),
                };
                // operator form: the multinomial weight folds symmetric slots together
                let op = t.to_operator();
                for (j, wj) in self.conserved.iter().enumerate() {
                    for e in exponent_vectors(self.dim, n) {
                        let Some(m) = op.coeff(&e) else { continue };
                        let c = &m[(i, j)];
                        if c.is_zero() {
                            continue;
                        }
                        let deriv: String = e
                            .iter()
                            .enumerate()
                            .filter(|(_, &k)| k > 0)
                            .map(|(a, &k)| {
                                if k == 1 {
                                    format!(r"\partial_{}", AXES[a])
                                } else {
                                    format!(r"\partial_{}^{{{}}}", AXES[a], k)
                                }
                            })
                            .collect();
                        let coeff = if c.is_one() {
                            " + ".to_string()
                        } else if (-c).is_one() {
                            " - ".to_string()
                        } else {
                            format!(" + \\left({}\\right)", ratfun_latex(c))
                        };
                        let _ = write!(line, "{coeff}{dt}{deriv} {}", moment_latex(wj));
                    }
                }
            }
            line.push_str(" = 0");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::d2q9_preset;

    #[test]
    fn gamma_counts() {
        assert_eq!(gamma_count(2, 0), 1);
        assert_eq!(gamma_count(2, 2), 3);
        assert_eq!(gamma_count(2, 3), 4);
        assert_eq!(gamma_count(2, 4), 5);
        assert_eq!(gamma_count(3, 2), 6);
        for n in 0..6 {
            assert_eq!(exponent_vectors(2, n).len(), gamma_count(2, n));
            assert_eq!(exponent_vectors(3, n).len(), gamma_count(3, n));
        }
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(&[2, 1]), BigInt::from(3));
        assert_eq!(multinomial(&[2, 2]), BigInt::from(6));
        assert_eq!(multinomial(&[4, 0]), BigInt::from(1));
        assert_eq!(index_label(&[1, 2]), "xyy");
        assert_eq!(counts_from_label("yxy", 2), Some(vec![1, 2]));
    }

    #[test]
    fn mass_flux_is_momentum() {
        let spec = d2q9_preset();
        let t = transport_matrices(&spec);
        for (a, l) in t.lambda_ops.iter().enumerate() {
            for j in 0..9 {
                let expected = if j == 1 + a { RatFun::one() } else { RatFun::zero() };
                assert_eq!(l[(0, j)], expected);
            }
        }
    }

    #[test]
    fn first_order_mass_row() {
        let spec = d2q9_preset();
        let res = derive_equivalent_equations(&spec, 1).unwrap();
        let a1 = res.a(1);
        assert!(a1.get(0, 1, &[0]).is_one());
        assert!(a1.get(0, 2, &[1]).is_one());
        assert!(a1.get(0, 0, &[0]).is_zero());
        assert!(a1.get(0, 0, &[1]).is_zero());
        assert!(a1.get(0, 1, &[1]).is_zero());
        assert!(a1.get(0, 2, &[0]).is_zero());
        let latex = res.to_latex();
        assert!(latex.starts_with(r"\partial_t \rho + \partial_x q_x + \partial_y q_y = 0"));
    }

    #[test]
    fn order_ceiling() {
        let spec = d2q9_preset();
        assert!(matches!(derive_equivalent_equations(&spec, 0), Err(ExpansionError::OrderOutOfRange(0))));
        assert!(matches!(derive_equivalent_equations(&spec, 5), Err(ExpansionError::OrderOutOfRange(5))));
    }

    #[test]
    fn contraction_weights_mixed_indices() {
        let spec = d2q9_preset();
        let res = derive_equivalent_equations(&spec, 2).unwrap();
        let a2 = res.a(2);
        let k = [RatFun::from_int(1), RatFun::from_int(1)];
        let row = tensor_contract(a2, &k, 1);
        let mut brute = RatFun::zero();
        for a in 0..2 {
            for b in 0..2 {
                brute = &brute + a2.get(1, 1, &[a, b]);
            }
        }
        assert_eq!(row[1], brute);
        let zero = [RatFun::zero(), RatFun::zero()];
        assert!(tensor_contract(a2, &zero, 0).iter().all(RatFun::is_zero));
        assert_eq!(a2.independent_entries(), 9 * gamma_count(2, 2));
    }
}
