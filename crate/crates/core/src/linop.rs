//! Matrix-free linear operators with explicit adjoints.
//!
//! Every transform in this crate (extensions, wavelet stages, convolutions,
//! blurs, differences) is exposed as a [`LinearOperator`]: a pair of
//! closures for the forward map and its adjoint, plus the domain and
//! codomain dimensions. Operators compose, scale and add without ever
//! forming a matrix. [`to_dense`] materializes small operators so that the
//! closed-form adjoints can be checked against an honest transpose, and
//! [`dot_test`] is the randomized falsifier for the adjoint identity
//! `<A x, y> = <x, A* y>`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};

type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A real linear map `R^in_dim -> R^out_dim` given by its action and the
/// action of its adjoint.
///
/// Operators are immutable once built and cheap to clone (the closures are
/// reference counted), so they can be shared across threads.
#[derive(Clone)]
pub struct LinearOperator {
    in_dim: usize,
    out_dim: usize,
    forward: MapFn,
    adjoint: MapFn,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator")
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .finish_non_exhaustive()
    }
}

impl LinearOperator {
    /// Builds an operator from closures. The closures are only ever called
    /// with inputs of the declared length; they must return outputs of the
    /// declared length.
    pub fn new<F, A>(in_dim: usize, out_dim: usize, forward: F, adjoint: A) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        A: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            in_dim,
            out_dim,
            forward: Arc::new(forward),
            adjoint: Arc::new(adjoint),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, |x| x.to_vec(), |y| y.to_vec())
    }

    /// Wraps a dense matrix; the adjoint is the transpose.
    pub fn from_dense(m: DenseMatrix) -> Self {
        let m = Arc::new(m);
        let mt = Arc::clone(&m);
        Self::new(
            m.cols,
            m.rows,
            move |x| m.matvec(x),
            move |y| mt.matvec_transpose(y),
        )
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("operator input", self.in_dim, x.len())?;
        Ok((self.forward)(x))
    }

    pub fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint input", self.out_dim, y.len())?;
        Ok((self.adjoint)(y))
    }

    /// The adjoint as an operator in its own right (forward and adjoint swapped).
    pub fn adjoint_view(&self) -> Self {
        Self {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            forward: Arc::clone(&self.adjoint),
            adjoint: Arc::clone(&self.forward),
        }
    }

    /// `alpha * self`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let f = Arc::clone(&self.forward);
        let a = Arc::clone(&self.adjoint);
        Self::new(
            self.in_dim,
            self.out_dim,
            move |x| f(x).into_iter().map(|v| alpha * v).collect(),
            move |y| a(y).into_iter().map(|v| alpha * v).collect(),
        )
    }

    /// Replaces the adjoint with an arbitrary map of the right shape.
    ///
    /// This is how the "pseudoinverse approximation" is expressed: the
    /// forward map stays, and something that is *not* its adjoint takes the
    /// adjoint slot. [`dot_test`] will flag the result.
    pub fn with_adjoint<A>(&self, adjoint: A) -> Self
    where
        A: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            forward: Arc::clone(&self.forward),
            adjoint: Arc::new(adjoint),
        }
    }
}

/// `a ∘ b`: apply `b` first. The adjoint is `b* ∘ a*`.
pub fn compose(a: &LinearOperator, b: &LinearOperator) -> Result<LinearOperator> {
    if b.out_dim != a.in_dim {
        return Err(Error::Compose {
            outer_in: a.in_dim,
            inner_out: b.out_dim,
        });
    }
    let (af, aa) = (Arc::clone(&a.forward), Arc::clone(&a.adjoint));
    let (bf, ba) = (Arc::clone(&b.forward), Arc::clone(&b.adjoint));
    Ok(LinearOperator::new(
        b.in_dim,
        a.out_dim,
        move |x| af(&bf(x)),
        move |y| ba(&aa(y)),
    ))
}

/// `a + b` for operators of identical shape.
pub fn sum(a: &LinearOperator, b: &LinearOperator) -> Result<LinearOperator> {
    check_len("sum: input dimension", a.in_dim, b.in_dim)?;
    check_len("sum: output dimension", a.out_dim, b.out_dim)?;
    let (af, aa) = (Arc::clone(&a.forward), Arc::clone(&a.adjoint));
    let (bf, ba) = (Arc::clone(&b.forward), Arc::clone(&b.adjoint));
    Ok(LinearOperator::new(
        a.in_dim,
        a.out_dim,
        move |x| add(af(x), &bf(x)),
        move |y| add(aa(y), &ba(y)),
    ))
}

fn add(mut u: Vec<f64>, v: &[f64]) -> Vec<f64> {
    u.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    u
}

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("dense matrix entries", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len("dense matrix row", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate().take(self.rows) {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("matmul inner dimension", self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest entrywise absolute difference; `INFINITY` on shape mismatch.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Materializes `op` column by column: column `j` is `op(e_j)`.
pub fn to_dense(op: &LinearOperator) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(op.out_dim, op.in_dim);
    let mut e = vec![0.0; op.in_dim];
    for j in 0..op.in_dim {
        e[j] = 1.0;
        let col = (op.forward)(&e);
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Moore-Penrose pseudoinverse `(MᵀM)⁻¹Mᵀ` of a full-column-rank matrix.
pub fn dense_pinv(m: &DenseMatrix) -> Result<DenseMatrix> {
    let a = nalgebra::DMatrix::from_row_slice(m.rows, m.cols, &m.data);
    let gram = a.transpose() * &a;
    let lu = gram.lu();
    let u = lu.u();
    let scale = u.diagonal().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let pivot = u.diagonal().iter().fold(f64::INFINITY, |s, v| s.min(v.abs()));
    if m.cols == 0 || !(pivot > scale * 1e-13) {
        return Err(Error::Singular {
            pivot: if pivot.is_finite() { pivot } else { 0.0 },
        });
    }
    let x = lu
        .solve(&a.transpose())
        .ok_or(Error::Singular { pivot })?;
    let mut out = DenseMatrix::zeros(m.cols, m.rows);
    for i in 0..m.cols {
        for j in 0..m.rows {
            out[(i, j)] = x[(i, j)];
        }
    }
    Ok(out)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Randomized adjoint test.
///
/// Draws `trials` pairs of standard-normal vectors and returns the largest
/// `|<A x, y> - <x, A* y>| / (‖x‖‖y‖ + ε)`. Deterministic for a given seed.
pub fn dot_test(op: &LinearOperator, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials.max(1) {
        let x: Vec<f64> = (0..op.in_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let y: Vec<f64> = (0..op.out_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let lhs = dot(&(op.forward)(&x), &y);
        let rhs = dot(&x, &(op.adjoint)(&y));
        let denom = norm2(&x) * norm2(&y) + f64::EPSILON;
        worst = worst.max((lhs - rhs).abs() / denom);
    }
    worst
}

/// Seeded standard-normal vector; shared by tests, solvers and generators.
pub fn randn(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}
