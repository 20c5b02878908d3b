//! Dense complex square matrices: the carrier for observables, states and
//! Hilbert–Schmidt vectors.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cabs, cx, re, Cx, Real};

/// A `dim × dim` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<R: Real> {
    m: DMatrix<Cx<R>>,
}

impl<R: Real> Operator<R> {
    pub fn from_matrix(m: DMatrix<Cx<R>>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Shape(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix already known to be square.
    pub(crate) fn wrap(m: DMatrix<Cx<R>>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cx<R>) -> Self {
        Self::wrap(DMatrix::from_fn(dim, dim, |i, j| f(i, j)))
    }

    /// Row-major entries; `entries.len()` must be a perfect square.
    pub fn from_row_major(entries: &[Cx<R>]) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() || dim == 0 {
            return Err(Error::Shape(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Ok(Self::wrap(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(DMatrix::identity(dim, dim))
    }

    pub fn diag(values: &[R]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { re(values[i]) } else { Cx::zero() })
    }

    pub fn diag_complex(values: &[Cx<R>]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { values[i] } else { Cx::zero() })
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Cx<R>], v: &[Cx<R>]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Shape(format!("outer product of lengths {} and {}", u.len(), v.len())));
        }
        Ok(Self::from_fn(u.len(), |i, j| u[i] * v[j].conj()))
    }

    pub fn sigma_x() -> Self {
        let (o, l) = (Cx::zero(), Cx::one());
        Self::from_fn(2, |i, j| if i != j { l } else { o })
    }

    pub fn sigma_y() -> Self {
        let i_ = cx(R::zero(), R::one());
        Self::wrap(DMatrix::from_row_slice(2, 2, &[Cx::zero(), -i_, i_, Cx::zero()]))
    }

    pub fn sigma_z() -> Self {
        Self::diag(&[R::one(), -R::one()])
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Cx<R>> {
        &self.m
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut DMatrix<Cx<R>> {
        &mut self.m
    }

    pub fn into_matrix(self) -> DMatrix<Cx<R>> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> Cx<R> {
        self.m[(i, j)]
    }

    /// Row-major copy of the entries.
    pub fn row_major(&self) -> Vec<Cx<R>> {
        let d = self.dim();
        (0..d * d).map(|k| self.m[(k / d, k % d)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.m.adjoint())
    }

    pub fn trace(&self) -> Cx<R> {
        self.m.trace()
    }

    pub fn scale(&self, z: Cx<R>) -> Self {
        Self::wrap(&self.m * z)
    }

    pub fn scale_re(&self, x: R) -> Self {
        self.scale(re(x))
    }

    pub fn hermitian_part(&self) -> Self {
        Self::wrap((&self.m + self.m.adjoint()) * re(R::lit(0.5)))
    }

    /// `AB − BA`.
    pub fn commutator(&self, b: &Self) -> Self {
        Self::wrap(&self.m * &b.m - &b.m * &self.m)
    }

    /// Hilbert–Schmidt inner product `tr(A* B)`.
    pub fn hs_inner(&self, b: &Self) -> Cx<R> {
        self.m.iter().zip(b.m.iter()).fold(Cx::zero(), |acc, (x, y)| acc + x.conj() * y)
    }

    pub fn hs_norm(&self) -> R {
        self.m.iter().fold(R::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// Operator norm: largest singular value.
    pub fn op_norm(&self) -> R {
        if self.m.iter().all(|z| z.is_zero()) {
            return R::zero();
        }
        self.m
            .clone()
            .singular_values()
            .iter()
            .fold(R::zero(), |a, &s| if s > a { s } else { a })
    }

    /// `max |A_ij − B_ij|`.
    pub fn max_abs_diff(&self, b: &Self) -> R {
        self.m
            .iter()
            .zip(b.m.iter())
            .fold(R::zero(), |a, (x, y)| {
                let d = cabs(*x - *y);
                if d > a {
                    d
                } else {
                    a
                }
            })
    }

    /// Operator norm of `A − A*`.
    pub fn asymmetry(&self) -> R {
        Self::wrap(&self.m - self.m.adjoint()).op_norm()
    }

    /// Checks `‖A − A*‖ ≤ rel_tol·‖A‖`, returning the measured asymmetry on
    /// failure. A Frobenius pre-check avoids the SVD in the common case.
    pub fn ensure_hermitian(&self, rel_tol: R) -> Result<()> {
        let diff = Self::wrap(&self.m - self.m.adjoint());
        let fro = diff.hs_norm();
        if fro.is_zero() {
            return Ok(());
        }
        let sqrt_d = R::from_usize(self.dim()).unwrap().sqrt();
        if fro <= rel_tol * self.hs_norm() / sqrt_d {
            return Ok(());
        }
        let asym = diff.op_norm();
        let tol = rel_tol * self.op_norm();
        if asym <= tol {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                asymmetry: asym.as_f64(),
                tolerance: tol.as_f64(),
            })
        }
    }

    pub fn is_hermitian(&self, rel_tol: R) -> bool {
        self.ensure_hermitian(rel_tol).is_ok()
    }

    /// Kronecker product in `(self ⊗ other)` order.
    pub fn tensor(&self, b: &Self) -> Self {
        Self::wrap(self.m.kronecker(&b.m))
    }

    /// Traces out factor `which` (0-based) of a tensor product with the
    /// given factor dimensions.
    pub fn partial_trace(&self, factor_dims: &[usize], which: usize) -> Result<Self> {
        let total: usize = factor_dims.iter().product();
        if total != self.dim() || factor_dims.is_empty() {
            return Err(Error::Shape(format!(
                "factor dims {:?} multiply to {}, operator has dim {}",
                factor_dims,
                total,
                self.dim()
            )));
        }
        if which >= factor_dims.len() {
            return Err(Error::Shape(format!(
                "factor index {} out of range for {} factors",
                which,
                factor_dims.len()
            )));
        }
        // index = outer * (dk * inner) + k * inner + rest
        let dk = factor_dims[which];
        let inner: usize = factor_dims[which + 1..].iter().product();
        let outer: usize = factor_dims[..which].iter().product();
        let rd = outer * inner;
        let mut out = DMatrix::zeros(rd, rd);
        for a in 0..outer {
            for b in 0..inner {
                for c in 0..outer {
                    for e in 0..inner {
                        let mut acc = Cx::zero();
                        for k in 0..dk {
                            let row = a * dk * inner + k * inner + b;
                            let col = c * dk * inner + k * inner + e;
                            acc += self.m[(row, col)];
                        }
                        out[(a * inner + b, c * inner + e)] = acc;
                    }
                }
            }
        }
        Ok(Self::wrap(out))
    }

    fn check_same_dim(&self, b: &Self, what: &str) -> Result<()> {
        if self.dim() == b.dim() {
            Ok(())
        } else {
            Err(Error::Shape(format!("{}: dims {} and {}", what, self.dim(), b.dim())))
        }
    }

    pub fn try_mul(&self, b: &Self) -> Result<Self> {
        self.check_same_dim(b, "product")?;
        Ok(self * b)
    }

    pub fn try_add(&self, b: &Self) -> Result<Self> {
        self.check_same_dim(b, "sum")?;
        Ok(self + b)
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_product(&self, b: &Self) -> Cx<R> {
        let d = self.dim();
        let mut acc = Cx::zero();
        for i in 0..d {
            for k in 0..d {
                acc += self.m[(i, k)] * b.m[(k, i)];
            }
        }
        acc
    }
}

impl<'a, R: Real> Mul<&'a Operator<R>> for &'a Operator<R> {
    type Output = Operator<R>;
    fn mul(self, rhs: &'a Operator<R>) -> Operator<R> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator::wrap(&self.m * &rhs.m)
    }
}

impl<R: Real> Mul for Operator<R> {
    type Output = Operator<R>;
    fn mul(self, rhs: Operator<R>) -> Operator<R> {
        &self * &rhs
    }
}

impl<'a, R: Real> Add<&'a Operator<R>> for &'a Operator<R> {
    type Output = Operator<R>;
    fn add(self, rhs: &'a Operator<R>) -> Operator<R> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator::wrap(&self.m + &rhs.m)
    }
}

impl<R: Real> Add for Operator<R> {
    type Output = Operator<R>;
    fn add(self, rhs: Operator<R>) -> Operator<R> {
        &self + &rhs
    }
}

impl<R: Real> AddAssign<&Operator<R>> for Operator<R> {
    fn add_assign(&mut self, rhs: &Operator<R>) {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        self.m += &rhs.m;
    }
}

impl<'a, R: Real> Sub<&'a Operator<R>> for &'a Operator<R> {
    type Output = Operator<R>;
    fn sub(self, rhs: &'a Operator<R>) -> Operator<R> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator::wrap(&self.m - &rhs.m)
    }
}

impl<R: Real> Sub for Operator<R> {
    type Output = Operator<R>;
    fn sub(self, rhs: Operator<R>) -> Operator<R> {
        &self - &rhs
    }
}

impl<R: Real> Neg for Operator<R> {
    type Output = Operator<R>;
    fn neg(self) -> Operator<R> {
        Operator::wrap(-self.m)
    }
}
