//! Hermitian spectral decomposition and the functional calculus built on it.
//!
//! Every matrix function in the crate (exponentials, square roots, logarithms,
//! complex powers) goes through [`HermitianEigen`]; nothing is summed as a
//! power series.

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::One;

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::scalar::{cabs, cexp, cfinite, cis, cx, re, Cx, Real};

/// Relative Hermiticity tolerance applied to inputs of spectral routines.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative clustering tolerance used when none is given.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;
/// Relative window below zero that is clamped to zero before sqrt/log.
pub const CLAMP_TOL: f64 = 1e-12;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct HermitianEigen<R: Real> {
    values: Vec<R>,
    vectors: DMatrix<Cx<R>>,
}

impl<R: Real> HermitianEigen<R> {
    /// Diagonalizes a Hermitian operator. Inputs with
    /// `‖A − A*‖ > 1e−12·‖A‖` are rejected.
    pub fn new(a: &Operator<R>) -> Result<Self> {
        a.ensure_hermitian(R::tol(HERMITIAN_TOL))?;
        Ok(Self::new_unchecked(a))
    }

    /// Diagonalizes the Hermitian part of `a` without the asymmetry check.
    pub(crate) fn new_unchecked(a: &Operator<R>) -> Self {
        let herm = a.hermitian_part().into_matrix();
        let eig = SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[i]
                .partial_cmp(&eig.eigenvalues[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let d = order.len();
        let vectors = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    /// Builds from explicit data; `vectors` must be unitary.
    pub(crate) fn from_parts(values: Vec<R>, vectors: DMatrix<Cx<R>>) -> Self {
        Self { values, vectors }
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Cx<R>> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> R {
        self.values[0]
    }

    pub fn max(&self) -> R {
        self.values[self.values.len() - 1]
    }

    /// `max |λ|`, the operator norm of the diagonalized matrix.
    pub fn norm(&self) -> R {
        let (a, b) = (self.min().abs(), self.max().abs());
        if a > b {
            a
        } else {
            b
        }
    }

    pub fn spread(&self) -> R {
        self.max() - self.min()
    }

    /// `V diag(w) V*`.
    pub fn recompose(&self, w: &[Cx<R>]) -> Operator<R> {
        let mut scaled = self.vectors.clone();
        for (c, &wc) in w.iter().enumerate() {
            scaled.column_mut(c).iter_mut().for_each(|z| *z *= wc);
        }
        Operator::wrap(scaled * self.vectors.adjoint())
    }

    /// Applies `f` to every eigenvalue; non-finite outputs are a domain error.
    pub fn map(&self, f: impl Fn(R) -> Cx<R>) -> Result<Operator<R>> {
        let mut w = Vec::with_capacity(self.dim());
        for &l in &self.values {
            let v = f(l);
            if !cfinite(v) {
                return Err(Error::Domain { eigenvalue: l.as_f64() });
            }
            w.push(v);
        }
        Ok(self.recompose(&w))
    }

    /// `V* A V`.
    pub fn to_eigenbasis(&self, a: &Operator<R>) -> Operator<R> {
        Operator::wrap(self.vectors.adjoint() * a.matrix() * &self.vectors)
    }

    /// `V A V*`.
    pub fn from_eigenbasis(&self, a: &Operator<R>) -> Operator<R> {
        Operator::wrap(&self.vectors * a.matrix() * self.vectors.adjoint())
    }

    /// `e^{itH}`.
    pub fn unitary(&self, t: R) -> Operator<R> {
        let w: Vec<_> = self.values.iter().map(|&l| cis(t * l)).collect();
        self.recompose(&w)
    }

    /// `e^{sH}` for real `s`, with the exponent shifted by `shift`
    /// (`e^{s(H − shift)}`) to keep it in range.
    pub fn exp_real(&self, s: R, shift: R) -> Operator<R> {
        let w: Vec<_> = self.values.iter().map(|&l| re((s * (l - shift)).exp())).collect();
        self.recompose(&w)
    }

    /// `e^{itH} A e^{−itH}`.
    pub fn conjugate(&self, a: &Operator<R>, t: R) -> Operator<R> {
        let mut inner = self.to_eigenbasis(a);
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                let ph = cis(t * (self.values[i] - self.values[j]));
                inner.matrix_mut()[(i, j)] *= ph;
            }
        }
        self.from_eigenbasis(&inner)
    }

    /// Groups eigenvalues whose consecutive gaps are `≤ tol`.
    pub fn clusters(&self, tol: R) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.dim() {
            if k == self.dim() || self.values[k] - self.values[k - 1] > tol {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Projector onto the span of the eigenvectors with indices in `range`.
    pub fn projector(&self, range: std::ops::Range<usize>) -> Operator<R> {
        let cols = self.vectors.columns(range.start, range.len());
        Operator::wrap(&cols * cols.adjoint())
    }
}

/// Eigenvalue clusters with their spectral projectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<R: Real> {
    pub eigenvalues: Vec<R>,
    pub projectors: Vec<Operator<R>>,
}

impl<R: Real> SpectralDecomposition<R> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `Σ λ_i P_i`.
    pub fn reconstruct(&self) -> Operator<R> {
        let d = self.projectors[0].dim();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(Operator::zeros(d), |acc, (&l, p)| &acc + &p.scale_re(l))
    }
}

/// Spectral decomposition with eigenvalues closer than `cluster_tol`
/// merged into one projector. The reported eigenvalue of a cluster is the
/// mean of its members.
pub fn eig_hermitian<R: Real>(a: &Operator<R>, cluster_tol: R) -> Result<SpectralDecomposition<R>> {
    if cluster_tol <= R::zero() {
        return Err(Error::OutOfDomain("cluster_tol must be positive".into()));
    }
    let eig = HermitianEigen::new(a)?;
    Ok(decompose(&eig, cluster_tol))
}

pub(crate) fn decompose<R: Real>(eig: &HermitianEigen<R>, cluster_tol: R) -> SpectralDecomposition<R> {
    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    for range in eig.clusters(cluster_tol) {
        let n = R::from_usize(range.len()).unwrap();
        let mean = eig.values()[range.clone()].iter().fold(R::zero(), |a, &b| a + b) / n;
        eigenvalues.push(mean);
        projectors.push(eig.projector(range));
    }
    SpectralDecomposition { eigenvalues, projectors }
}

/// Default clustering tolerance `1e−9·max(‖A‖, 1)` for an operator with the
/// given spectrum.
pub fn default_cluster_tol<R: Real>(eig: &HermitianEigen<R>) -> R {
    let n = eig.norm();
    R::tol(DEFAULT_CLUSTER_TOL) * if n > R::one() { n } else { R::one() }
}

/// `f(A) = Σ f(λ_i) P_i` for Hermitian `A`.
pub fn func_calc<R: Real>(a: &Operator<R>, f: impl Fn(R) -> Cx<R>) -> Result<Operator<R>> {
    HermitianEigen::new(a)?.map(f)
}

/// Real-valued convenience wrapper around [`func_calc`].
pub fn func_calc_real<R: Real>(a: &Operator<R>, f: impl Fn(R) -> R) -> Result<Operator<R>> {
    func_calc(a, |x| re(f(x)))
}

/// Clamps eigenvalues in `[−1e−12·‖A‖, 0)` to zero; anything lower is an error.
pub(crate) fn clamped_values<R: Real>(eig: &HermitianEigen<R>) -> Result<Vec<R>> {
    let tol = R::tol(CLAMP_TOL) * eig.norm();
    eig.values()
        .iter()
        .map(|&l| {
            if l >= R::zero() {
                Ok(l)
            } else if -l <= tol {
                Ok(R::zero())
            } else {
                Err(Error::NotPositive { eigenvalue: l.as_f64(), tolerance: tol.as_f64() })
            }
        })
        .collect()
}

/// The unique positive square root.
pub fn positive_sqrt<R: Real>(a: &Operator<R>) -> Result<Operator<R>> {
    let eig = HermitianEigen::new(a)?;
    let vals = clamped_values(&eig)?;
    let w: Vec<_> = vals.iter().map(|&l| re(l.sqrt())).collect();
    Ok(eig.recompose(&w))
}

/// `|A| = √(A*A)`.
pub fn abs_op<R: Real>(a: &Operator<R>) -> Result<Operator<R>> {
    positive_sqrt(&(&a.adjoint() * a).hermitian_part())
}

/// `(op_norm, spectral_radius)`; the two agree for normal operators.
pub fn norm_spectral_check<R: Real>(a: &Operator<R>) -> (R, R) {
    let op_norm = a.op_norm();
    let radius = if a.dim() == 1 {
        cabs(a.get(0, 0))
    } else {
        let (_, t) = nalgebra::linalg::Schur::new(a.matrix().clone()).unpack();
        (0..a.dim()).fold(R::zero(), |m, i| {
            let v = cabs(t[(i, i)]);
            if v > m {
                v
            } else {
                m
            }
        })
    };
    (op_norm, radius)
}

/// The derivation `A ↦ i[H, A]`.
#[derive(Clone, Debug)]
pub struct CommutatorGenerator<R: Real> {
    h: Operator<R>,
}

impl<R: Real> CommutatorGenerator<R> {
    pub fn hamiltonian(&self) -> &Operator<R> {
        &self.h
    }

    pub fn apply(&self, a: &Operator<R>) -> Result<Operator<R>> {
        if a.dim() != self.h.dim() {
            return Err(Error::Shape(format!("generator dim {} vs operand {}", self.h.dim(), a.dim())));
        }
        Ok(self.h.commutator(a).scale(cx(R::zero(), R::one())))
    }
}

/// Generator of the Heisenberg dynamics of `H`.
pub fn commutator_gen<R: Real>(h: &Operator<R>) -> Result<CommutatorGenerator<R>> {
    h.ensure_hermitian(R::tol(HERMITIAN_TOL))?;
    Ok(CommutatorGenerator { h: h.clone() })
}

/// A strictly positive operator in diagonal form, with complex powers and
/// logarithms available. Used for modular and relative modular operators.
#[derive(Clone, Debug)]
pub struct PositiveSpectrum<R: Real> {
    eig: HermitianEigen<R>,
    logs: Vec<R>,
}

impl<R: Real> PositiveSpectrum<R> {
    /// Requires `min eigenvalue > rank_tol`.
    pub fn new(a: &Operator<R>, rank_tol: R) -> Result<Self> {
        let eig = HermitianEigen::new(a)?;
        if eig.min() <= rank_tol {
            return Err(Error::RankDeficient { min_eigenvalue: eig.min().as_f64() });
        }
        let logs = eig.values().iter().map(|l| l.ln()).collect();
        Ok(Self { eig, logs })
    }

    /// Builds from an eigenbasis and exact logarithms of the eigenvalues;
    /// avoids the precision loss of diagonalizing tiny Gibbs weights.
    pub(crate) fn from_log_parts(logs: Vec<R>, vectors: DMatrix<Cx<R>>) -> Self {
        let mut order: Vec<usize> = (0..logs.len()).collect();
        order.sort_by(|&i, &j| logs[i].partial_cmp(&logs[j]).unwrap_or(std::cmp::Ordering::Equal));
        let d = order.len();
        let vectors = DMatrix::from_fn(vectors.nrows(), d, |r, c| vectors[(r, order[c])]);
        let logs: Vec<R> = order.iter().map(|&i| logs[i]).collect();
        let values = logs.iter().map(|l| l.exp()).collect();
        Self { eig: HermitianEigen::from_parts(values, vectors), logs }
    }

    pub fn eigen(&self) -> &HermitianEigen<R> {
        &self.eig
    }

    pub fn log_values(&self) -> &[R] {
        &self.logs
    }

    /// `A^α = Σ e^{α log λ_i} P_i` (principal branch).
    pub fn power(&self, alpha: Cx<R>) -> Operator<R> {
        let w: Vec<_> = self.logs.iter().map(|&l| cexp(alpha * re(l))).collect();
        self.eig.recompose(&w)
    }

    pub fn log(&self) -> Operator<R> {
        let w: Vec<_> = self.logs.iter().map(|&l| re(l)).collect();
        self.eig.recompose(&w)
    }

    pub fn inverse(&self) -> Operator<R> {
        self.power(re(-R::one()))
    }

    pub fn operator(&self) -> Operator<R> {
        self.power(Cx::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use num_traits::Zero;

    type Op = Operator<f64>;

    fn close(a: &Op, b: &Op, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn diagonal_input_clusters_degenerate_pair() {
        let a = Op::diag(&[1.0, 1.0, 2.0]);
        let sd = eig_hermitian(&a, 1e-9).unwrap();
        assert_eq!(sd.eigenvalues.len(), 2);
        assert!((sd.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((sd.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert!(close(&sd.projectors[0], &Op::diag(&[1.0, 1.0, 0.0]), 1e-14));
        assert!(close(&sd.projectors[1], &Op::diag(&[0.0, 0.0, 1.0]), 1e-14));
    }

    #[test]
    fn pauli_x_projectors() {
        let x = Op::sigma_x();
        let sd = eig_hermitian(&x, 1e-9).unwrap();
        let half = cx(0.5, 0.0);
        let minus = (&Op::identity(2) - &x).scale(half);
        let plus = (&Op::identity(2) + &x).scale(half);
        assert!((sd.eigenvalues[0] + 1.0).abs() < 1e-14 && (sd.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(close(&sd.projectors[0], &minus, 1e-14));
        assert!(close(&sd.projectors[1], &plus, 1e-14));
    }

    #[test]
    fn identity_single_cluster() {
        let sd = eig_hermitian(&Op::identity(4), 1e-9).unwrap();
        assert_eq!(sd.len(), 1);
        assert!(close(&sd.projectors[0], &Op::identity(4), 1e-14));
    }

    #[test]
    fn rejects_non_hermitian_and_bad_tol() {
        let a = Op::from_fn(2, |i, j| if i < j { cx(1.0, 0.0) } else { Cx::zero() });
        assert!(matches!(eig_hermitian(&a, 1e-9), Err(Error::NotHermitian { .. })));
        assert!(eig_hermitian(&Op::identity(2), 0.0).is_err());
    }

    #[test]
    fn func_calc_examples() {
        let r = func_calc_real(&Op::diag(&[1.0, 4.0]), f64::sqrt).unwrap();
        assert!(close(&r, &Op::diag(&[1.0, 2.0]), 1e-14));
        let e = func_calc_real(&Op::diag(&[0.0, 1.0]), |x| (-x).exp()).unwrap();
        assert!(close(&e, &Op::diag(&[1.0, (-1.0f64).exp()]), 1e-15));
        let sq = func_calc_real(&Op::sigma_x(), |x| x * x).unwrap();
        assert!(close(&sq, &Op::identity(2), 1e-14));
    }

    #[test]
    fn func_calc_domain_error_names_eigenvalue() {
        match func_calc_real(&Op::diag(&[0.0, 2.0]), f64::ln) {
            Err(Error::Domain { eigenvalue }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn positive_sqrt_examples() {
        assert!(close(&positive_sqrt(&Op::diag(&[4.0, 9.0])).unwrap(), &Op::diag(&[2.0, 3.0]), 1e-14));
        assert!(close(&positive_sqrt(&Op::identity(3)).unwrap(), &Op::identity(3), 1e-14));
        let p = (&Op::identity(2) + &Op::sigma_x()).scale_re(0.5);
        assert!(close(&positive_sqrt(&p).unwrap(), &p, 1e-14));
    }

    #[test]
    fn positive_sqrt_clamps_and_rejects() {
        let tiny = Op::diag(&[-1e-14, 1.0]);
        assert!(close(&positive_sqrt(&tiny).unwrap(), &Op::diag(&[0.0, 1.0]), 1e-15));
        match positive_sqrt(&Op::diag(&[-0.5, 1.0])) {
            Err(Error::NotPositive { eigenvalue, .. }) => assert_eq!(eigenvalue, -0.5),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn abs_op_examples() {
        let n = Op::from_fn(2, |i, j| if i == 0 && j == 1 { cx(1.0, 0.0) } else { Cx::zero() });
        assert!(close(&abs_op(&n).unwrap(), &Op::diag(&[0.0, 1.0]), 1e-14));
        assert!(close(&abs_op(&Op::diag(&[-2.0, 3.0])).unwrap(), &Op::diag(&[2.0, 3.0]), 1e-14));
        let u = HermitianEigen::new(&Op::sigma_y()).unwrap().unitary(0.7);
        assert!(close(&abs_op(&u).unwrap(), &Op::identity(2), 1e-14));
    }

    #[test]
    fn tensor_spectrum_multiplies() {
        let xx = Op::sigma_x().tensor(&Op::sigma_x());
        let eig = HermitianEigen::new(&xx).unwrap();
        let expected = [-1.0, -1.0, 1.0, 1.0];
        for (v, e) in eig.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn commutator_generator_examples() {
        let z = Op::sigma_z();
        let g = commutator_gen(&z).unwrap();
        assert!(g.apply(&z).unwrap().hs_norm() < 1e-15);
        assert!(g.apply(&Op::identity(2)).unwrap().hs_norm() < 1e-15);
        let out = g.apply(&Op::sigma_x()).unwrap();
        assert!(close(&out, &Op::sigma_y().scale_re(-2.0), 1e-14));
    }

    #[test]
    fn norm_and_spectral_radius() {
        let (n, r) = norm_spectral_check(&Op::diag(&[-3.0, 2.0]));
        assert!((n - 3.0).abs() < 1e-13 && (r - 3.0).abs() < 1e-13);
        let nil = Op::from_fn(2, |i, j| if i == 0 && j == 1 { cx(1.0, 0.0) } else { Cx::zero() });
        let (n, r) = norm_spectral_check(&nil);
        assert!((n - 1.0).abs() < 1e-13 && r.abs() < 1e-13);
        let u = HermitianEigen::new(&Op::sigma_x().tensor(&Op::sigma_z())).unwrap().unitary(1.3);
        let (n, r) = norm_spectral_check(&u);
        assert!((n - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_spectrum_powers() {
        let a = Op::diag(&[0.25, 4.0]);
        let ps = PositiveSpectrum::new(&a, 1e-12).unwrap();
        assert!(close(&ps.power(cx(0.5, 0.0)), &Op::diag(&[0.5, 2.0]), 1e-14));
        assert!(close(&ps.inverse(), &Op::diag(&[4.0, 0.25]), 1e-13));
        let prod = &ps.power(cx(0.3, 1.1)) * &ps.power(cx(0.7, -1.1));
        assert!(close(&prod, &a, 1e-13));
        assert!(matches!(
            PositiveSpectrum::new(&Op::diag(&[0.0, 1.0]), 1e-12),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let a = Operator::<f32>::diag(&[1.0, 4.0]);
        let r = func_calc_real(&a, f32::sqrt).unwrap();
        assert!(r.max_abs_diff(&Operator::<f32>::diag(&[1.0, 2.0])) < 1e-5);
        let sd = eig_hermitian(&Operator::<f32>::sigma_x(), 1e-4).unwrap();
        assert_eq!(sd.len(), 2);
    }
}
