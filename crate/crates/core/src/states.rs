//! Density matrices, entropy, Gibbs states, projective measurement and
//! spectral measures.

use rand::Rng;

use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::operator::Operator;
use crate::random;
use crate::scalar::{re, Cx, Real};
use crate::spectral::{decompose, HermitianEigen, HERMITIAN_TOL};

/// Tolerance on `|tr ρ − 1|` and on negative eigenvalues.
pub const STATE_TOL: f64 = 1e-12;

/// A positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<R: Real> {
    op: Operator<R>,
}

impl<R: Real> DensityMatrix<R> {
    pub fn new(op: Operator<R>) -> Result<Self> {
        op.ensure_hermitian(R::tol(HERMITIAN_TOL))
            .map_err(|e| Error::InvalidState(e.to_string()))?;
        let tr = op.trace();
        let tol = R::tol(STATE_TOL);
        if (tr.re - R::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!(
                "trace {} + {}i differs from 1",
                tr.re.as_f64(),
                tr.im.as_f64()
            )));
        }
        let op = op.hermitian_part();
        let eig = HermitianEigen::new_unchecked(&op);
        if eig.min() < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", eig.min().as_f64())));
        }
        Ok(Self { op })
    }

    /// `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn pure(psi: &[Cx<R>]) -> Result<Self> {
        let p = Operator::outer(psi, psi)?;
        let n = p.trace().re;
        if n <= R::zero() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Self::new(p.scale_re(R::one() / n))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let d = R::from_usize(dim).unwrap();
        Self { op: Operator::identity(dim).scale_re(R::one() / d) }
    }

    pub fn op(&self) -> &Operator<R> {
        &self.op
    }

    pub fn into_op(self) -> Operator<R> {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// `ω(A) = tr(ρA)`.
    pub fn expect(&self, a: &Operator<R>) -> Cx<R> {
        self.op.trace_product(a)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { op: self.op.tensor(&other.op) }
    }
}

/// `log tr e^{−βH}`, computed with the exponent shifted by its maximum.
pub fn log_partition<R: Real>(eig: &HermitianEigen<R>, beta: R) -> R {
    let exps: Vec<R> = eig.values().iter().map(|&l| -beta * l).collect();
    let top = exps.iter().fold(exps[0], |a, &b| if b > a { b } else { a });
    top + exps.iter().fold(R::zero(), |a, &e| a + (e - top).exp()).ln()
}

pub(crate) fn gibbs_from_eigen<R: Real>(eig: &HermitianEigen<R>, beta: R) -> DensityMatrix<R> {
    let log_z = log_partition(eig, beta);
    let w: Vec<_> = eig.values().iter().map(|&l| re((-beta * l - log_z).exp())).collect();
    DensityMatrix { op: eig.recompose(&w).hermitian_part() }
}

/// `e^{−βH}/tr e^{−βH}`; any finite β, including negative.
pub fn gibbs<R: Real>(h: &Operator<R>, beta: R) -> Result<DensityMatrix<R>> {
    if !beta.finite() {
        return Err(Error::OutOfDomain(format!("beta must be finite, got {}", beta.as_f64())));
    }
    Ok(gibbs_from_eigen(&HermitianEigen::new(h)?, beta))
}

fn entropy_of_values<R: Real>(values: &[R]) -> R {
    values.iter().fold(R::zero(), |s, &l| if l > R::zero() { s - l * l.ln() } else { s })
}

/// von Neumann entropy `−tr ρ log ρ`, with `0·log 0 = 0`.
pub fn entropy<R: Real>(rho: &DensityMatrix<R>) -> R {
    entropy_of_values(HermitianEigen::new_unchecked(rho.op()).values())
}

/// `S(ν) + tr(νA)`, the functional maximized by the Gibbs state of `A`.
pub fn variational_value<R: Real>(nu: &DensityMatrix<R>, a: &Operator<R>) -> R {
    entropy(nu) + nu.expect(a).re
}

/// `log tr e^{−βH} − (S(ν) − β tr(νH))`, nonnegative and zero at the Gibbs
/// state.
pub fn variational_gap<R: Real>(h: &Operator<R>, beta: R, nu: &DensityMatrix<R>) -> Result<R> {
    let eig = HermitianEigen::new(h)?;
    Ok(log_partition(&eig, beta) - variational_value(nu, &h.scale_re(-beta)))
}

#[derive(Clone, Debug)]
pub struct VariationalReport<R: Real> {
    pub log_partition: R,
    /// Gap at the Gibbs state; zero up to roundoff.
    pub gibbs_gap: R,
    /// `max(0, S(ν) + tr(νA) − log tr e^A)` over the random samples.
    pub max_violation: R,
    /// Smallest gap seen among the random samples.
    pub min_sample_gap: R,
    pub trials: usize,
}

/// Samples `trials` random states and checks
/// `S(ν) + tr(νA) ≤ log tr e^A` with `A = −βH`.
pub fn gibbs_variational_check<R: Real>(
    h: &Operator<R>,
    beta: R,
    trials: usize,
    seed: u64,
) -> Result<VariationalReport<R>> {
    if trials == 0 {
        return Err(Error::OutOfDomain("trials must be at least 1".into()));
    }
    let eig = HermitianEigen::new(h)?;
    let log_z = log_partition(&eig, beta);
    let a = h.scale_re(-beta);
    let gibbs_gap = log_z - variational_value(&gibbs_from_eigen(&eig, beta), &a);
    let mut rng = random::rng(seed);
    let mut max_violation = R::zero();
    let mut min_gap = R::max_value().unwrap();
    for _ in 0..trials {
        let nu = random::density::<R>(h.dim(), &mut rng);
        let gap = log_z - variational_value(&nu, &a);
        if -gap > max_violation {
            max_violation = -gap;
        }
        if gap < min_gap {
            min_gap = gap;
        }
    }
    Ok(VariationalReport { log_partition: log_z, gibbs_gap, max_violation, min_sample_gap: min_gap, trials })
}

/// One projective-measurement outcome.
#[derive(Clone, Debug)]
pub struct Outcome<R: Real> {
    pub value: R,
    pub probability: R,
    /// `PρP/tr(ρP)`; absent for zero-probability outcomes.
    pub post_state: Option<DensityMatrix<R>>,
}

#[derive(Clone, Debug)]
pub struct Measurement<R: Real> {
    pub outcomes: Vec<Outcome<R>>,
}

impl<R: Real> Measurement<R> {
    pub fn distribution(&self, merge_tol: R) -> Result<AtomicMeasure<R>> {
        AtomicMeasure::from_points(self.outcomes.iter().map(|o| (o.value, o.probability)), merge_tol)
    }
}

fn check_same_dim<R: Real>(a: &Operator<R>, rho: &DensityMatrix<R>) -> Result<()> {
    if a.dim() == rho.dim() {
        Ok(())
    } else {
        Err(Error::Shape(format!("observable dim {} vs state dim {}", a.dim(), rho.dim())))
    }
}

/// Measures `A` in state `ρ`: outcome `λ` with probability `tr(ρP_λ)`,
/// leaving `P_λρP_λ/tr(ρP_λ)`.
pub fn measure<R: Real>(rho: &DensityMatrix<R>, a: &Operator<R>, cluster_tol: R) -> Result<Measurement<R>> {
    check_same_dim(a, rho)?;
    let sd = decompose(&HermitianEigen::new(a)?, cluster_tol);
    let floor = R::tol(crate::measure::WEIGHT_FLOOR);
    let mut outcomes = Vec::with_capacity(sd.len());
    for (value, p) in sd.eigenvalues.iter().zip(&sd.projectors) {
        let prob = rho.expect(p).re.max(R::zero());
        let post_state = if prob > floor {
            let post = (&(p * rho.op()) * p).scale_re(R::one() / prob);
            Some(DensityMatrix::new(post)?)
        } else {
            None
        };
        outcomes.push(Outcome { value: *value, probability: prob, post_state });
    }
    Ok(Measurement { outcomes })
}

/// Spectral measure of `(A, ω)`: atoms at the eigenvalues of `A` with
/// weights `ω(P_λ)`. Moments up to order three are cross-checked against
/// `tr(ρAᵏ)`.
pub fn spectral_measure<R: Real>(a: &Operator<R>, omega: &DensityMatrix<R>, cluster_tol: R) -> Result<AtomicMeasure<R>> {
    check_same_dim(a, omega)?;
    let eig = HermitianEigen::new(a)?;
    let sd = decompose(&eig, cluster_tol);
    let mu = AtomicMeasure::from_points(
        sd.eigenvalues.iter().zip(&sd.projectors).map(|(&l, p)| (l, omega.expect(p).re)),
        cluster_tol,
    )?;
    let scale = eig.norm().max(R::one());
    let mut power = Operator::identity(a.dim());
    for k in 1..=3u32 {
        power = &power * a;
        let direct = omega.expect(&power).re;
        let residual = (mu.moment(k) - direct).abs();
        // clustering moves locations by at most cluster_tol
        let allowed = R::tol(1e-10) * scale.powi(k as i32)
            + R::lit(k as f64) * cluster_tol * scale.powi(k as i32 - 1);
        if residual > allowed {
            return Err(Error::CrossCheck { what: format!("spectral measure moment {}", k), residual: residual.as_f64() });
        }
    }
    Ok(mu)
}

/// `max |tr(ρ A e^{−βH} B e^{βH}) − tr(ρ B A)|` over the given pairs.
pub fn kms_defect<R: Real>(
    rho: &DensityMatrix<R>,
    h: &Operator<R>,
    beta: R,
    pairs: &[(Operator<R>, Operator<R>)],
) -> Result<R> {
    if pairs.is_empty() {
        return Err(Error::OutOfDomain("kms_defect needs at least one pair".into()));
    }
    check_same_dim(h, rho)?;
    let eig = HermitianEigen::new(h)?;
    let d = h.dim();
    let mut worst = R::zero();
    for (a, b) in pairs {
        check_same_dim(a, rho)?;
        check_same_dim(b, rho)?;
        // e^{−βH} B e^{βH} in the eigenbasis only involves e^{−β(λ_i − λ_j)}
        let mut bt = eig.to_eigenbasis(b);
        for i in 0..d {
            for j in 0..d {
                let f = (-beta * (eig.values()[i] - eig.values()[j])).exp();
                bt.matrix_mut()[(i, j)] *= re(f);
            }
        }
        let imag_time = eig.from_eigenbasis(&bt);
        let lhs = rho.expect(&(a * &imag_time));
        let rhs = rho.expect(&(b * a));
        let d = crate::scalar::cabs(lhs - rhs);
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// Random operator pairs for KMS checks.
pub fn random_pairs<R: Real>(dim: usize, count: usize, rng: &mut impl Rng) -> Vec<(Operator<R>, Operator<R>)> {
    (0..count).map(|_| (random::ginibre(dim, rng), random::ginibre(dim, rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;
    use num_traits::Zero;

    type Op = Operator<f64>;

    #[test]
    fn gibbs_closed_form() {
        let g = gibbs(&Op::diag(&[0.0, 1.0]), 1.0).unwrap();
        let p0 = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((g.op().get(0, 0).re - p0).abs() < 1e-15);
        assert!((g.op().get(1, 1).re - (1.0 - p0)).abs() < 1e-15);
        assert!((p0 - 0.731058).abs() < 1e-6);
    }

    #[test]
    fn gibbs_flat_cases() {
        let h = Op::diag(&[0.3, -1.0, 2.0]);
        let g = gibbs(&h, 0.0).unwrap();
        assert!(g.op().max_abs_diff(DensityMatrix::maximally_mixed(3).op()) < 1e-15);
        let g = gibbs(&Op::identity(4), 3.7).unwrap();
        assert!(g.op().max_abs_diff(DensityMatrix::maximally_mixed(4).op()) < 1e-15);
    }

    #[test]
    fn gibbs_survives_huge_beta() {
        let g = gibbs(&Op::diag(&[0.0, 1.0]), 5000.0).unwrap();
        assert!((g.op().get(0, 0).re - 1.0).abs() < 1e-15);
        let g = gibbs(&Op::diag(&[0.0, 1.0]), -5000.0).unwrap();
        assert!((g.op().get(1, 1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gibbs_commutes_with_hamiltonian() {
        let mut rng = random::rng(3);
        let h = random::hermitian::<f64>(5, &mut rng);
        let g = gibbs(&h, 0.8).unwrap();
        assert!(g.op().commutator(&h).hs_norm() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&DensityMatrix::<f64>::maximally_mixed(5)) - 5f64.ln()).abs() < 1e-14);
        let pure = DensityMatrix::<f64>::pure(&[cx(0.6, 0.0), cx(0.0, 0.8)]).unwrap();
        assert!(entropy(&pure).abs() < 1e-14);
        let r = DensityMatrix::new(Op::diag(&[0.75, 0.25])).unwrap();
        let expected = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((entropy(&r) - expected).abs() < 1e-15);
        assert!((expected - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(Op::diag(&[0.6, 0.5])).is_err());
        assert!(DensityMatrix::new(Op::diag(&[1.2, -0.2])).is_err());
        let nh = Op::from_fn(2, |i, j| if i == 0 && j == 1 { cx(0.1, 0.0) } else if i == j { cx(0.5, 0.0) } else { Cx::zero() });
        assert!(DensityMatrix::new(nh).is_err());
    }

    #[test]
    fn variational_examples() {
        let h = Op::diag(&[0.0, 1.0]);
        let rep = gibbs_variational_check(&h, 1.0, 200, 11).unwrap();
        assert!(rep.gibbs_gap.abs() <= 1e-10);
        assert!(rep.max_violation <= 1e-10);
        let ground = DensityMatrix::new(Op::diag(&[1.0, 0.0])).unwrap();
        let gap = variational_gap(&h, 1.0, &ground).unwrap();
        assert!((gap - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-15);
        // H = 0: inequality reads S(ν) ≤ log d
        let rep = gibbs_variational_check(&Op::zeros(3), 1.0, 50, 2).unwrap();
        assert!((rep.log_partition - 3f64.ln()).abs() < 1e-15);
        assert!(rep.max_violation <= 1e-10);
    }

    #[test]
    fn measure_examples() {
        let z = Op::sigma_z();
        let half = DensityMatrix::<f64>::maximally_mixed(2);
        let m = measure(&half, &z, 1e-9).unwrap();
        let dist = m.distribution(1e-9).unwrap();
        assert_eq!(dist.len(), 2);
        assert!((dist.atoms()[0].location + 1.0).abs() < 1e-15 && (dist.atoms()[0].weight - 0.5).abs() < 1e-15);
        let down = m.outcomes[0].post_state.as_ref().unwrap();
        assert!(down.op().max_abs_diff(&Op::diag(&[0.0, 1.0])) < 1e-15);

        let eigenstate = DensityMatrix::new(Op::diag(&[1.0, 0.0])).unwrap();
        let m = measure(&eigenstate, &z, 1e-9).unwrap();
        assert!(m.outcomes[0].post_state.is_none());
        let up = m.outcomes[1].post_state.as_ref().unwrap();
        assert_eq!(up, &eigenstate);

        let c = Op::identity(3).scale_re(2.5);
        let dist = measure(&DensityMatrix::maximally_mixed(3), &c, 1e-9).unwrap().distribution(1e-9).unwrap();
        assert_eq!(dist.len(), 1);
        assert!((dist.atoms()[0].location - 2.5).abs() < 1e-15);
    }

    #[test]
    fn measure_mean_matches_expectation() {
        let mut rng = random::rng(8);
        for _ in 0..20 {
            let a = random::hermitian::<f64>(4, &mut rng);
            let rho = random::density::<f64>(4, &mut rng);
            let m = measure(&rho, &a, 1e-9).unwrap();
            let dist = m.distribution(1e-9).unwrap();
            assert!((dist.mass() - 1.0).abs() < 1e-12);
            assert!((dist.mean() - rho.expect(&a).re).abs() < 1e-12);
            let sm = spectral_measure(&a, &rho, 1e-9).unwrap();
            assert!(sm.max_discrepancy(&dist, 1e-12) < 1e-15);
        }
    }

    #[test]
    fn spectral_measure_examples() {
        let mu = spectral_measure(&Op::sigma_z(), &DensityMatrix::maximally_mixed(2), 1e-9).unwrap();
        assert!((mu.weight_at(-1.0, 1e-12) - 0.5).abs() < 1e-15);
        assert!((mu.weight_at(1.0, 1e-12) - 0.5).abs() < 1e-15);
        let mu = spectral_measure(&Op::identity(3), &DensityMatrix::maximally_mixed(3), 1e-9).unwrap();
        assert_eq!(mu.len(), 1);
        assert!((mu.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kms_holds_only_at_matching_temperature() {
        let mut rng = random::rng(21);
        let h = Op::diag(&[0.0, 0.4, 1.3]);
        let pairs = random_pairs::<f64>(3, 100, &mut rng);
        let rho = gibbs(&h, 1.5).unwrap();
        assert!(kms_defect(&rho, &h, 1.5, &pairs).unwrap() < 1e-10 * 20.0);
        let wrong = gibbs(&h, 0.7).unwrap();
        assert!(kms_defect(&wrong, &h, 1.5, &pairs).unwrap() > 1e-3);
        let id = vec![(Op::identity(3), Op::identity(3))];
        assert!(kms_defect(&wrong, &h, 1.5, &id).unwrap() < 1e-15);
        assert!(kms_defect(&rho, &h, 1.5, &[]).is_err());
    }

    #[test]
    fn gibbs_energy_monotone_and_limits() {
        let h = Op::diag(&[-1.0, 0.2, 0.5, 2.0]);
        let mut prev = f64::INFINITY;
        for k in -40..=40 {
            let beta = k as f64 * 0.25;
            let e = gibbs(&h, beta).unwrap().expect(&h).re;
            assert!(e < prev);
            prev = e;
        }
        let cold = gibbs(&h, 40.0).unwrap().expect(&h).re;
        assert!((cold + 1.0).abs() < 3.0 * (-40.0f64 * 1.2).exp());
        let hot = gibbs(&h, -40.0).unwrap().expect(&h).re;
        assert!((hot - 2.0).abs() < 3.0 * (-40.0f64 * 1.5).exp());
    }
}
