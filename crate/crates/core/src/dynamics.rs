//! Coupled system–reservoir scenarios, Heisenberg evolution, the Dyson
//! expansion of the interaction-picture cocycle, and energy bookkeeping.

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::quadrature::{integrate, Integrable};
use crate::scalar::{cis, cx, Cx, Real};
use crate::spectral::HermitianEigen;
use crate::states::{gibbs_from_eigen, DensityMatrix};

/// `e^{itH} A e^{−itH}`.
pub fn heisenberg<R: Real>(a: &Operator<R>, h: &Operator<R>, t: R) -> Result<Operator<R>> {
    if a.dim() != h.dim() {
        return Err(Error::Shape(format!("operator dim {} vs Hamiltonian dim {}", a.dim(), h.dim())));
    }
    Ok(HermitianEigen::new(h)?.conjugate(a, t))
}

/// A finite system coupled to a finite reservoir through `λV`, with the
/// system in `ρ_S` and the reservoir thermal at inverse temperature `β`.
///
/// The total space is ordered system ⊗ reservoir.
#[derive(Clone, Debug)]
pub struct Scenario<R: Real> {
    h_s: Operator<R>,
    h_r: Operator<R>,
    v: Operator<R>,
    lambda: R,
    beta: R,
    rho_s: DensityMatrix<R>,

    h_s_full: Operator<R>,
    h_r_full: Operator<R>,
    h0: Operator<R>,
    h_lambda: Operator<R>,
    eig_s: HermitianEigen<R>,
    eig_r: HermitianEigen<R>,
    eig_0: HermitianEigen<R>,
    eig_lambda: HermitianEigen<R>,
    rho_r: DensityMatrix<R>,
    rho_beta: DensityMatrix<R>,
    omega: DensityMatrix<R>,
}

impl<R: Real> Scenario<R> {
    pub fn new(
        h_s: Operator<R>,
        h_r: Operator<R>,
        v: Operator<R>,
        lambda: R,
        beta: R,
        rho_s: DensityMatrix<R>,
    ) -> Result<Self> {
        let (ds, dr) = (h_s.dim(), h_r.dim());
        if ds == 0 || dr == 0 {
            return Err(Error::Shape("system and reservoir must be nonempty".into()));
        }
        if v.dim() != ds * dr {
            return Err(Error::Shape(format!("V has dim {}, expected {}·{} = {}", v.dim(), ds, dr, ds * dr)));
        }
        if rho_s.dim() != ds {
            return Err(Error::Shape(format!("rho_S has dim {}, expected {}", rho_s.dim(), ds)));
        }
        if !(beta > R::zero()) || !beta.finite() {
            return Err(Error::OutOfDomain(format!("beta must be positive and finite, got {}", beta.as_f64())));
        }
        if !lambda.finite() {
            return Err(Error::OutOfDomain("lambda must be finite".into()));
        }
        let eig_s = HermitianEigen::new(&h_s)?;
        let eig_r = HermitianEigen::new(&h_r)?;
        v.ensure_hermitian(R::tol(crate::spectral::HERMITIAN_TOL))?;
        let v = v.hermitian_part();
        let h_s_full = h_s.tensor(&Operator::identity(dr));
        let h_r_full = Operator::identity(ds).tensor(&h_r);
        let h0 = &h_s_full + &h_r_full;
        let h_lambda = &h0 + &v.scale_re(lambda);
        let eig_0 = HermitianEigen::new_unchecked(&h0);
        let eig_lambda = HermitianEigen::new_unchecked(&h_lambda);
        let rho_r = gibbs_from_eigen(&eig_r, beta);
        let rho_beta = gibbs_from_eigen(&eig_s, beta);
        let omega = rho_s.tensor(&rho_r);
        Ok(Self {
            h_s,
            h_r,
            v,
            lambda,
            beta,
            rho_s,
            h_s_full,
            h_r_full,
            h0,
            h_lambda,
            eig_s,
            eig_r,
            eig_0,
            eig_lambda,
            rho_r,
            rho_beta,
            omega,
        })
    }

    /// Same scenario with a different coupling constant.
    pub fn with_lambda(&self, lambda: R) -> Result<Self> {
        Self::new(self.h_s.clone(), self.h_r.clone(), self.v.clone(), lambda, self.beta, self.rho_s.clone())
    }

    pub fn h_s(&self) -> &Operator<R> {
        &self.h_s
    }
    pub fn h_r(&self) -> &Operator<R> {
        &self.h_r
    }
    pub fn v(&self) -> &Operator<R> {
        &self.v
    }
    pub fn lambda(&self) -> R {
        self.lambda
    }
    pub fn beta(&self) -> R {
        self.beta
    }
    pub fn rho_s(&self) -> &DensityMatrix<R> {
        &self.rho_s
    }
    pub fn dim_s(&self) -> usize {
        self.h_s.dim()
    }
    pub fn dim_r(&self) -> usize {
        self.h_r.dim()
    }
    pub fn dim(&self) -> usize {
        self.h0.dim()
    }
    /// `H_S ⊗ 1`.
    pub fn h_s_full(&self) -> &Operator<R> {
        &self.h_s_full
    }
    /// `1 ⊗ H_R`.
    pub fn h_r_full(&self) -> &Operator<R> {
        &self.h_r_full
    }
    pub fn h0(&self) -> &Operator<R> {
        &self.h0
    }
    pub fn h_lambda(&self) -> &Operator<R> {
        &self.h_lambda
    }
    pub fn eig_s(&self) -> &HermitianEigen<R> {
        &self.eig_s
    }
    pub fn eig_r(&self) -> &HermitianEigen<R> {
        &self.eig_r
    }
    pub fn eig_0(&self) -> &HermitianEigen<R> {
        &self.eig_0
    }
    pub fn eig_lambda(&self) -> &HermitianEigen<R> {
        &self.eig_lambda
    }
    /// Thermal reservoir state `gibbs(H_R, β)`.
    pub fn rho_r(&self) -> &DensityMatrix<R> {
        &self.rho_r
    }
    /// Thermal system state `gibbs(H_S, β)`.
    pub fn rho_beta(&self) -> &DensityMatrix<R> {
        &self.rho_beta
    }
    /// Initial state `ρ_S ⊗ ρ_R`.
    pub fn omega(&self) -> &DensityMatrix<R> {
        &self.omega
    }
    /// Uncoupled equilibrium `ρ_β ⊗ ρ_R`.
    pub fn omega_eq(&self) -> DensityMatrix<R> {
        self.rho_beta.tensor(&self.rho_r)
    }

    /// `‖H_S‖ + ‖H_R‖ + |λ|‖V‖`, at least 1.
    pub fn energy_scale(&self) -> R {
        (self.eig_s.norm() + self.eig_r.norm() + self.lambda.abs() * self.v.op_norm()).max(R::one())
    }

    /// Coupled evolution `τ_λ^t(A) = e^{itH_λ} A e^{−itH_λ}`.
    pub fn evolve(&self, a: &Operator<R>, t: R) -> Operator<R> {
        if t == R::zero() {
            return a.clone();
        }
        self.eig_lambda.conjugate(a, t)
    }

    /// Uncoupled evolution `e^{itH_0} A e^{−itH_0}`.
    pub fn evolve_free(&self, a: &Operator<R>, t: R) -> Operator<R> {
        self.eig_0.conjugate(a, t)
    }

    /// Schrödinger-picture state `e^{−itH_λ} ρ e^{itH_λ}`, so that
    /// `tr(ρ_t A) = ω(τ_λ^t(A))`.
    pub fn evolved_state(&self, t: R) -> Operator<R> {
        self.evolve(self.omega.op(), -t)
    }

    pub fn fluxes(&self) -> FluxObservables<R> {
        FluxObservables::new(self)
    }
}

/// Energy currents `φ_S = λ i[H_S⊗1, V]` and `φ_R = λ i[1⊗H_R, V]`.
#[derive(Clone, Debug)]
pub struct FluxObservables<R: Real> {
    pub phi_s: Operator<R>,
    pub phi_r: Operator<R>,
}

impl<R: Real> FluxObservables<R> {
    pub fn new(scn: &Scenario<R>) -> Self {
        let i_lambda = cx(R::zero(), scn.lambda);
        let phi_s = scn.h_s_full.commutator(&scn.v).scale(i_lambda).hermitian_part();
        let phi_r = scn.h_r_full.commutator(&scn.v).scale(i_lambda).hermitian_part();
        Self { phi_s, phi_r }
    }
}

/// Energy changes over `[0, t]`: `dq_s` is the gain of the system,
/// `dq_r` the loss of the reservoir.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatChange<R> {
    pub dq_s: R,
    pub dq_r: R,
}

/// `ΔQ_S = ω(τ^t(H_S)) − ω(H_S)` and `ΔQ_R = ω(H_R) − ω(τ^t(H_R))`.
pub fn delta_q_direct<R: Real>(scn: &Scenario<R>, t: R) -> HeatChange<R> {
    let rho = scn.omega.op();
    let rho_t = scn.evolved_state(t);
    let dq_s = rho_t.trace_product(&scn.h_s_full).re - rho.trace_product(&scn.h_s_full).re;
    let dq_r = rho.trace_product(&scn.h_r_full).re - rho_t.trace_product(&scn.h_r_full).re;
    HeatChange { dq_s, dq_r }
}

/// `s ↦ ω(τ_λ^s(A))` for several observables at once, evaluated in the
/// eigenbasis of `H_λ` at `O(d²)` cost per point.
pub(crate) struct ExpectationTrace<R: Real> {
    energies: Vec<R>,
    /// Products `ρ̃_ji Ã_ij` per observable.
    weights: Vec<Vec<Cx<R>>>,
}

impl<R: Real> ExpectationTrace<R> {
    pub(crate) fn new(eig: &HermitianEigen<R>, rho: &Operator<R>, observables: &[&Operator<R>]) -> Self {
        let d = eig.dim();
        let rt = eig.to_eigenbasis(rho);
        let weights = observables
            .iter()
            .map(|a| {
                let at = eig.to_eigenbasis(a);
                let mut w = Vec::with_capacity(d * d);
                for i in 0..d {
                    for j in 0..d {
                        w.push(rt.get(j, i) * at.get(i, j));
                    }
                }
                w
            })
            .collect();
        Self { energies: eig.values().to_vec(), weights }
    }

    pub(crate) fn eval(&self, s: R) -> Vec<R> {
        let d = self.energies.len();
        let phases: Vec<Cx<R>> = self.energies.iter().map(|&e| cis(s * e)).collect();
        self.weights
            .iter()
            .map(|w| {
                let mut acc = Cx::new(R::zero(), R::zero());
                for i in 0..d {
                    let mut row = Cx::new(R::zero(), R::zero());
                    for j in 0..d {
                        row += w[i * d + j] * phases[j].conj();
                    }
                    acc += row * phases[i];
                }
                acc.re
            })
            .collect()
    }
}

/// `ΔQ_S = −∫₀ᵗ ω(τ^s(φ_S)) ds` and `ΔQ_R = ∫₀ᵗ ω(τ^s(φ_R)) ds` by adaptive
/// quadrature. Returns the heat changes and the quadrature error estimate.
pub fn delta_q_flux<R: Real>(scn: &Scenario<R>, t: R, quad_tol: R) -> Result<(HeatChange<R>, R)> {
    let flux = scn.fluxes();
    let trace = ExpectationTrace::new(&scn.eig_lambda, scn.omega.op(), &[&flux.phi_s, &flux.phi_r]);
    let q = integrate(|s| trace.eval(s), R::zero(), t, quad_tol)?;
    Ok((HeatChange { dq_s: -q.value[0], dq_r: q.value[1] }, q.error))
}

/// `|(ΔQ_R − ΔQ_S) − λ(ω(τ^t(V)) − ω(V))|`.
pub fn balance_check<R: Real>(scn: &Scenario<R>, t: R) -> R {
    let dq = delta_q_direct(scn, t);
    let rho_t = scn.evolved_state(t);
    let dv = rho_t.trace_product(&scn.v).re - scn.omega.op().trace_product(&scn.v).re;
    ((dq.dq_r - dq.dq_s) - scn.lambda * dv).abs()
}

/// Exact interaction-picture cocycle `e^{itH_λ} e^{−itH_0}`.
pub fn exact_cocycle<R: Real>(scn: &Scenario<R>, t: R) -> Operator<R> {
    &scn.eig_lambda.unitary(t) * &scn.eig_0.unitary(-t)
}

/// Envelope `x^{k+1} e^x / (k+1)!` with `x = |λ|‖V‖|t|` for the order-`k`
/// truncation error of the Dyson series.
pub fn dyson_bound<R: Real>(scn: &Scenario<R>, t: R, order: usize) -> R {
    let x = scn.lambda.abs() * scn.v.op_norm() * t.abs();
    let mut term = x.exp();
    for n in 1..=order + 1 {
        term = term * x / R::from_usize(n).unwrap();
    }
    term
}

#[derive(Clone, Debug)]
pub struct DysonResult<R: Real> {
    /// Truncated series `Σ_{n ≤ order} W_n(t)`.
    pub gamma: Operator<R>,
    /// Achieved integration error (step-doubling estimate).
    pub integration_error: R,
    /// Whether `integration_error` reached the internal tolerance.
    pub converged: bool,
    pub steps: usize,
}

const DYSON_TOL: f64 = 1e-13;
const DYSON_MAX_STEPS: usize = 1 << 16;

/// Order-truncated Dyson series of `e^{itH_λ}e^{−itH_0}`.
///
/// The terms obey `W_0 = 1`, `dW_n/dt = iλ W_{n−1} V(t)` with
/// `V(t) = e^{itH_0} V e^{−itH_0}`; the nested system is integrated with
/// classical RK4 in the eigenbasis of `H_0`, refined by step doubling and
/// Richardson extrapolation.
pub fn dyson_gamma<R: Real>(scn: &Scenario<R>, t: R, order: usize) -> DysonResult<R> {
    let d = scn.dim();
    let id = Operator::identity(d);
    if order == 0 || t == R::zero() || scn.lambda == R::zero() {
        return DysonResult { gamma: id, integration_error: R::zero(), converged: true, steps: 0 };
    }
    let vt = scn.eig_0.to_eigenbasis(&scn.v);
    let energies = scn.eig_0.values();
    let rate = scn.eig_0.spread() + scn.lambda.abs() * scn.v.op_norm();
    let mut steps = ((t.abs() * rate * R::lit(4.0)).ceil().to_usize().unwrap_or(1)).max(8);
    let tol = R::tol(DYSON_TOL);

    let v_at = |s: R| -> Operator<R> {
        let mut m = vt.clone();
        for i in 0..d {
            for j in 0..d {
                m.matrix_mut()[(i, j)] *= cis(s * (energies[i] - energies[j]));
            }
        }
        m
    };
    let solve = |n: usize| -> Vec<Operator<R>> {
        let h = t / R::from_usize(n).unwrap();
        let il = cx(R::zero(), scn.lambda);
        // terms[k] holds W_{k+1}
        let mut terms = vec![Operator::zeros(d); order];
        let rhs = |w: &[Operator<R>], v: &Operator<R>| -> Vec<Operator<R>> {
            (0..order)
                .map(|k| {
                    let prev = if k == 0 { &id } else { &w[k - 1] };
                    (prev * v).scale(il)
                })
                .collect()
        };
        let shifted = |w: &[Operator<R>], k: &[Operator<R>], c: R| -> Vec<Operator<R>> {
            w.iter()
                .zip(k)
                .map(|(a, b)| {
                    let mut x = a.clone();
                    x.axpy(c, b);
                    x
                })
                .collect()
        };
        for step in 0..n {
            let s0 = h * R::from_usize(step).unwrap();
            let half = h / R::lit(2.0);
            let (va, vm, vb) = (v_at(s0), v_at(s0 + half), v_at(s0 + h));
            let k1 = rhs(&terms, &va);
            let k2 = rhs(&shifted(&terms, &k1, half), &vm);
            let k3 = rhs(&shifted(&terms, &k2, half), &vm);
            let k4 = rhs(&shifted(&terms, &k3, h), &vb);
            for (idx, w) in terms.iter_mut().enumerate() {
                w.axpy(h / R::lit(6.0), &k1[idx]);
                w.axpy(h / R::lit(3.0), &k2[idx]);
                w.axpy(h / R::lit(3.0), &k3[idx]);
                w.axpy(h / R::lit(6.0), &k4[idx]);
            }
        }
        terms
    };
    let sum = |terms: &[Operator<R>]| -> Operator<R> {
        let mut g = id.clone();
        for w in terms {
            g.axpy(R::one(), w);
        }
        g
    };

    let mut coarse = sum(&solve(steps));
    loop {
        let fine = sum(&solve(2 * steps));
        let mut diff = fine.clone();
        diff.axpy(-R::one(), &coarse);
        let err = Integrable::norm(&diff) / R::lit(15.0);
        let mut extrapolated = fine.clone();
        extrapolated.axpy(R::one() / R::lit(15.0), &diff);
        steps *= 2;
        let converged = err <= tol;
        if converged || 2 * steps > DYSON_MAX_STEPS {
            let gamma = scn.eig_0.from_eigenbasis(&extrapolated);
            return DysonResult { gamma, integration_error: err, converged, steps };
        }
        coarse = fine;
    }
}

/// `ω(τ_λ^t(A))`.
pub fn expect_evolved<R: Real>(scn: &Scenario<R>, a: &Operator<R>, t: R) -> R {
    scn.evolved_state(t).trace_product(a).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn qubit_pair(lambda: f64) -> Scenario<f64> {
        let v = Operator::sigma_x().tensor(&Operator::sigma_x());
        let rho_s = DensityMatrix::new(Operator::diag(&[1.0, 0.0])).unwrap();
        Scenario::new(Operator::diag(&[0.0, 1.0]), Operator::diag(&[0.0, 1.3]), v, lambda, 1.0, rho_s).unwrap()
    }

    fn random_scenario(ds: usize, dr: usize, lambda: f64, seed: u64) -> Scenario<f64> {
        let mut rng = random::rng(seed);
        let hs = random::hermitian(ds, &mut rng);
        let hr = random::hermitian(dr, &mut rng);
        let v = random::hermitian(ds * dr, &mut rng);
        let rho = random::density(ds, &mut rng);
        Scenario::new(hs, hr, v, lambda, 0.9, rho).unwrap()
    }

    #[test]
    fn heisenberg_pauli_rotation() {
        for &t in &[0.0f64, 0.3, 1.7, -2.2] {
            let a = heisenberg(&Operator::sigma_x(), &Operator::sigma_z(), t).unwrap();
            let expected =
                &Operator::sigma_x().scale_re((2.0 * t).cos()) - &Operator::sigma_y().scale_re((2.0 * t).sin());
            assert!(a.max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn heisenberg_group_law() {
        let mut rng = random::rng(4);
        let h = random::hermitian::<f64>(5, &mut rng);
        let a = random::ginibre::<f64>(5, &mut rng);
        let two = heisenberg(&heisenberg(&a, &h, 0.4).unwrap(), &h, 1.1).unwrap();
        assert!(two.max_abs_diff(&heisenberg(&a, &h, 1.5).unwrap()) < 1e-10);
        assert!(heisenberg(&a, &Operator::identity(4), 1.0).is_err());
    }

    #[test]
    fn scenario_validation() {
        let rho = DensityMatrix::new(Operator::diag(&[1.0, 0.0])).unwrap();
        let bad_v = Operator::identity(3);
        assert!(Scenario::new(Operator::sigma_z(), Operator::sigma_z(), bad_v, 0.1, 1.0, rho.clone()).is_err());
        let v = Operator::identity(4);
        assert!(Scenario::new(Operator::sigma_z(), Operator::sigma_z(), v, 0.1, 0.0, rho).is_err());
    }

    #[test]
    fn uncoupled_and_initial_heat_vanish() {
        let scn = random_scenario(2, 4, 0.0, 1);
        let dq = delta_q_direct(&scn, 3.0);
        assert!(dq.dq_s.abs() < 1e-12 && dq.dq_r.abs() < 1e-12);
        let scn = random_scenario(2, 4, 0.4, 1);
        assert_eq!(delta_q_direct(&scn, 0.0), HeatChange { dq_s: 0.0, dq_r: 0.0 });
    }

    #[test]
    fn flux_matches_direct() {
        let scn = random_scenario(2, 4, 0.3, 7);
        let direct = delta_q_direct(&scn, 2.0);
        let (flux, _) = delta_q_flux(&scn, 2.0, 1e-10).unwrap();
        assert!((direct.dq_s - flux.dq_s).abs() < 1e-8);
        assert!((direct.dq_r - flux.dq_r).abs() < 1e-8);
        let (back, _) = delta_q_flux(&scn, -1.0, 1e-10).unwrap();
        let direct = delta_q_direct(&scn, -1.0);
        assert!((direct.dq_r - back.dq_r).abs() < 1e-8);
    }

    #[test]
    fn commuting_coupling_has_no_flux() {
        let rho = DensityMatrix::new(Operator::diag(&[0.3, 0.7])).unwrap();
        let v = Operator::sigma_z().tensor(&Operator::sigma_z());
        let scn = Scenario::<f64>::new(Operator::sigma_z(), Operator::diag(&[0.0, 2.0]), v, 0.5, 1.0, rho).unwrap();
        let (dq, _) = delta_q_flux(&scn, 4.0, 1e-8).unwrap();
        assert!(dq.dq_s.abs() < 1e-14 && dq.dq_r.abs() < 1e-14);
    }

    #[test]
    fn balance_and_energy_conservation() {
        let scn = random_scenario(2, 8, 0.3, 12);
        assert!(balance_check(&scn, 5.0) <= 1e-10 * scn.energy_scale());
        for &t in &[0.5, 3.0, 9.0] {
            let e = expect_evolved(&scn, scn.h_lambda(), t);
            assert!((e - scn.omega().expect(scn.h_lambda()).re).abs() < 1e-10);
        }
    }

    #[test]
    fn dyson_trivial_cases() {
        let scn = qubit_pair(0.0);
        assert!(dyson_gamma(&scn, 2.0, 3).gamma.max_abs_diff(&Operator::identity(4)) < 1e-15);
        let scn = qubit_pair(0.4);
        assert!(dyson_gamma(&scn, 0.0, 3).gamma.max_abs_diff(&Operator::identity(4)) < 1e-15);
    }

    #[test]
    fn dyson_converges_to_exact_cocycle() {
        let scn = qubit_pair(0.1);
        let exact = exact_cocycle(&scn, 1.0);
        let r = dyson_gamma(&scn, 1.0, 6);
        assert!(r.converged);
        assert!(r.gamma.max_abs_diff(&exact) < 1e-8);
        let mut prev = f64::INFINITY;
        for k in 1..=6 {
            let err = (&dyson_gamma(&scn, 1.0, k).gamma - &exact).op_norm();
            assert!(err <= dyson_bound(&scn, 1.0, k));
            assert!(err < prev);
            prev = err;
        }
    }
}
