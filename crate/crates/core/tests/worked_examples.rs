mod common;

use common::*;
use fcs_core::dynamics::{balance_check, delta_q_direct, delta_q_flux, dyson_gamma, heisenberg, Scenario};
use fcs_core::gns::{araki_vector, cocycle, commutant, cone_membership, modular_pair, pi, relative_modular, standard_gns, HSVector};
use fcs_core::presets::{self, ChainParams};
use fcs_core::random;
use fcs_core::spectral::{abs_op, commutator_gen, eig_hermitian, func_calc_real, norm_spectral_check, positive_sqrt};
use fcs_core::states::{entropy, gibbs, kms_defect, measure, random_pairs, spectral_measure, variational_gap};
use fcs_core::{DensityMatrix, Operator};

type Op = Operator<f64>;

fn op(m: M) -> Op {
    Op::from_matrix(m).unwrap()
}

fn diag(v: &[f64]) -> Op {
    Op::diag(v)
}

#[test]
fn pauli_x_spectral_decomposition() {
    let sd = eig_hermitian(&Op::sigma_x(), 1e-9).unwrap();
    assert!((sd.eigenvalues[0] + 1.0).abs() < 1e-14 && (sd.eigenvalues[1] - 1.0).abs() < 1e-14);
    let half = |s: f64| op((id(2) + Op::sigma_x().matrix() * c(s, 0.0)) * c(0.5, 0.0));
    assert!(sd.projectors[0].max_abs_diff(&half(-1.0)) < 1e-14);
    assert!(sd.projectors[1].max_abs_diff(&half(1.0)) < 1e-14);
}

#[test]
fn functional_calculus_examples() {
    let sq = func_calc_real(&Op::sigma_x(), |x| x * x).unwrap();
    assert!(sq.max_abs_diff(&Op::identity(2)) < 1e-14);
    let p = op((id(2) + Op::sigma_x().matrix().clone()) * c(0.5, 0.0));
    assert!(positive_sqrt(&p).unwrap().max_abs_diff(&p) < 1e-14);
    let a = Op::from_row_major(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(abs_op(&a).unwrap().max_abs_diff(&diag(&[0.0, 1.0])) < 1e-14);
    let (svd, spectral) = norm_spectral_check(&a);
    assert!((svd - 1.0).abs() < 1e-14 && spectral.abs() < 1e-14);
}

#[test]
fn tensor_spectrum_multiplies() {
    let sd = eig_hermitian(&Op::sigma_x().tensor(&Op::sigma_x()), 1e-9).unwrap();
    assert_eq!(sd.eigenvalues.len(), 2);
    assert!((sd.eigenvalues[0] + 1.0).abs() < 1e-14 && (sd.eigenvalues[1] - 1.0).abs() < 1e-14);
    assert!(sd.projectors.iter().all(|p| (p.trace().re - 2.0).abs() < 1e-12));
}

#[test]
fn commutator_generator_pauli_table() {
    let g = commutator_gen(&Op::sigma_z()).unwrap().apply(&Op::sigma_x()).unwrap();
    assert!(g.max_abs_diff(&Op::sigma_y().scale_re(-2.0)) < 1e-14);
}

#[test]
fn heisenberg_pauli_rotation() {
    for t in [0.0, 0.4, 1.3, -2.0] {
        let got = heisenberg(&Op::sigma_x(), &Op::sigma_z(), t).unwrap();
        let want = &Op::sigma_x().scale_re((2.0 * t).cos()) - &Op::sigma_y().scale_re((2.0 * t).sin());
        assert!(got.max_abs_diff(&want) < 1e-14);
    }
}

#[test]
fn gibbs_entropy_and_variational_examples() {
    let g = gibbs(&diag(&[0.0, 1.0]), 1.0).unwrap();
    let p = 1.0 / (1.0 + (-1.0f64).exp());
    assert!(g.op().max_abs_diff(&diag(&[p, 1.0 - p])) < 1e-15);
    assert!((p - 0.731058).abs() < 1e-6);
    let s = entropy(&DensityMatrix::new(diag(&[0.75, 0.25])).unwrap());
    assert!((s - -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln())).abs() < 1e-15);
    assert!((s - 0.562335).abs() < 1e-6);
    let gap = variational_gap(&diag(&[0.0, 1.0]), 1.0, &presets::ground_state(2)).unwrap();
    assert!((gap - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-14);
}

#[test]
fn measurement_examples() {
    let half = DensityMatrix::<f64>::maximally_mixed(2);
    let m = measure(&half, &Op::sigma_z(), 1e-9).unwrap();
    assert_eq!(m.outcomes.len(), 2);
    for (o, (v, proj)) in m.outcomes.iter().zip([(-1.0, diag(&[0.0, 1.0])), (1.0, diag(&[1.0, 0.0]))]) {
        assert!((o.value - v).abs() < 1e-14 && (o.probability - 0.5).abs() < 1e-14);
        assert!(o.post_state.as_ref().unwrap().op().max_abs_diff(&proj) < 1e-14);
    }
    let mu = spectral_measure(&Op::sigma_z(), &half, 1e-9).unwrap();
    assert!((mu.weight_at(-1.0, 1e-9) - 0.5).abs() < 1e-14 && (mu.weight_at(1.0, 1e-9) - 0.5).abs() < 1e-14);
}

#[test]
fn kms_separates_temperatures() {
    let mut rng = random::rng(11);
    let h = random::hermitian::<f64>(3, &mut rng);
    let pairs = random_pairs::<f64>(3, 100, &mut rng);
    let scale = pairs.iter().fold(1.0f64, |m, (a, b)| m.max(a.op_norm() * b.op_norm()));
    let right = DensityMatrix::new(op(gibbs_oracle(&h, 0.9))).unwrap();
    assert!(kms_defect(&right, &h, 0.9, &pairs).unwrap() <= 1e-10 * scale);
    let wrong = DensityMatrix::new(op(gibbs_oracle(&h, 1.4))).unwrap();
    assert!(kms_defect(&wrong, &h, 0.9, &pairs).unwrap() > 1e-3);
}

fn gibbs_oracle(h: &Op, beta: f64) -> M {
    common::gibbs(h.matrix(), beta)
}

#[test]
fn dyson_order_six_matches_exact_cocycle() {
    let scn = presets::qubit_pair::<f64>(0.1, 1.0);
    let r = raw(&scn);
    let h0 = kron(&r.h_s, &id(2)) + kron(&id(2), &r.h_r);
    let exact = expm(&r.h_lambda, c(0.0, 1.0)) * expm(&h0, c(0.0, -1.0));
    let d = dyson_gamma(&scn, 1.0, 6);
    assert!(d.gamma.max_abs_diff(&op(exact)) < 1e-8);
}

#[test]
fn heat_changes_match_direct_oracle() {
    let scn = presets::random_scenario::<f64>(2, 4, 0.3, 1.0, 21).unwrap();
    let r = raw(&scn);
    let dq_s = expectation_change(&scn, &kron(&r.h_s, &id(4)), 2.0);
    let dq_r = -expectation_change(&scn, &kron(&id(2), &r.h_r), 2.0);
    let direct = delta_q_direct(&scn, 2.0);
    assert!((direct.dq_s - dq_s).abs() < 1e-12 && (direct.dq_r - dq_r).abs() < 1e-12);
    let (flux, _) = delta_q_flux(&scn, 2.0, 1e-10).unwrap();
    assert!((flux.dq_s - dq_s).abs() < 1e-8 && (flux.dq_r - dq_r).abs() < 1e-8);
}

#[test]
fn balance_identity_random_two_by_eight() {
    let scn = presets::random_scenario::<f64>(2, 8, 0.3, 1.0, 8).unwrap();
    let r = raw(&scn);
    let v = scn.v().matrix().clone();
    let dq_s = expectation_change(&scn, &kron(&r.h_s, &id(8)), 5.0);
    let dq_r = -expectation_change(&scn, &kron(&id(2), &r.h_r), 5.0);
    let coupling = 0.3 * expectation_change(&scn, &v, 5.0);
    assert!(((dq_r - dq_s) - coupling).abs() <= 1e-10 * scn.energy_scale());
    assert!(balance_check(&scn, 5.0) <= 1e-10 * scn.energy_scale());
}

#[test]
fn standard_representation_examples() {
    let mut rng = random::rng(4);
    let rho = random::density::<f64>(4, &mut rng);
    let gns = standard_gns(&rho).unwrap();
    for _ in 0..10 {
        let a = random::ginibre::<f64>(4, &mut rng);
        let want = trace(&(rho.op().matrix() * a.matrix()));
        assert!((gns.expect(&a) - want).norm() < 1e-12);
    }
    let rho3 = random::density::<f64>(3, &mut rng);
    let m = modular_pair(rho3.op()).unwrap();
    for _ in 0..50 {
        let a = random::ginibre::<f64>(3, &mut rng);
        let lhs = m.s(&pi(&a, m.omega()));
        let rhs = pi(&a.adjoint(), m.omega());
        assert!(lhs.max_abs_diff(&rhs) < 1e-10 * a.op_norm().max(1.0));
    }
}

#[test]
fn radon_nikodym_property() {
    let mut rng = random::rng(5);
    let eta = random::density::<f64>(4, &mut rng);
    let omega = random::density::<f64>(4, &mut rng);
    let rel = relative_modular(eta.op(), omega.op()).unwrap();
    let om = HSVector::new(op(sqrt_psd(omega.op().matrix())));
    for _ in 0..100 {
        let a = random::ginibre::<f64>(4, &mut rng);
        let got = om.inner(&pi(&a, &rel.apply(&om)));
        let want = trace(&(eta.op().matrix() * a.matrix()));
        assert!((got - want).norm() < 1e-10 * a.op_norm().max(1.0));
    }
}

#[test]
fn cone_generators_are_positive() {
    let mut rng = random::rng(6);
    let rho = random::density::<f64>(3, &mut rng);
    let m = modular_pair(rho.op()).unwrap();
    for _ in 0..20 {
        let a = random::ginibre::<f64>(3, &mut rng);
        let x = pi(&a, &commutant(&a, m.omega()));
        let eig = x.mat().matrix().clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e > -1e-12));
        assert!(cone_membership(&x, 1e-10));
    }
}

#[test]
fn araki_vector_is_coupled_gibbs_root() {
    let scn = presets::qubit_pair::<f64>(0.5, 1.0);
    let r = raw(&scn);
    let want = sqrt_psd(&common::gibbs(&r.h_lambda, 1.0));
    assert!(araki_vector(&scn).mat().max_abs_diff(&op(want)) < 1e-10);
}

#[test]
fn cocycle_identity_random_two_by_four() {
    let scn = presets::random_scenario::<f64>(2, 4, 0.4, 1.0, 13).unwrap();
    let cy = cocycle(&scn, 1.3);
    let r = raw(&scn);
    let h0 = kron(&r.h_s, &id(4)) + kron(&id(2), &r.h_r);
    let want = expm(&r.h_lambda, c(0.0, 1.3)) * expm(&h0, c(0.0, -1.3));
    assert!(cy.w.max_abs_diff(&op(want)) < 1e-10);
    assert!(cy.identity_residual(&scn).unwrap() <= 1e-10);
}

#[test]
fn free_chain_spectrum() {
    let scn = presets::chain_scenario::<f64>(&ChainParams { n: 2, coupling: 0.0, field: 0.3, ..Default::default() }, 0.0, 1.0).unwrap();
    let mut e: Vec<f64> = scn.h_r().matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in e.iter().zip([-0.6, 0.0, 0.0, 0.6]) {
        assert!((got - want).abs() < 1e-14);
    }
}

#[test]
fn dimension_mismatch_rejected() {
    let bad = Scenario::<f64>::new(diag(&[0.0, 1.0]), diag(&[0.0, 1.0]), Op::identity(3), 0.1, 1.0, presets::ground_state(2));
    assert!(bad.is_err());
}
