//! Invariant suites run against a scenario, each check reporting its
//! residual against a fixed tolerance.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::dynamics::{balance_check, delta_q_direct, delta_q_flux, dyson_bound, dyson_gamma, exact_cocycle, expect_evolved, heisenberg, Scenario};
use crate::error::{Error, Result};
use crate::fcs::{
    balance_operator_check, default_gamma_grid, lemma_half_line_check, mean_identity_check, reservoir_fcs, strip_bounds_check, strip_function,
    system_fcs,
};
use crate::gns::{araki_vector, cocycle, commutant, cone_membership, coupled_gibbs_sqrt, modular_pair, pi, relative_modular, HSVector, Liouvilleans};
use crate::random::{self, CheckRng};
use crate::scalar::{cabs, cx, re, Real};
use crate::spectral::{func_calc_real, norm_spectral_check, HermitianEigen};
use crate::states::{gibbs, gibbs_variational_check, kms_defect, measure, random_pairs, spectral_measure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Operator,
    States,
    Dynamics,
    Modular,
    Fcs,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Operator, Suite::States, Suite::Dynamics, Suite::Modular, Suite::Fcs];
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "operator" | "operator-core" => Ok(Suite::Operator),
            "states" => Ok(Suite::States),
            "dynamics" => Ok(Suite::Dynamics),
            "modular" | "gns-modular" => Ok(Suite::Modular),
            "fcs" => Ok(Suite::Fcs),
            "all" => Ok(Suite::All),
            other => Err(Error::Config { field: "suite".into(), message: format!("unknown suite `{}`", other) }),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Operator => "operator",
            Suite::States => "states",
            Suite::Dynamics => "dynamics",
            Suite::Modular => "modular",
            Suite::Fcs => "fcs",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub check_name: String,
    pub suite: Suite,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub t: f64,
    pub seed: u64,
    pub quad_tol: f64,
    pub cluster_tol: f64,
    /// Random samples per sampled identity.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { t: 1.0, seed: 0, quad_tol: 1e-8, cluster_tol: 1e-9, samples: 20 }
    }
}

struct Recorder {
    suite: Suite,
    checks: Vec<CheckResult>,
}

impl Recorder {
    fn check<R: Real>(&mut self, name: &str, residual: R, tolerance: f64) {
        let r = residual.as_f64();
        self.checks.push(CheckResult { check_name: name.into(), suite: self.suite, residual: r, tolerance, pass: r.is_finite() && r <= tolerance });
    }

    fn fallible<R: Real>(&mut self, name: &str, residual: Result<R>, tolerance: f64) {
        match residual {
            Ok(r) => self.check(name, r, tolerance),
            Err(_) => self.checks.push(CheckResult { check_name: name.into(), suite: self.suite, residual: f64::INFINITY, tolerance, pass: false }),
        }
    }
}

fn operator_suite<R: Real>(scn: &Scenario<R>, o: &VerifyOptions, rng: &mut CheckRng, rec: &mut Recorder) {
    for (name, h) in [("spectral_reconstruction_h_s", scn.h_s()), ("spectral_reconstruction_h_r", scn.h_r()), ("spectral_reconstruction_h_lambda", scn.h_lambda())] {
        let eig = HermitianEigen::new(h).expect("scenario Hamiltonians are Hermitian");
        let w: Vec<_> = eig.values().iter().map(|&l| re(l)).collect();
        rec.check(name, eig.recompose(&w).max_abs_diff(h) / eig.norm().max(R::one()), 1e-12);
    }
    let (svd, eig) = norm_spectral_check(scn.h_lambda());
    rec.check("norm_equals_spectral_radius", (svd - eig).abs() / svd.max(R::one()), 1e-12);
    let rho = scn.omega();
    let sqrt = func_calc_real(rho.op(), |x| x.max(R::zero()).sqrt()).expect("finite");
    rec.check("sqrt_squares_back", (&sqrt * &sqrt).max_abs_diff(rho.op()), 1e-12);
    let reduced = rho.op().partial_trace(&[scn.dim_s(), scn.dim_r()], 1).expect("dims match");
    rec.check("partial_trace_recovers_rho_s", reduced.max_abs_diff(scn.rho_s().op()), 1e-12);
    let mut worst = R::zero();
    for _ in 0..o.samples {
        let a = random::hermitian::<R>(scn.dim(), rng);
        let g = scn.h_lambda().commutator(&a).scale(cx(R::zero(), R::one()));
        worst = worst.max(g.asymmetry());
    }
    rec.check("commutator_generator_hermitian", worst, 1e-12);
}

fn states_suite<R: Real>(scn: &Scenario<R>, o: &VerifyOptions, rng: &mut CheckRng, rec: &mut Recorder) {
    let beta = scn.beta();
    rec.check("rho_s_trace", (scn.rho_s().op().trace().re - R::one()).abs(), 1e-12);
    let rep = gibbs_variational_check(scn.h_r(), beta, o.samples.max(1), o.seed).expect("valid Hamiltonian");
    rec.check("gibbs_variational_equality", rep.gibbs_gap.abs(), 1e-10);
    rec.check("gibbs_variational_inequality", rep.max_violation, 1e-10);
    let pairs = random_pairs::<R>(scn.dim_r(), 100, rng);
    let g = gibbs(scn.h_r(), beta).expect("valid Hamiltonian");
    let scale = pairs.iter().fold(R::one(), |m, (a, b)| m.max(a.op_norm() * b.op_norm()));
    rec.fallible("kms_gibbs_reservoir", kms_defect(&g, scn.h_r(), beta, &pairs).map(|d| d / scale), 1e-10);
    let ct = R::lit(o.cluster_tol);
    let dist = measure(scn.rho_s(), scn.h_s(), ct).and_then(|m| m.distribution(ct));
    rec.fallible("measurement_mean_matches_expectation", dist.map(|d| (d.mean() - scn.rho_s().expect(scn.h_s()).re).abs()), 1e-12);
    rec.fallible("spectral_measure_mass", spectral_measure(scn.h_s(), scn.rho_s(), ct).map(|m| (m.mass() - R::one()).abs()), 1e-12);
}

fn dynamics_suite<R: Real>(scn: &Scenario<R>, o: &VerifyOptions, rng: &mut CheckRng, rec: &mut Recorder) {
    let t = R::lit(o.t);
    let a = random::ginibre::<R>(scn.dim(), rng);
    let h = scn.h_lambda();
    let split = heisenberg(&heisenberg(&a, h, t / R::lit(3.0)).unwrap(), h, t * R::lit(2.0) / R::lit(3.0)).unwrap();
    rec.check("heisenberg_group_law", split.max_abs_diff(&heisenberg(&a, h, t).unwrap()) / a.op_norm().max(R::one()), 1e-10);
    let e0 = scn.omega().expect(h).re;
    rec.check("energy_conservation", (expect_evolved(scn, h, t) - e0).abs(), 1e-10);
    let scale = scn.energy_scale();
    rec.check("balance_identity", balance_check(scn, t) / scale, 1e-10);
    let direct = delta_q_direct(scn, t);
    rec.fallible(
        "flux_matches_direct",
        delta_q_flux(scn, t, R::lit(o.quad_tol)).map(|(f, _)| (f.dq_s - direct.dq_s).abs().max((f.dq_r - direct.dq_r).abs())),
        o.quad_tol + 1e-10,
    );
    let coupling = scn.lambda().abs() * scn.v().op_norm();
    let td = if coupling > R::zero() { t.abs().min(R::one() / coupling) } else { t.abs() };
    let exact = exact_cocycle(scn, td);
    let mut slack = R::zero();
    for k in 1..=6 {
        let err = (&dyson_gamma(scn, td, k).gamma - &exact).op_norm();
        slack = slack.max(err - dyson_bound(scn, td, k));
    }
    rec.check("dyson_within_envelope", slack.max(R::zero()), 1e-12);
}

fn modular_suite<R: Real>(scn: &Scenario<R>, o: &VerifyOptions, rng: &mut CheckRng, rec: &mut Recorder) {
    let d = scn.dim();
    let eq = scn.omega_eq();
    let m = modular_pair(eq.op()).expect("thermal reference is faithful");
    let om = m.omega().clone();
    rec.check("vacuum_invariance", m.delta(&om).max_abs_diff(&om), 1e-10);
    let (mut s_def, mut polar, mut j2, mut anti, mut jself, mut inv_half, mut tt, mut kms, mut rn, mut cone) =
        (R::zero(), R::zero(), R::zero(), R::zero(), R::zero(), R::zero(), R::zero(), R::zero(), R::zero(), 0usize);
    let rel = relative_modular(scn.omega().op(), eq.op()).expect("thermal reference is faithful");
    for _ in 0..o.samples {
        let a = random::ginibre::<R>(d, rng);
        let b = random::ginibre::<R>(d, rng);
        let x = HSVector::new(random::ginibre::<R>(d, rng));
        let y = HSVector::new(random::ginibre::<R>(d, rng));
        let size = x.norm().max(R::one());
        s_def = s_def.max(m.s(&pi(&a, &om)).max_abs_diff(&pi(&a.adjoint(), &om)) / a.op_norm().max(R::one()));
        let dx = m.delta(&x);
        polar = polar.max(dx.max_abs_diff(&m.f(&m.s(&x))) / dx.norm().max(R::one()));
        j2 = j2.max(m.j(&m.j(&x)).max_abs_diff(&x));
        anti = anti.max(cabs(m.j(&x).inner(&m.j(&y)) - y.inner(&x)) / (size * y.norm()));
        jself = jself.max(cabs(x.inner(&m.j(&y)) - y.inner(&m.j(&x))) / (size * y.norm()));
        let lhs = m.delta_power(re(R::lit(-0.5)), &x);
        inv_half = inv_half.max(lhs.max_abs_diff(&m.j(&m.delta_power(re(R::lit(0.5)), &m.j(&x)))) / lhs.norm().max(R::one()));
        let jaj = |v: &HSVector<R>| m.j(&pi(&a, &m.j(v)));
        tt = tt.max(jaj(&pi(&b, &x)).max_abs_diff(&pi(&b, &jaj(&x))) / (a.op_norm() * b.op_norm() * size).max(R::one()));
        let k1 = om.inner(&pi(&a, &m.delta(&pi(&b, &om))));
        let k2 = om.inner(&pi(&b, &pi(&a, &om)));
        kms = kms.max(cabs(k1 - k2) / (a.op_norm() * b.op_norm()).max(R::one()));
        let v = om.inner(&rel.apply(&pi(&a, &om)));
        rn = rn.max(cabs(v - scn.omega().expect(&a)) / a.op_norm().max(R::one()));
        if !cone_membership(&pi(&a, &commutant(&a, &om)), R::lit(1e-10)) {
            cone += 1;
        }
    }
    rec.check("s_conjugates_a_omega", s_def, 1e-10);
    rec.check("delta_equals_fs", polar, 1e-10);
    rec.check("j_squared_identity", j2, 1e-10);
    rec.check("j_antiunitary", anti, 1e-10);
    rec.check("j_selfadjoint", jself, 1e-10);
    rec.check("delta_inverse_half", inv_half, 1e-10);
    rec.check("tomita_takesaki_commutation", tt, 1e-10);
    rec.check("kms_from_modular", kms, 1e-10);
    rec.check("radon_nikodym", rn, 1e-10);
    rec.check("cone_contains_ajaj_omega", R::from_usize(cone).unwrap(), 0.0);

    let l = Liouvilleans::new(scn);
    let mut formula = R::zero();
    for _ in 0..o.samples {
        let x = HSVector::new(random::ginibre::<R>(d, rng));
        formula = formula.max(l.l_lambda(&x).max_abs_diff(&l.l_lambda_modular(&x)) / x.norm().max(R::one()));
    }
    rec.check("perturbed_liouvillean_formula", formula, 1e-10);
    let eqv = scn.omega_eq_vector();
    rec.check("l0_annihilates_omega_eq", l.l0(&eqv).norm(), 1e-10);
    let araki = araki_vector(scn);
    rec.check("l_lambda_annihilates_araki", l.l_lambda(&araki).norm(), 1e-10);
    rec.check("araki_is_coupled_gibbs_root", araki.max_abs_diff(&coupled_gibbs_sqrt(scn)), 1e-10);
    rec.fallible("cocycle_identity", cocycle(scn, R::lit(o.t)).identity_residual(scn), 1e-10);
}

fn fcs_suite<R: Real>(scn: &Scenario<R>, o: &VerifyOptions, rec: &mut Recorder) {
    let t = R::lit(o.t);
    let ct = R::lit(o.cluster_tol);
    let qt = R::lit(o.quad_tol);
    let res = reservoir_fcs(scn, t, ct, &[]);
    let sys = system_fcs(scn, t, ct, &[]);
    rec.fallible("reservoir_measure_mass", res.as_ref().map(|r| (r.measure.mass() - R::one()).abs()).map_err(Clone::clone), 1e-10);
    rec.fallible("system_measure_mass", sys.as_ref().map(|r| (r.measure.mass() - R::one()).abs()).map_err(Clone::clone), 1e-10);
    rec.fallible("mean_identity", mean_identity_check(scn, t, qt), o.quad_tol + 1e-8);
    let phi = scn.fluxes().phi_r.op_norm();
    let tol = o.quad_tol * scn.beta().as_f64() * phi.as_f64() * o.t.abs() + 1e-8;
    rec.fallible("entropy_balance_operator", balance_operator_check(scn, t, qt), tol);
    let mut left = R::zero();
    let mut comm = R::zero();
    for s in [-1.0, 0.0, 1.0] {
        let r = lemma_half_line_check(scn, t, R::lit(s));
        left = left.max(r.left);
        comm = comm.max(r.commutant);
    }
    rec.check("lemma_half_line_left", left, 1e-8);
    rec.check("lemma_half_line_commutant", comm, 1e-8);
    let grid: Vec<_> = (0..25).map(|k| cx(R::lit((k % 5) as f64 / 4.0), R::lit((k / 5) as f64 - 2.0))).collect();
    rec.fallible(
        "strip_bounds",
        strip_bounds_check(scn, t, &grid).map(|r| if r.violations == 0 { R::zero() } else { -r.min_slack }),
        0.0,
    );
    let f = strip_function(scn, t);
    let sym = default_gamma_grid(scn).iter().fold(R::zero(), |m, &g| m.max(cabs(f.char_at(-g) - f.char_at(g).conj())));
    rec.check("char_conjugate_symmetry", sym, 1e-12);
    if let Ok(res) = &res {
        let d = f.derivative_moments();
        let r = res.moments.iter().zip(&d).fold(R::zero(), |m, (&a, &b)| m.max((a - b).abs() / a.abs().max(R::one())));
        rec.check("moment_consistency", r, 1e-6);
        // the first measurement dephases ρ_S, so the system mean is ΔQ_S only
        // when ρ_S commutes with H_S
        if scn.rho_s().op().commutator(scn.h_s()).op_norm() <= R::lit(1e-12) {
            if let Ok(sys) = &sys {
                let rho_t = scn.evolved_state(t);
                let dv = rho_t.trace_product(scn.v()).re - scn.omega().expect(scn.v()).re;
                rec.check("first_law_of_averages", (res.mean - sys.mean - scn.lambda() * dv).abs(), 1e-8);
            }
        }
    }
}

/// Runs the selected suite(s) with the given options.
pub fn run_suite<R: Real>(scn: &Scenario<R>, suite: Suite, options: &VerifyOptions) -> VerifyReport {
    let mut rng = random::rng(options.seed);
    let selected: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut checks = Vec::new();
    for s in selected {
        let mut rec = Recorder { suite: s, checks: Vec::new() };
        match s {
            Suite::Operator => operator_suite(scn, options, &mut rng, &mut rec),
            Suite::States => states_suite(scn, options, &mut rng, &mut rec),
            Suite::Dynamics => dynamics_suite(scn, options, &mut rng, &mut rec),
            Suite::Modular => modular_suite(scn, options, &mut rng, &mut rec),
            Suite::Fcs => fcs_suite(scn, options, &mut rec),
            Suite::All => unreachable!(),
        }
        checks.extend(rec.checks);
    }
    let passed = checks.iter().all(|c| c.pass);
    VerifyReport { suite, checks, passed }
}
