//! Full counting statistics of the system and reservoir energy changes,
//! their characteristic functions on the strip `0 ≤ Re α ≤ 1`, and checks
//! of the identities and bounds that tie them to heat flow.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dynamics::{delta_q_flux, Scenario};
use crate::error::{Error, Result};
use crate::gns::{HSVector, Liouvilleans, RelativeModular};
use crate::measure::AtomicMeasure;
use crate::operator::Operator;
use crate::quadrature::integrate;
use crate::scalar::{cabs, cexp, cis, cx, re, Cx, Real};
use crate::spectral::{decompose, PositiveSpectrum, DEFAULT_CLUSTER_TOL};

/// Highest moment order reported.
pub const MOMENT_ORDERS: usize = 4;
/// Sample points on each Cauchy contour.
const CONTOUR_POINTS: usize = 64;

/// A counting-statistics measure with its summary data.
#[derive(Clone, Debug)]
pub struct FcsResult<R: Real> {
    pub measure: AtomicMeasure<R>,
    pub mean: R,
    /// Raw moments of orders `1..=MOMENT_ORDERS`.
    pub moments: Vec<R>,
    pub char_samples: Vec<(R, Cx<R>)>,
}

impl<R: Real> FcsResult<R> {
    pub fn new(measure: AtomicMeasure<R>, char_samples: Vec<(R, Cx<R>)>) -> Self {
        let moments = (1..=MOMENT_ORDERS as u32).map(|k| measure.moment(k)).collect();
        Self { mean: measure.mean(), measure, moments, char_samples }
    }
}

/// `α ↦ F_{λ,t}(α) = ⟨Ω, Δ^α Ω⟩ = Σ w_k e^{α x_k}` where `x_k` runs over the
/// log-eigenvalues of the relative modular operator and `w_k` over the
/// weights of `Ω` on its eigenvectors.
#[derive(Clone, Debug)]
pub struct StripFunction<R: Real> {
    terms: Vec<(R, R)>,
    beta: R,
}

impl<R: Real> StripFunction<R> {
    pub fn beta(&self) -> R {
        self.beta
    }

    /// Pairs `(log-eigenvalue, weight)`.
    pub fn terms(&self) -> &[(R, R)] {
        &self.terms
    }

    /// Evaluates on the closed strip `0 ≤ Re α ≤ 1`.
    pub fn eval(&self, alpha: Cx<R>) -> Result<Cx<R>> {
        check_strip(alpha)?;
        Ok(self.eval_unchecked(alpha))
    }

    /// Evaluates anywhere; the finite sum is entire.
    pub(crate) fn eval_unchecked(&self, alpha: Cx<R>) -> Cx<R> {
        self.terms.iter().fold(Cx::new(R::zero(), R::zero()), |acc, &(x, w)| acc + cexp(alpha * re(x)).scale(w))
    }

    /// `F(iγ/β)`, the characteristic function of the reservoir measure.
    pub fn char_at(&self, gamma: R) -> Cx<R> {
        self.eval_unchecked(cx(R::zero(), gamma / self.beta))
    }

    fn log_scale(&self) -> R {
        let floor = R::tol(crate::measure::WEIGHT_FLOOR);
        self.terms.iter().filter(|t| t.1 > floor).fold(R::zero(), |m, t| m.max(t.0.abs()))
    }

    /// Moments `F^{(k)}(0)/β^k`, `k = 1..=MOMENT_ORDERS`, from Cauchy
    /// integrals of `F` on circles around the origin.
    pub fn derivative_moments(&self) -> Vec<R> {
        let scale = self.log_scale();
        let n = CONTOUR_POINTS;
        let two_pi = R::two_pi();
        (1..=MOMENT_ORDERS)
            .map(|k| {
                if scale == R::zero() {
                    return R::zero();
                }
                let r = R::from_usize(k).unwrap() / scale;
                let mut acc = Cx::new(R::zero(), R::zero());
                for p in 0..n {
                    let theta = two_pi * R::from_usize(p).unwrap() / R::from_usize(n).unwrap();
                    let z = cis(theta).scale(r);
                    acc += self.eval_unchecked(z) * cis(-theta * R::from_usize(k).unwrap());
                }
                let mut factorial = R::one();
                for j in 2..=k {
                    factorial *= R::from_usize(j).unwrap();
                }
                let deriv = acc.re * factorial / (R::from_usize(n).unwrap() * r.powi(k as i32));
                deriv / self.beta.powi(k as i32)
            })
            .collect()
    }
}

fn check_strip<R: Real>(alpha: Cx<R>) -> Result<()> {
    if !(alpha.re >= R::zero() && alpha.re <= R::one()) || !alpha.im.finite() {
        return Err(Error::OutOfDomain(format!(
            "alpha = {} + {}i lies outside 0 ≤ Re α ≤ 1",
            alpha.re.as_f64(),
            alpha.im.as_f64()
        )));
    }
    Ok(())
}

/// Spectra of `ρ_η = 1 ⊗ ρ_R` and `ρ_{η∘τ^{−t}} = e^{itH_λ} ρ_η e^{−itH_λ}`,
/// built from the reservoir eigenbasis with exact logarithms.
pub(crate) fn reservoir_spectra<R: Real>(scn: &Scenario<R>, t: R) -> (PositiveSpectrum<R>, PositiveSpectrum<R>) {
    let eig_r = scn.eig_r();
    let beta = scn.beta();
    let log_z = crate::states::log_partition(eig_r, beta);
    let ds = scn.dim_s();
    let logs_r: Vec<R> = eig_r.values().iter().map(|&e| -beta * e - log_z).collect();
    let logs: Vec<R> = (0..ds).flat_map(|_| logs_r.iter().copied()).collect();
    let q = Operator::identity(ds).tensor(&Operator::wrap(eig_r.vectors().clone()));
    let u = if t == R::zero() { Operator::identity(scn.dim()) } else { scn.eig_lambda().unitary(t) };
    let eta = PositiveSpectrum::from_log_parts(logs.clone(), q.matrix().clone());
    let moved = PositiveSpectrum::from_log_parts(logs, (&u * &q).into_matrix());
    (moved, eta)
}

/// `Δ_{η∘τ_λ^{−t}|η}` in closed spectral form.
pub fn reservoir_relative_modular<R: Real>(scn: &Scenario<R>, t: R) -> RelativeModular<R> {
    let (moved, eta) = reservoir_spectra(scn, t);
    RelativeModular::from_spectra(moved, eta)
}

/// `F_{λ,t}` for the scenario's `Ω = ρ_S^{1/2} ⊗ ρ_R^{1/2}`.
pub fn strip_function<R: Real>(scn: &Scenario<R>, t: R) -> StripFunction<R> {
    let rel = reservoir_relative_modular(scn, t);
    let w = rel.spectral_weights(&scn.omega_vector()).expect("closed-form spectra are full rank");
    StripFunction { terms: w.into_iter().map(|s| (s.log_eigenvalue, s.weight)).collect(), beta: scn.beta() }
}

/// Default `γ` grid: 41 points on `[−π/δE, π/δE]`, `δE` the smallest gap of
/// `H_S` (or 1 if `H_S` is scalar).
pub fn default_gamma_grid<R: Real>(scn: &Scenario<R>) -> Vec<R> {
    let sd = decompose(scn.eig_s(), R::lit(DEFAULT_CLUSTER_TOL));
    let gap = sd.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(None, |m: Option<R>, g| Some(m.map_or(g, |m| m.min(g))));
    let half = R::pi() / gap.unwrap_or(R::one());
    (0..41).map(|k| -half + half * R::lit(k as f64 / 20.0)).collect()
}

/// System energy statistics: outcome `λ_j − λ_i` with weight
/// `tr((P_iρ_SP_i ⊗ ρ_R) τ_λ^t(P_j ⊗ 1))`.
pub fn system_fcs<R: Real>(scn: &Scenario<R>, t: R, cluster_tol: R, gammas: &[R]) -> Result<FcsResult<R>> {
    let sd = decompose(scn.eig_s(), cluster_tol);
    let id_r = Operator::identity(scn.dim_r());
    let full: Vec<Operator<R>> = sd.projectors.iter().map(|p| p.tensor(&id_r)).collect();
    let mut points = Vec::with_capacity(sd.len() * sd.len());
    for (i, pi) in sd.projectors.iter().enumerate() {
        let sigma = (&(pi * scn.rho_s().op()) * pi).tensor(scn.rho_r().op());
        let sigma_t = scn.evolve(&sigma, -t);
        for (j, pj) in full.iter().enumerate() {
            points.push((sd.eigenvalues[j] - sd.eigenvalues[i], sigma_t.trace_product(pj).re));
        }
    }
    let measure = AtomicMeasure::from_points(points, cluster_tol)?;
    let samples = gammas.iter().map(|&g| (g, measure.char_fn(g))).collect();
    Ok(FcsResult::new(measure, samples))
}

/// `tr(ρ_β e^{iγH_S}) · tr(ρ_S e^{−iγH_S})`.
pub fn system_char_limit<R: Real>(scn: &Scenario<R>, gamma: R) -> Cx<R> {
    let eig = scn.eig_s();
    let thermal = scn.rho_beta().expect(&eig.unitary(gamma));
    let initial = scn.rho_s().expect(&eig.unitary(-gamma));
    thermal * initial
}

/// Reservoir energy statistics: the spectral measure of
/// `(1/β) log Δ_{η∘τ_λ^{−t}|η}` in the vector `Ω`. Atoms sit at initial minus
/// final reservoir energy, so the mean is the reservoir's energy loss.
pub fn reservoir_fcs<R: Real>(scn: &Scenario<R>, t: R, cluster_tol: R, gammas: &[R]) -> Result<FcsResult<R>> {
    let f = strip_function(scn, t);
    reservoir_fcs_from(&f, cluster_tol, gammas)
}

pub fn reservoir_fcs_from<R: Real>(f: &StripFunction<R>, cluster_tol: R, gammas: &[R]) -> Result<FcsResult<R>> {
    let beta = f.beta;
    let measure = AtomicMeasure::from_points(f.terms.iter().map(|&(x, w)| (x / beta, w)), cluster_tol)?;
    let samples = gammas.iter().map(|&g| (g, f.char_at(g))).collect();
    Ok(FcsResult::new(measure, samples))
}

/// `⟨Ω, ρ_{η∘τ^{−t}}^α Ω ρ_η^{−α}⟩` through matrix powers; `Re α ∈ [0, 1]`.
/// Evaluated as `tr(ρ_{η∘τ^{−t}}^α (ρ_S ⊗ 1) ρ_η^{1−α})`, which avoids
/// forming `ρ_η^{−α}`.
pub fn reservoir_char<R: Real>(scn: &Scenario<R>, t: R, alpha: Cx<R>) -> Result<Cx<R>> {
    check_strip(alpha)?;
    Ok(reservoir_char_unchecked(scn, t, alpha))
}

pub(crate) fn reservoir_char_unchecked<R: Real>(scn: &Scenario<R>, t: R, alpha: Cx<R>) -> Cx<R> {
    let (moved, eta) = reservoir_spectra(scn, t);
    let rho_s = scn.rho_s().op().tensor(&Operator::identity(scn.dim_r()));
    let one = Cx::new(R::one(), R::zero());
    (&moved.power(alpha) * &rho_s).trace_product(&eta.power(one - alpha))
}

/// `|⟨x⟩_{P_R} − ΔQ_R|` with `ΔQ_R` from the flux integral.
pub fn mean_identity_check<R: Real>(scn: &Scenario<R>, t: R, quad_tol: R) -> Result<R> {
    let fcs = reservoir_fcs(scn, t, R::lit(DEFAULT_CLUSTER_TOL), &[])?;
    let (dq, _) = delta_q_flux(scn, t, quad_tol)?;
    Ok((fcs.mean - dq.dq_r).abs())
}

/// Max entrywise residual of
/// `log Δ_{η∘τ^{−t}|η} = log Δ_η + β ∫₀ᵗ π(τ^s(φ_R)) ds` over the basis of
/// matrix units.
pub fn balance_operator_check<R: Real>(scn: &Scenario<R>, t: R, quad_tol: R) -> Result<R> {
    let lhs_op = reservoir_relative_modular(scn, t);
    let delta_eta = reservoir_relative_modular(scn, R::zero());
    let phi_r = scn.fluxes().phi_r;
    let integral = integrate(|s| scn.evolve(&phi_r, s), R::zero(), t, quad_tol)?.value;
    let kick = integral.scale_re(scn.beta());
    let mut worst = R::zero();
    for e in HSVector::basis(scn.dim()) {
        let lhs = lhs_op.log_apply(&e)?;
        let rhs = &delta_eta.log_apply(&e)? + &e.left_mul(&kick);
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    Ok(worst)
}

/// Residuals of the half-line identity
/// `F(is + ½) = ⟨e^{iβsL̂}Ω̂, e^{itL_λ} e^{iβsL̂} Ω_η⟩` for both forms of `Ω̂`.
#[derive(Clone, Copy, Debug)]
pub struct LemmaResidual<R> {
    /// `Ω̂ = π(ρ_S^{1/2} ⊗ 1)Ω`.
    pub left: R,
    /// `Ω̂ = JRJΩ`.
    pub commutant: R,
}

pub fn lemma_half_line_check<R: Real>(scn: &Scenario<R>, t: R, s: R) -> LemmaResidual<R> {
    let f = reservoir_char_unchecked(scn, t, cx(R::lit(0.5), s));
    let l = Liouvilleans::new(scn);
    let bs = scn.beta() * s;
    let right = l.evolve_lambda(t, &l.evolve_hat(bs, &scn.omega_eta()));
    let side = |hat: HSVector<R>| cabs(l.evolve_hat(bs, &hat).inner(&right) - f);
    LemmaResidual { left: side(scn.omega_hat_left()), commutant: side(scn.omega_hat_commutant()) }
}

#[derive(Clone, Debug)]
pub struct StripReport<R> {
    /// `min over grid of (1 + (d_S − 1) Re α) − |F(α)|`.
    pub min_slack: R,
    pub violations: usize,
    /// `F(1)`, real and in `[0, d_S]`.
    pub f_one: Cx<R>,
    pub points: usize,
}

/// Checks `|F(α)| ≤ 1 + (d_S − 1) Re α` on the grid and `F(1) ≤ d_S`.
pub fn strip_bounds_check<R: Real>(scn: &Scenario<R>, t: R, alphas: &[Cx<R>]) -> Result<StripReport<R>> {
    for &a in alphas {
        check_strip(a)?;
    }
    let ds = R::from_usize(scn.dim_s()).unwrap();
    let slack_tol = R::tol(1e-10);
    let mut min_slack = R::max_value().unwrap();
    let mut violations = 0;
    for &a in alphas {
        let v = reservoir_char_unchecked(scn, t, a);
        let slack = R::one() + (ds - R::one()) * a.re - cabs(v);
        if slack < -slack_tol {
            violations += 1;
        }
        min_slack = min_slack.min(slack);
    }
    let f_one = reservoir_char_unchecked(scn, t, Cx::new(R::one(), R::zero()));
    if f_one.re > ds + slack_tol {
        violations += 1;
    }
    Ok(StripReport { min_slack, violations, f_one, points: alphas.len() })
}

/// One cell of the limit sweep.
#[derive(Clone, Debug)]
pub struct SweepRow<R> {
    pub lambda: R,
    pub t: R,
    /// `max_γ |F(iγ/β) − tr(ρ_β e^{iγH_S}) tr(ρ_S e^{−iγH_S})|`.
    pub distance: R,
    pub mean_r: R,
    pub mean_s: R,
    /// Atom moments of orders 1..=4 of the reservoir measure.
    pub moments: Vec<R>,
    /// The same moments from contour derivatives of `F`.
    pub derivative_moments: Vec<R>,
}

impl<R: Real> SweepRow<R> {
    /// `max_k |m_k − m_k'| / max(1, |m_k|)`.
    pub fn moment_residual(&self) -> R {
        self.moments
            .iter()
            .zip(&self.derivative_moments)
            .fold(R::zero(), |m, (&a, &b)| m.max((a - b).abs() / a.abs().max(R::one())))
    }
}

#[derive(Clone, Debug)]
pub struct Verdict<R> {
    pub lambda: R,
    /// Distance at `t = 0`, where `F ≡ 1`.
    pub baseline: R,
    /// Mean distance over grid times in the plateau window, if any.
    pub plateau: Option<R>,
    pub converging: bool,
}

#[derive(Clone, Debug)]
pub struct SweepResult<R> {
    pub rows: Vec<SweepRow<R>>,
    pub verdicts: Vec<Verdict<R>>,
}

#[derive(Clone, Debug)]
pub struct SweepOptions<R> {
    pub plateau: (R, R),
    pub cluster_tol: R,
    pub workers: usize,
}

impl<R: Real> Default for SweepOptions<R> {
    fn default() -> Self {
        Self { plateau: (R::lit(10.0), R::lit(30.0)), cluster_tol: R::lit(DEFAULT_CLUSTER_TOL), workers: 1 }
    }
}

/// `max_γ |1 − limit(γ)|`, the distance of `δ_0`.
pub fn baseline_distance<R: Real>(scn: &Scenario<R>, gammas: &[R]) -> R {
    gammas
        .iter()
        .fold(R::zero(), |m, &g| m.max(cabs(Cx::new(R::one(), R::zero()) - system_char_limit(scn, g))))
}

fn sweep_cell<R: Real>(scn: &Scenario<R>, t: R, gammas: &[R], cluster_tol: R) -> Result<SweepRow<R>> {
    let f = strip_function(scn, t);
    let distance = gammas.iter().fold(R::zero(), |m, &g| m.max(cabs(f.char_at(g) - system_char_limit(scn, g))));
    let res = reservoir_fcs_from(&f, cluster_tol, &[])?;
    let sys = system_fcs(scn, t, cluster_tol, &[])?;
    Ok(SweepRow {
        lambda: scn.lambda(),
        t,
        distance,
        mean_r: res.mean,
        mean_s: sys.mean,
        moments: res.moments,
        derivative_moments: f.derivative_moments(),
    })
}

/// Evaluates every `(λ, t)` cell of the grid, in parallel on `workers`
/// threads; rows come back in grid order (λ outer, t inner) regardless of
/// scheduling.
pub fn limit_sweep<R: Real>(
    base: &Scenario<R>,
    t_grid: &[R],
    lambda_grid: &[R],
    gammas: &[R],
    options: &SweepOptions<R>,
) -> Result<SweepResult<R>> {
    if t_grid.is_empty() || lambda_grid.is_empty() || gammas.is_empty() {
        return Err(Error::OutOfDomain("sweep grids must be nonempty".into()));
    }
    if options.workers == 0 {
        return Err(Error::OutOfDomain("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::Config { field: "workers".into(), message: e.to_string() })?;
    let scenarios: Vec<Scenario<R>> = pool.install(|| {
        lambda_grid.par_iter().map(|&l| base.with_lambda(l)).collect::<Result<Vec<_>>>()
    })?;
    let cells: Vec<(usize, R)> = (0..lambda_grid.len()).flat_map(|i| t_grid.iter().map(move |&t| (i, t))).collect();
    let rows: Vec<SweepRow<R>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, t)| sweep_cell(&scenarios[i], t, gammas, options.cluster_tol))
            .collect::<Result<Vec<_>>>()
    })?;
    let (lo, hi) = options.plateau;
    let verdicts = scenarios
        .iter()
        .enumerate()
        .map(|(i, scn)| {
            let baseline = baseline_distance(scn, gammas);
            let window: Vec<R> = rows[i * t_grid.len()..(i + 1) * t_grid.len()]
                .iter()
                .filter(|r| r.t >= lo && r.t <= hi)
                .map(|r| r.distance)
                .collect();
            let plateau = if window.is_empty() {
                None
            } else {
                Some(window.iter().fold(R::zero(), |s, &d| s + d) / R::from_usize(window.len()).unwrap())
            };
            Verdict { lambda: lambda_grid[i], baseline, plateau, converging: plateau.is_some_and(|p| p < baseline) }
        })
        .collect();
    Ok(SweepResult { rows, verdicts })
}

/// Overlap weights `|M_ij|²` as a matrix, for callers that need the raw
/// spectral resolution.
pub fn overlap_weights<R: Real>(scn: &Scenario<R>, t: R) -> DMatrix<R> {
    let rel = reservoir_relative_modular(scn, t);
    rel.overlaps(&scn.omega_vector()).map(|z| z.norm_sqr())
}
