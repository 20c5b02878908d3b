//! The standard (Hilbert–Schmidt) representation and its modular data.
//!
//! Vectors are `d×d` matrices with `⟨X, Y⟩ = tr(X*Y)`; the algebra acts by
//! left multiplication and the commutant by right multiplication. All
//! superoperators act directly on matrices at `O(d³)` per application.

use std::ops::{Add, Sub};

use nalgebra::DMatrix;

use crate::dynamics::Scenario;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::scalar::{cabs, cexp, cis, re, Cx, Real};
use crate::spectral::{clamped_values, positive_sqrt, HermitianEigen, PositiveSpectrum};
use crate::states::{gibbs_from_eigen, DensityMatrix};

/// Default rank tolerance for reference states.
pub const RANK_TOL: f64 = 1e-12;

/// A vector of the Hilbert–Schmidt space.
#[derive(Clone, Debug, PartialEq)]
pub struct HSVector<R: Real> {
    mat: Operator<R>,
}

impl<R: Real> HSVector<R> {
    pub fn new(mat: Operator<R>) -> Self {
        Self { mat }
    }

    pub fn mat(&self) -> &Operator<R> {
        &self.mat
    }

    pub fn into_mat(self) -> Operator<R> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    /// `tr(X*Y)`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Cx<R> {
        self.mat.hs_inner(&other.mat)
    }

    pub fn norm(&self) -> R {
        self.mat.hs_norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > R::zero()) {
            return Err(Error::InvalidState("cannot normalize the zero vector".into()));
        }
        Ok(Self { mat: self.mat.scale_re(R::one() / n) })
    }

    pub fn scale(&self, z: Cx<R>) -> Self {
        Self { mat: self.mat.scale(z) }
    }

    /// `AX`.
    pub fn left_mul(&self, a: &Operator<R>) -> Self {
        Self { mat: a * &self.mat }
    }

    /// `XB`.
    pub fn right_mul(&self, b: &Operator<R>) -> Self {
        Self { mat: &self.mat * b }
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.mat.max_abs_diff(&other.mat)
    }

    /// Matrix units `E_kl`, an orthonormal basis of the space.
    pub fn basis(dim: usize) -> impl Iterator<Item = Self> {
        (0..dim * dim).map(move |idx| {
            let (k, l) = (idx / dim, idx % dim);
            Self::new(Operator::from_fn(dim, |i, j| if i == k && j == l { Cx::new(R::one(), R::zero()) } else { Cx::new(R::zero(), R::zero()) }))
        })
    }
}

impl<R: Real> Add for &HSVector<R> {
    type Output = HSVector<R>;
    fn add(self, rhs: Self) -> HSVector<R> {
        HSVector { mat: &self.mat + &rhs.mat }
    }
}

impl<R: Real> Sub for &HSVector<R> {
    type Output = HSVector<R>;
    fn sub(self, rhs: Self) -> HSVector<R> {
        HSVector { mat: &self.mat - &rhs.mat }
    }
}

/// `π(A)X = AX`.
pub fn pi<R: Real>(a: &Operator<R>, x: &HSVector<R>) -> HSVector<R> {
    x.left_mul(a)
}

/// `J π(A) J X = XA*`, the commutant image of `A`.
pub fn commutant<R: Real>(a: &Operator<R>, x: &HSVector<R>) -> HSVector<R> {
    x.right_mul(&a.adjoint())
}

/// The standard representation of `(M_d, ρ)`: `π(A) = A·`, `Ω = ρ^{1/2}`.
#[derive(Clone, Debug)]
pub struct StandardGns<R: Real> {
    omega: HSVector<R>,
}

impl<R: Real> StandardGns<R> {
    pub fn omega(&self) -> &HSVector<R> {
        &self.omega
    }

    pub fn represent(&self, a: &Operator<R>, x: &HSVector<R>) -> HSVector<R> {
        pi(a, x)
    }

    /// `⟨Ω, π(A)Ω⟩`.
    pub fn expect(&self, a: &Operator<R>) -> Cx<R> {
        self.omega.inner(&pi(a, &self.omega))
    }
}

pub fn standard_gns<R: Real>(rho: &DensityMatrix<R>) -> Result<StandardGns<R>> {
    Ok(StandardGns { omega: HSVector::new(positive_sqrt(rho.op())?) })
}

/// `Δ_{η|ω} X = ρ_η X ρ_ω^{−1}` with `ρ_ω` full rank and `ρ_η` positive
/// semidefinite (a weight; normalization is not required).
#[derive(Clone, Debug)]
pub struct RelativeModular<R: Real> {
    eta: HermitianEigen<R>,
    eta_values: Vec<R>,
    eta_logs: Option<Vec<R>>,
    omega: PositiveSpectrum<R>,
}

/// One eigen-pair of a relative modular operator restricted to a vector:
/// `log μ_i − log ν_j` and `|⟨u_i, X w_j⟩|²`.
#[derive(Clone, Copy, Debug)]
pub struct SpectralWeight<R> {
    pub log_eigenvalue: R,
    pub weight: R,
}

impl<R: Real> RelativeModular<R> {
    pub fn new(rho_eta: &Operator<R>, rho_omega: &Operator<R>, rank_tol: R) -> Result<Self> {
        if rho_eta.dim() != rho_omega.dim() {
            return Err(Error::Shape(format!("dims {} and {} differ", rho_eta.dim(), rho_omega.dim())));
        }
        let omega = PositiveSpectrum::new(rho_omega, rank_tol)?;
        let eta = HermitianEigen::new(rho_eta)?;
        let eta_values = clamped_values(&eta)?;
        let eta_logs = if eta_values.iter().all(|&v| v > rank_tol) {
            Some(eta_values.iter().map(|v| v.ln()).collect())
        } else {
            None
        };
        Ok(Self { eta, eta_values, eta_logs, omega })
    }

    /// Builds from two spectra known in closed form.
    pub(crate) fn from_spectra(eta: PositiveSpectrum<R>, omega: PositiveSpectrum<R>) -> Self {
        let eta_values = eta.eigen().values().to_vec();
        let eta_logs = Some(eta.log_values().to_vec());
        Self { eta: eta.eigen().clone(), eta_values, eta_logs, omega }
    }

    pub fn dim(&self) -> usize {
        self.eta.dim()
    }

    fn eta_power(&self, alpha: Cx<R>) -> Result<Operator<R>> {
        let zero = Cx::new(R::zero(), R::zero());
        let mut w = Vec::with_capacity(self.eta_values.len());
        for (k, &v) in self.eta_values.iter().enumerate() {
            w.push(match &self.eta_logs {
                Some(logs) => cexp(alpha * re(logs[k])),
                None if v > R::zero() => cexp(alpha * re(v.ln())),
                None if alpha == zero => Cx::new(R::one(), R::zero()),
                None if alpha.re > R::zero() => zero,
                None => return Err(Error::Domain { eigenvalue: 0.0 }),
            });
        }
        Ok(self.eta.recompose(&w))
    }

    pub fn apply(&self, x: &HSVector<R>) -> HSVector<R> {
        let eta = self.eta.recompose(&self.eta_values.iter().map(|&v| re(v)).collect::<Vec<_>>());
        x.left_mul(&eta).right_mul(&self.omega.inverse())
    }

    /// `Δ^α X = ρ_η^α X ρ_ω^{−α}`.
    pub fn power(&self, alpha: Cx<R>, x: &HSVector<R>) -> Result<HSVector<R>> {
        Ok(x.left_mul(&self.eta_power(alpha)?).right_mul(&self.omega.power(-alpha)))
    }

    /// `log Δ X = (log ρ_η) X − X log ρ_ω`; needs `ρ_η` full rank.
    pub fn log_apply(&self, x: &HSVector<R>) -> Result<HSVector<R>> {
        let logs = self.eta_logs.as_ref().ok_or_else(|| Error::RankDeficient { min_eigenvalue: self.eta.min().as_f64() })?;
        let log_eta = self.eta.recompose(&logs.iter().map(|&l| re(l)).collect::<Vec<_>>());
        let lx = x.left_mul(&log_eta);
        Ok(&lx - &x.right_mul(&self.omega.log()))
    }

    /// Overlap matrix `M = U_η* X U_ω` of `X` with the eigenbasis
    /// `|u_i⟩⟨w_j|` of `Δ`.
    pub fn overlaps(&self, x: &HSVector<R>) -> DMatrix<Cx<R>> {
        self.eta.vectors().adjoint() * x.mat().matrix() * self.omega.eigen().vectors()
    }

    /// Spectral resolution of `Δ` against `X`: all `d²` eigenvalue logs with
    /// weights `‖Q X‖²`.
    pub fn spectral_weights(&self, x: &HSVector<R>) -> Result<Vec<SpectralWeight<R>>> {
        let logs = self.eta_logs.as_ref().ok_or_else(|| Error::RankDeficient { min_eigenvalue: self.eta.min().as_f64() })?;
        let m = self.overlaps(x);
        let nu = self.omega.log_values();
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = m[(i, j)];
                out.push(SpectralWeight { log_eigenvalue: logs[i] - nu[j], weight: z.norm_sqr() });
            }
        }
        Ok(out)
    }

    pub fn eta_log_values(&self) -> Option<&[R]> {
        self.eta_logs.as_deref()
    }

    pub fn omega_spectrum(&self) -> &PositiveSpectrum<R> {
        &self.omega
    }
}

pub fn relative_modular<R: Real>(rho_eta: &Operator<R>, rho_omega: &Operator<R>) -> Result<RelativeModular<R>> {
    RelativeModular::new(rho_eta, rho_omega, R::tol(RANK_TOL))
}

/// Modular data of a faithful state in its standard representation:
/// `Δ X = ρXρ^{−1}`, `J X = X*`, `S = JΔ^{1/2}`, `F = S*`.
#[derive(Clone, Debug)]
pub struct ModularStructure<R: Real> {
    rel: RelativeModular<R>,
    omega: HSVector<R>,
    sqrt: Operator<R>,
    inv_sqrt: Operator<R>,
}

impl<R: Real> ModularStructure<R> {
    pub fn new(rho_ref: &Operator<R>, rank_tol: R) -> Result<Self> {
        let rel = RelativeModular::new(rho_ref, rho_ref, rank_tol)?;
        let half = re(R::lit(0.5));
        let sqrt = rel.omega.power(half);
        let inv_sqrt = rel.omega.power(-half);
        Ok(Self { omega: HSVector::new(sqrt.clone()), rel, sqrt, inv_sqrt })
    }

    /// `Ω = ρ^{1/2}`.
    pub fn omega(&self) -> &HSVector<R> {
        &self.omega
    }

    pub fn relative(&self) -> &RelativeModular<R> {
        &self.rel
    }

    pub fn j(&self, x: &HSVector<R>) -> HSVector<R> {
        HSVector::new(x.mat().adjoint())
    }

    pub fn delta(&self, x: &HSVector<R>) -> HSVector<R> {
        self.rel.apply(x)
    }

    pub fn delta_power(&self, alpha: Cx<R>, x: &HSVector<R>) -> HSVector<R> {
        self.rel.power(alpha, x).expect("reference is full rank")
    }

    pub fn log_delta(&self, x: &HSVector<R>) -> HSVector<R> {
        self.rel.log_apply(x).expect("reference is full rank")
    }

    /// `S X = ρ^{−1/2} X* ρ^{1/2}`, so that `S(AΩ) = A*Ω`.
    pub fn s(&self, x: &HSVector<R>) -> HSVector<R> {
        HSVector::new(&(&self.inv_sqrt * &x.mat().adjoint()) * &self.sqrt)
    }

    /// `F X = ρ^{1/2} X* ρ^{−1/2}`, the adjoint of `S`.
    pub fn f(&self, x: &HSVector<R>) -> HSVector<R> {
        HSVector::new(&(&self.sqrt * &x.mat().adjoint()) * &self.inv_sqrt)
    }
}

pub fn modular_pair<R: Real>(rho_ref: &Operator<R>) -> Result<ModularStructure<R>> {
    ModularStructure::new(rho_ref, R::tol(RANK_TOL))
}

/// Membership in the natural cone, which in the standard representation is
/// the set of positive semidefinite matrices.
pub fn cone_membership<R: Real>(x: &HSVector<R>, tol: R) -> bool {
    let m = x.mat();
    let scale = m.hs_norm().max(R::one());
    if m.asymmetry() > tol * scale {
        return false;
    }
    HermitianEigen::new_unchecked(m).min() >= -tol * scale
}

/// The scenario's distinguished vectors.
impl<R: Real> Scenario<R> {
    /// `ρ_R^{1/2}`.
    pub fn rho_r_sqrt(&self) -> Operator<R> {
        positive_sqrt(self.rho_r().op()).expect("Gibbs state is positive")
    }

    /// `Ω = ρ_S^{1/2} ⊗ ρ_R^{1/2}`.
    pub fn omega_vector(&self) -> HSVector<R> {
        let s = positive_sqrt(self.rho_s().op()).expect("state is positive");
        HSVector::new(s.tensor(&self.rho_r_sqrt()))
    }

    /// `Ω_η = 1 ⊗ ρ_R^{1/2}`, norm² = `d_S`.
    pub fn omega_eta(&self) -> HSVector<R> {
        HSVector::new(Operator::identity(self.dim_s()).tensor(&self.rho_r_sqrt()))
    }

    /// `Ω_eq = (ρ_β ⊗ ρ_R)^{1/2}`.
    pub fn omega_eq_vector(&self) -> HSVector<R> {
        HSVector::new(positive_sqrt(self.omega_eq().op()).expect("Gibbs state is positive"))
    }

    /// `Ω̂ = π(ρ_S^{1/2} ⊗ 1)Ω`.
    pub fn omega_hat_left(&self) -> HSVector<R> {
        let r = positive_sqrt(self.rho_s().op()).expect("state is positive").tensor(&Operator::identity(self.dim_r()));
        pi(&r, &self.omega_vector())
    }

    /// `Ω̂ = JRJΩ = ΩR` with `R = ρ_S^{1/2} ⊗ 1`.
    pub fn omega_hat_commutant(&self) -> HSVector<R> {
        let r = positive_sqrt(self.rho_s().op()).expect("state is positive").tensor(&Operator::identity(self.dim_r()));
        commutant(&r, &self.omega_vector())
    }

    /// `η = 1 ⊗ ρ_R` as a weight on the full space.
    pub fn rho_eta(&self) -> Operator<R> {
        Operator::identity(self.dim_s()).tensor(self.rho_r().op())
    }
}

/// The standard Liouvilleans of a scenario.
pub struct Liouvilleans<'a, R: Real> {
    scn: &'a Scenario<R>,
}

impl<'a, R: Real> Liouvilleans<'a, R> {
    pub fn new(scn: &'a Scenario<R>) -> Self {
        Self { scn }
    }

    /// `L_0 X = H_0X − XH_0`.
    pub fn l0(&self, x: &HSVector<R>) -> HSVector<R> {
        HSVector::new(self.scn.h0().commutator(x.mat()))
    }

    /// `L_λ X = H_λX − XH_λ`.
    pub fn l_lambda(&self, x: &HSVector<R>) -> HSVector<R> {
        HSVector::new(self.scn.h_lambda().commutator(x.mat()))
    }

    /// `L̂_λ X = (H_S⊗1 + λV)X + (1⊗H_R)X − X(1⊗H_R)`.
    pub fn l_hat(&self, x: &HSVector<R>) -> HSVector<R> {
        let left = self.scn.h_s_full() + &self.scn.v().scale_re(self.scn.lambda());
        let a = x.left_mul(&left);
        let b = HSVector::new(self.scn.h_r_full().commutator(x.mat()));
        &a + &b
    }

    /// `(L_0 + λπ(V) − λJπ(V)J) X`.
    pub fn l_lambda_modular(&self, x: &HSVector<R>) -> HSVector<R> {
        let lv = re(self.scn.lambda());
        let a = &self.l0(x) + &pi(self.scn.v(), x).scale(lv);
        &a - &commutant(self.scn.v(), x).scale(lv)
    }

    /// `(L_0 + λπ(V)) X = H_λX − XH_0`.
    pub fn l_perturbed(&self, x: &HSVector<R>) -> HSVector<R> {
        &x.left_mul(self.scn.h_lambda()) - &x.right_mul(self.scn.h0())
    }

    /// `e^{itL_0} X`.
    pub fn evolve_0(&self, t: R, x: &HSVector<R>) -> HSVector<R> {
        HSVector::new(self.scn.evolve_free(x.mat(), t))
    }

    /// `e^{itL_λ} X`.
    pub fn evolve_lambda(&self, t: R, x: &HSVector<R>) -> HSVector<R> {
        HSVector::new(self.scn.evolve(x.mat(), t))
    }

    /// `e^{isL̂_λ} X = e^{isH_λ} X (1 ⊗ e^{−isH_R})`.
    pub fn evolve_hat(&self, s: R, x: &HSVector<R>) -> HSVector<R> {
        let right = Operator::identity(self.scn.dim_s()).tensor(&self.scn.eig_r().unitary(-s));
        x.left_mul(&self.scn.eig_lambda().unitary(s)).right_mul(&right)
    }

    /// `e^{it(L_0 + λπ(V))} X = e^{itH_λ} X e^{−itH_0}`.
    pub fn evolve_perturbed(&self, t: R, x: &HSVector<R>) -> HSVector<R> {
        x.left_mul(&self.scn.eig_lambda().unitary(t)).right_mul(&self.scn.eig_0().unitary(-t))
    }
}

/// The Araki vector `e^{−β(L_0+λπ(V))/2}Ω_eq / ‖·‖`, the cone
/// representative of the coupled equilibrium.
pub fn araki_vector<R: Real>(scn: &Scenario<R>) -> HSVector<R> {
    let half = scn.beta() / R::lit(2.0);
    let left = scn.eig_lambda().exp_real(-half, scn.eig_lambda().min());
    // Ω_eq e^{βH_0/2}, composed in the eigenbasis of H_0
    let e0 = scn.eig_0();
    let (lo, hi) = (e0.min(), e0.max());
    let w: Vec<Cx<R>> = e0.values().iter().map(|&e| re((-half * (e - lo)).exp() * (half * (e - hi)).exp())).collect();
    let v = HSVector::new(e0.recompose(&w)).left_mul(&left);
    let v = HSVector::new(v.mat().hermitian_part());
    v.normalized().expect("Araki vector is nonzero")
}

/// `gibbs(H_λ, β)^{1/2}`, the closed form of the Araki vector.
pub fn coupled_gibbs_sqrt<R: Real>(scn: &Scenario<R>) -> HSVector<R> {
    let g = gibbs_from_eigen(scn.eig_lambda(), scn.beta());
    HSVector::new(positive_sqrt(g.op()).expect("Gibbs state is positive"))
}

/// The cocycle `Γ_λ(t) = e^{it(L_0+λπ(V))}e^{−itL_0}`, which acts as left
/// multiplication by `W = e^{itH_λ}e^{−itH_0}`.
#[derive(Clone, Debug)]
pub struct Cocycle<R: Real> {
    pub t: R,
    pub w: Operator<R>,
}

impl<R: Real> Cocycle<R> {
    /// `Γ X` through the superoperator definition.
    pub fn apply(&self, scn: &Scenario<R>, x: &HSVector<R>) -> HSVector<R> {
        let l = Liouvilleans::new(scn);
        l.evolve_perturbed(self.t, &l.evolve_0(-self.t, x))
    }

    /// `max_kl |Γ E_kl − W E_kl|` over the matrix-unit basis.
    pub fn left_multiplication_residual(&self, scn: &Scenario<R>) -> R {
        HSVector::basis(scn.dim()).fold(R::zero(), |m, e| {
            m.max(self.apply(scn, &e).max_abs_diff(&e.left_mul(&self.w)))
        })
    }

    /// Relative residual of `Δ_{η∘τ^{−t}|η} = Γ Δ_η Γ*` over the basis.
    pub fn identity_residual(&self, scn: &Scenario<R>) -> Result<R> {
        let rho_eta = scn.rho_eta();
        let rho_t = scn.evolve(&rho_eta, self.t);
        let lhs_op = relative_modular(&rho_t, &rho_eta)?;
        let delta_eta = relative_modular(&rho_eta, &rho_eta)?;
        let w_adj = self.w.adjoint();
        let mut worst = R::zero();
        for e in HSVector::basis(scn.dim()) {
            let lhs = lhs_op.apply(&e);
            let rhs = delta_eta.apply(&e.left_mul(&w_adj)).left_mul(&self.w);
            let r = lhs.max_abs_diff(&rhs) / cabs_max(lhs.mat()).max(R::one());
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

fn cabs_max<R: Real>(a: &Operator<R>) -> R {
    a.matrix().iter().fold(R::zero(), |m, z| m.max(cabs(*z)))
}

pub fn cocycle<R: Real>(scn: &Scenario<R>, t: R) -> Cocycle<R> {
    Cocycle { t, w: crate::dynamics::exact_cocycle(scn, t) }
}

#[derive(Clone, Debug)]
pub struct KoopmanReport<R> {
    /// `max_kl |avg_t ⟨X_k, e^{itL_λ}X_l⟩ − ⟨X_k,Ω_λ⟩⟨Ω_λ,X_l⟩|`.
    pub distance: R,
    pub window: (R, R),
    pub grid: usize,
    pub test_vectors: usize,
    /// Raised when the distance exceeds [`KOOPMAN_MIXING_THRESHOLD`].
    pub non_mixing: bool,
}

pub const KOOPMAN_MIXING_THRESHOLD: f64 = 0.1;

/// Compares the time average of `e^{itL_λ}` over `grid` equally spaced
/// times in `window` with the projector onto the Araki vector `Ω_λ`, on the
/// test vectors `π(E_ab ⊗ 1)Ω_λ` (normalized).
pub fn koopman_diagnostic<R: Real>(scn: &Scenario<R>, window: (R, R), grid: usize) -> Result<KoopmanReport<R>> {
    let (t0, t1) = window;
    if grid < 2 {
        return Err(Error::OutOfDomain(format!("grid must be at least 2, got {}", grid)));
    }
    if !t0.finite() || !t1.finite() || t1 < t0 {
        return Err(Error::OutOfDomain("window must be finite with t0 ≤ t1".into()));
    }
    let omega = araki_vector(scn);
    let (ds, dr) = (scn.dim_s(), scn.dim_r());
    let eig = scn.eig_lambda();
    let d = scn.dim();
    let mut vectors = Vec::new();
    for a in 0..ds {
        for b in 0..ds {
            let mut e = Operator::zeros(ds);
            e.matrix_mut()[(a, b)] = Cx::new(R::one(), R::zero());
            let x = pi(&e.tensor(&Operator::identity(dr)), &omega);
            if let Ok(x) = x.normalized() {
                vectors.push(x);
            }
        }
    }
    let in_basis: Vec<Operator<R>> = vectors.iter().map(|x| eig.to_eigenbasis(x.mat())).collect();
    // averaged phases e^{it(E_i − E_j)}
    let steps = R::from_usize(grid - 1).unwrap();
    let mut avg = DMatrix::from_element(d, d, Cx::new(R::zero(), R::zero()));
    for k in 0..grid {
        let t = t0 + (t1 - t0) * R::from_usize(k).unwrap() / steps;
        let ph: Vec<Cx<R>> = eig.values().iter().map(|&e| cis(t * e)).collect();
        for i in 0..d {
            for j in 0..d {
                avg[(i, j)] += ph[i] * ph[j].conj();
            }
        }
    }
    let inv = R::one() / R::from_usize(grid).unwrap();
    avg.iter_mut().for_each(|z| *z = z.scale(inv));

    let proj: Vec<Cx<R>> = vectors.iter().map(|x| omega.inner(x)).collect();
    let mut distance = R::zero();
    for (k, xk) in in_basis.iter().enumerate() {
        for (l, xl) in in_basis.iter().enumerate() {
            let mut acc = Cx::new(R::zero(), R::zero());
            for i in 0..d {
                for j in 0..d {
                    acc += xk.get(i, j).conj() * xl.get(i, j) * avg[(i, j)];
                }
            }
            let target = proj[k].conj() * proj[l];
            distance = distance.max(cabs(acc - target));
        }
    }
    Ok(KoopmanReport {
        distance,
        window,
        grid,
        test_vectors: vectors.len(),
        non_mixing: distance > R::lit(KOOPMAN_MIXING_THRESHOLD),
    })
}
