//! Bundled model families: a transverse-field spin-chain reservoir, the
//! canonical qubit pair, and seeded random scenarios.

use rand::Rng;

use crate::dynamics::Scenario;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::random;
use crate::scalar::Real;
use crate::states::DensityMatrix;

pub const MAX_CHAIN_SITES: usize = 12;
/// Working matrices kept alive per scenario, used for the memory estimate.
const WORKING_MATRICES: u128 = 8;

/// Rough memory footprint of a scenario with a qubit system and an
/// `n`-site chain.
pub fn chain_memory_estimate(n: usize) -> u128 {
    let d = 2u128.checked_pow(n as u32 + 1).unwrap_or(u128::MAX / 1024);
    d.saturating_mul(d).saturating_mul(16).saturating_mul(WORKING_MATRICES)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainParams {
    pub n: usize,
    /// Nearest-neighbour `σ_xσ_x` coupling.
    pub coupling: f64,
    /// Uniform transverse field on `σ_z`.
    pub field: f64,
    /// Half-width of the seeded on-site field disorder.
    pub disorder: f64,
    pub seed: u64,
}

impl Default for ChainParams {
    fn default() -> Self {
        Self { n: 6, coupling: 0.25, field: 0.5, disorder: 0.0, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct ChainReservoir<R: Real> {
    pub h_r: Operator<R>,
    /// `σ_x` on the edge site, through which the system couples.
    pub edge: Operator<R>,
}

/// `A` acting on `site` of an `n`-site chain.
fn site_operator<R: Real>(a: &Operator<R>, site: usize, n: usize) -> Operator<R> {
    let mut out = Operator::identity(1);
    for k in 0..n {
        out = if k == site { out.tensor(a) } else { out.tensor(&Operator::identity(2)) };
    }
    out
}

/// `H_R = Σ_i (h + δ_i) σ_z^i + J Σ_i σ_x^i σ_x^{i+1}` on `n` sites, with
/// `δ_i` uniform in `[−disorder, disorder]` drawn from `seed`.
pub fn build_chain_reservoir<R: Real>(p: &ChainParams) -> Result<ChainReservoir<R>> {
    if p.n == 0 || p.n > MAX_CHAIN_SITES {
        return Err(Error::ReservoirTooLarge { n: p.n, bytes: chain_memory_estimate(p.n) });
    }
    if !p.coupling.is_finite() || !p.field.is_finite() || !p.disorder.is_finite() || p.disorder < 0.0 {
        return Err(Error::OutOfDomain("chain parameters must be finite with disorder ≥ 0".into()));
    }
    let mut rng = random::rng(p.seed);
    let (sx, sz) = (Operator::<R>::sigma_x(), Operator::<R>::sigma_z());
    let d = 1usize << p.n;
    let mut h = Operator::zeros(d);
    for i in 0..p.n {
        let delta = if p.disorder > 0.0 { rng.random_range(-p.disorder..=p.disorder) } else { 0.0 };
        h += &site_operator(&sz, i, p.n).scale_re(R::lit(p.field + delta));
    }
    if p.coupling != 0.0 {
        for i in 0..p.n - 1 {
            let bond = &site_operator(&sx, i, p.n) * &site_operator(&sx, i + 1, p.n);
            h += &bond.scale_re(R::lit(p.coupling));
        }
    }
    Ok(ChainReservoir { h_r: h, edge: site_operator(&sx, 0, p.n) })
}

/// Nearest-level hopping `Σ_k |k⟩⟨k+1| + h.c.`; `σ_x` for a qubit.
pub fn hopping<R: Real>(dim: usize) -> Operator<R> {
    Operator::from_fn(dim, |i, j| {
        if i + 1 == j || j + 1 == i {
            crate::scalar::re(R::one())
        } else {
            crate::scalar::re(R::zero())
        }
    })
}

/// Equally spaced levels `diag(0, 1, ..., d−1)`.
pub fn ladder<R: Real>(dim: usize) -> Operator<R> {
    let v: Vec<R> = (0..dim).map(|k| R::from_usize(k).unwrap()).collect();
    Operator::diag(&v)
}

/// Ground state `|0⟩⟨0|`.
pub fn ground_state<R: Real>(dim: usize) -> DensityMatrix<R> {
    let mut v = vec![R::zero(); dim];
    v[0] = R::one();
    DensityMatrix::new(Operator::diag(&v)).expect("projector is a state")
}

/// Qubit system `H_S = diag(0,1)` in `ρ_S = |0⟩⟨0|`, coupled by
/// `λ σ_x ⊗ σ_x(edge)` to a chain reservoir.
pub fn chain_scenario<R: Real>(p: &ChainParams, lambda: R, beta: R) -> Result<Scenario<R>> {
    let chain = build_chain_reservoir::<R>(p)?;
    let v = hopping::<R>(2).tensor(&chain.edge);
    Scenario::new(ladder(2), chain.h_r, v, lambda, beta, ground_state(2))
}

/// The canonical qubit ⊗ qubit example: a one-site chain with field ½ so the
/// reservoir gap matches the system gap.
pub fn qubit_pair<R: Real>(lambda: R, beta: R) -> Scenario<R> {
    chain_scenario(&ChainParams { n: 1, ..Default::default() }, lambda, beta).expect("one-site chain is valid")
}

/// Random Hamiltonians, coupling and initial state from Gaussian ensembles.
pub fn random_scenario<R: Real>(ds: usize, dr: usize, lambda: R, beta: R, seed: u64) -> Result<Scenario<R>> {
    let mut rng = random::rng(seed);
    let hs = random::hermitian(ds, &mut rng);
    let hr = random::hermitian(dr, &mut rng);
    let v = random::hermitian(ds * dr, &mut rng);
    let rho = random::density(ds, &mut rng);
    Scenario::new(hs, hr, v, lambda, beta, rho)
}

/// Like [`random_scenario`] with `ρ_S` diagonal in the eigenbasis of `H_S`.
pub fn random_scenario_commuting<R: Real>(ds: usize, dr: usize, lambda: R, beta: R, seed: u64) -> Result<Scenario<R>> {
    let mut rng = random::rng(seed);
    let hs = random::hermitian(ds, &mut rng);
    let hr = random::hermitian(dr, &mut rng);
    let v = random::hermitian(ds * dr, &mut rng);
    let rho = random::density_commuting(&hs, &mut rng);
    Scenario::new(hs, hr, v, lambda, beta, rho)
}
