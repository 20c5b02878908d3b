//! Seeded random operators for checks and test scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::Operator;
use crate::scalar::{cx, Real};
use crate::states::DensityMatrix;

/// The generator used throughout; reproducible per seed on every platform.
pub type CheckRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CheckRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Real>(rng: &mut impl Rng) -> R {
    let x: f64 = rng.sample(StandardNormal);
    R::lit(x)
}

/// Matrix with i.i.d. complex standard normal entries (variance 1 per
/// component).
pub fn ginibre<R: Real>(dim: usize, rng: &mut impl Rng) -> Operator<R> {
    Operator::from_fn(dim, |_, _| {
        let a = normal::<R>(rng);
        let b = normal::<R>(rng);
        cx(a, b)
    })
}

/// `(G + G*)/2` for Ginibre `G`.
pub fn hermitian<R: Real>(dim: usize, rng: &mut impl Rng) -> Operator<R> {
    ginibre(dim, rng).hermitian_part()
}

/// `GG*/tr(GG*)`: full rank with probability one.
pub fn density<R: Real>(dim: usize, rng: &mut impl Rng) -> DensityMatrix<R> {
    let g = ginibre::<R>(dim, rng);
    let p = (&g * &g.adjoint()).hermitian_part();
    let tr = p.trace().re;
    DensityMatrix::new(p.scale_re(R::one() / tr)).expect("Wishart sample is a valid state")
}

/// Density matrix diagonal in the eigenbasis of `h` with random weights.
pub fn density_commuting<R: Real>(h: &Operator<R>, rng: &mut impl Rng) -> DensityMatrix<R> {
    let eig = crate::spectral::HermitianEigen::new(h).expect("Hermitian");
    let w: Vec<f64> = (0..h.dim()).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = w.iter().sum();
    let weights: Vec<_> = w.iter().map(|x| crate::scalar::re(R::lit(x / total))).collect();
    DensityMatrix::new(eig.recompose(&weights).hermitian_part()).expect("valid state")
}
