//! Finite atomic measures on the real line.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{cis, re, Cx, Real};

/// Weights at or below this (or ten ulps, if larger) are dropped; weights
/// below its negative are an error.
pub const WEIGHT_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom<R: Real> {
    pub location: R,
    pub weight: R,
}

/// Point masses sorted by location, pairwise separated by more than
/// `merge_tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure<R: Real> {
    atoms: Vec<Atom<R>>,
    merge_tol: R,
}

impl<R: Real> AtomicMeasure<R> {
    /// Sorts the points, merges locations whose consecutive gaps are
    /// `≤ merge_tol` (weighted-mean location) and drops negligible weights.
    pub fn from_points(points: impl IntoIterator<Item = (R, R)>, merge_tol: R) -> Result<Self> {
        let floor = R::lit(WEIGHT_FLOOR).max(R::lit(10.0) * R::default_epsilon());
        let mut pts: Vec<(R, R)> = points.into_iter().collect();
        for &(x, w) in &pts {
            if !x.finite() || !w.finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom ({}, {})", x.as_f64(), w.as_f64())));
            }
            if w < -floor {
                return Err(Error::InvalidMeasure(format!("negative weight {:e} at {}", w.as_f64(), x.as_f64())));
            }
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut atoms: Vec<Atom<R>> = Vec::new();
        let mut group: Vec<(R, R)> = Vec::new();
        let flush = |group: &mut Vec<(R, R)>, atoms: &mut Vec<Atom<R>>| {
            if group.is_empty() {
                return;
            }
            let total = group.iter().fold(R::zero(), |a, p| a + p.1.max(R::zero()));
            let location = if total > R::zero() {
                group.iter().fold(R::zero(), |a, p| a + p.0 * p.1.max(R::zero())) / total
            } else {
                group.iter().fold(R::zero(), |a, p| a + p.0) / R::from_usize(group.len()).unwrap()
            };
            if total > floor {
                atoms.push(Atom { location, weight: total });
            }
            group.clear();
        };
        for p in pts {
            if let Some(last) = group.last() {
                if p.0 - last.0 > merge_tol {
                    flush(&mut group, &mut atoms);
                }
            }
            group.push(p);
        }
        flush(&mut group, &mut atoms);
        Ok(Self { atoms, merge_tol })
    }

    pub fn point_mass(location: R) -> Self {
        Self { atoms: vec![Atom { location, weight: R::one() }], merge_tol: R::zero() }
    }

    pub fn atoms(&self) -> &[Atom<R>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn merge_tol(&self) -> R {
        self.merge_tol
    }

    pub fn mass(&self) -> R {
        self.atoms.iter().fold(R::zero(), |a, at| a + at.weight)
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(R) -> R) -> R {
        self.atoms.iter().fold(R::zero(), |a, at| a + at.weight * f(at.location))
    }

    pub fn mean(&self) -> R {
        self.integrate(|x| x)
    }

    /// Raw moment `∫ x^k dμ`.
    pub fn moment(&self, k: u32) -> R {
        self.integrate(|x| x.powi(k as i32))
    }

    /// `∫ e^{iγx} dμ`.
    pub fn char_fn(&self, gamma: R) -> Cx<R> {
        self.atoms.iter().fold(Cx::zero(), |a, at| a + re(at.weight) * cis(gamma * at.location))
    }

    /// Weight within `tol` of `location` (zero when absent).
    pub fn weight_at(&self, location: R, tol: R) -> R {
        self.atoms
            .iter()
            .filter(|a| (a.location - location).abs() <= tol)
            .fold(R::zero(), |s, a| s + a.weight)
    }

    /// Largest atom-by-atom discrepancy: atoms are paired by location
    /// (within `match_tol`); paired atoms contribute `max(|Δx|, |Δw|)`,
    /// unpaired atoms contribute their weight.
    pub fn max_discrepancy(&self, other: &Self, match_tol: R) -> R {
        let (a, b) = (&self.atoms, &other.atoms);
        let (mut i, mut j) = (0, 0);
        let mut worst = R::zero();
        let mut bump = |v: R| {
            if v > worst {
                worst = v
            }
        };
        while i < a.len() || j < b.len() {
            if i < a.len() && j < b.len() && (a[i].location - b[j].location).abs() <= match_tol {
                bump((a[i].location - b[j].location).abs());
                bump((a[i].weight - b[j].weight).abs());
                i += 1;
                j += 1;
            } else if j >= b.len() || (i < a.len() && a[i].location < b[j].location) {
                bump(a[i].weight);
                i += 1;
            } else {
                bump(b[j].weight);
                j += 1;
            }
        }
        worst
    }

    /// Checks that the total mass is within `tol` of `expected`.
    pub fn ensure_mass(&self, expected: R, tol: R) -> Result<()> {
        let m = self.mass();
        if (m - expected).abs() <= tol {
            Ok(())
        } else {
            Err(Error::InvalidMeasure(format!("mass {} differs from {}", m.as_f64(), expected.as_f64())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_close_points_and_drops_zero_weights() {
        let m = AtomicMeasure::<f64>::from_points(vec![(1.0, 0.25), (0.0, 0.5), (1.0 + 1e-12, 0.25), (2.0, 0.0)], 1e-9)
            .unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.atoms()[1].weight - 0.5).abs() < 1e-15);
        assert!((m.mass() - 1.0).abs() < 1e-15);
        assert!((m.mean() - 0.5).abs() < 1e-11);
    }

    #[test]
    fn rejects_negative_weight() {
        assert!(AtomicMeasure::from_points(vec![(0.0, -0.1)], 1e-9).is_err());
    }

    #[test]
    fn char_fn_of_symmetric_measure_is_real() {
        let m = AtomicMeasure::<f64>::from_points(vec![(-1.0, 0.5), (1.0, 0.5)], 1e-9).unwrap();
        let z = m.char_fn(0.7);
        assert!((z.re - 0.7f64.cos()).abs() < 1e-15 && z.im.abs() < 1e-15);
    }

    #[test]
    fn discrepancy_pairs_atoms() {
        let a = AtomicMeasure::<f64>::from_points(vec![(0.0, 0.5), (1.0, 0.5)], 1e-9).unwrap();
        let b = AtomicMeasure::from_points(vec![(0.0, 0.5), (1.0 + 1e-12, 0.4), (3.0, 0.1)], 1e-9).unwrap();
        let d = a.max_discrepancy(&b, 1e-6);
        assert!((d - 0.1).abs() < 1e-12);
        assert_eq!(a.max_discrepancy(&a, 1e-9), 0.0);
    }
}
