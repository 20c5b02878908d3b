//! Scalar abstraction shared by every module.
//!
//! All numerics are written once against [`Real`]; `f64` is the working
//! precision and `f32` is supported with correspondingly looser tolerances.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Complex scalar built on a [`Real`].
pub type Cx<R> = Complex<R>;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// A tolerance of `x`, floored at a few thousand ulps of the type.
    ///
    /// For `f64` every tolerance used in this crate is above the floor, so
    /// the requested value comes back unchanged.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::lit(1000.0) * Self::default_epsilon();
        let v = Self::lit(x);
        if v > floor {
            v
        } else {
            floor
        }
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn finite(self) -> bool {
        self.as_f64().is_finite()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn cx<R: Real>(re: R, im: R) -> Cx<R> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<R: Real>(x: R) -> Cx<R> {
    Complex::new(x, R::zero())
}

/// `e^{iθ}`.
#[inline]
pub(crate) fn cis<R: Real>(theta: R) -> Cx<R> {
    Complex::new(theta.cos(), theta.sin())
}

/// `exp(z)` for complex `z`.
#[inline]
pub(crate) fn cexp<R: Real>(z: Cx<R>) -> Cx<R> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

#[inline]
pub(crate) fn cabs<R: Real>(z: Cx<R>) -> R {
    z.re.hypot(z.im)
}

#[inline]
pub(crate) fn cfinite<R: Real>(z: Cx<R>) -> bool {
    z.re.finite() && z.im.finite()
}
