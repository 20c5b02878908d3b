//! Adaptive Gauss–Kronrod (7/15) quadrature with global bisection.

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::scalar::{cabs, Cx, Real};

/// Default absolute tolerance.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
/// Panel budget before giving up.
pub const MAX_PANELS: usize = 4096;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], ...`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Values that can be integrated: a real vector space with a norm used for
/// error control.
pub trait Integrable<R: Real>: Clone {
    fn zero_like(&self) -> Self;
    /// `self += a·x`
    fn axpy(&mut self, a: R, x: &Self);
    /// Max-abs norm.
    fn norm(&self) -> R;
}

impl<R: Real> Integrable<R> for R {
    fn zero_like(&self) -> Self {
        R::zero()
    }
    fn axpy(&mut self, a: R, x: &Self) {
        *self += a * *x;
    }
    fn norm(&self) -> R {
        self.abs()
    }
}

impl<R: Real> Integrable<R> for Cx<R> {
    fn zero_like(&self) -> Self {
        Cx::new(R::zero(), R::zero())
    }
    fn axpy(&mut self, a: R, x: &Self) {
        *self += x.scale(a);
    }
    fn norm(&self) -> R {
        cabs(*self)
    }
}

impl<R: Real> Integrable<R> for Vec<R> {
    fn zero_like(&self) -> Self {
        vec![R::zero(); self.len()]
    }
    fn axpy(&mut self, a: R, x: &Self) {
        assert_eq!(self.len(), x.len(), "integrand changed length");
        self.iter_mut().zip(x).for_each(|(y, &v)| *y += a * v);
    }
    fn norm(&self) -> R {
        self.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }
}

impl<R: Real> Integrable<R> for Operator<R> {
    fn zero_like(&self) -> Self {
        Operator::zeros(self.dim())
    }
    fn axpy(&mut self, a: R, x: &Self) {
        let m = self.matrix_mut();
        m.iter_mut().zip(x.matrix().iter()).for_each(|(y, v)| *y += v.scale(a));
    }
    fn norm(&self) -> R {
        self.matrix().iter().fold(R::zero(), |m, z| m.max(cabs(*z)))
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult<T, R> {
    pub value: T,
    /// Sum of the per-panel `|K15 − G7|` estimates.
    pub error: R,
    pub panels: usize,
    pub evaluations: usize,
}

struct Panel<T, R> {
    a: R,
    b: R,
    value: T,
    error: R,
}

fn kronrod<R: Real, T: Integrable<R>>(f: &impl Fn(R) -> T, a: R, b: R) -> Panel<T, R> {
    let half = (b - a) / R::lit(2.0);
    let mid = (a + b) / R::lit(2.0);
    let fc = f(mid);
    let mut k = fc.zero_like();
    let mut g = fc.zero_like();
    k.axpy(R::lit(WGK[7]) * half, &fc);
    g.axpy(R::lit(WG[3]) * half, &fc);
    for i in 0..7 {
        let dx = half * R::lit(XGK[i]);
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        let w = R::lit(WGK[i]) * half;
        k.axpy(w, &f1);
        k.axpy(w, &f2);
        if i % 2 == 1 {
            let wg = R::lit(WG[i / 2]) * half;
            g.axpy(wg, &f1);
            g.axpy(wg, &f2);
        }
    }
    let mut diff = k.clone();
    diff.axpy(-R::one(), &g);
    Panel { a, b, value: k, error: diff.norm() }
}

/// `∫_a^b f` to absolute error `abs_tol`. Reversed limits give the negated
/// integral; `a == b` gives zero without evaluating `f` more than once.
pub fn integrate<R: Real, T: Integrable<R>>(f: impl Fn(R) -> T, a: R, b: R, abs_tol: R) -> Result<QuadResult<T, R>> {
    integrate_panels(f, &[a, b], abs_tol)
}

/// Like [`integrate`] but starting from the given breakpoints, which must be
/// monotone (either direction).
pub fn integrate_panels<R: Real, T: Integrable<R>>(f: impl Fn(R) -> T, breaks: &[R], abs_tol: R) -> Result<QuadResult<T, R>> {
    if breaks.len() < 2 {
        return Err(Error::OutOfDomain("need at least two breakpoints".into()));
    }
    if !(abs_tol > R::zero()) {
        return Err(Error::OutOfDomain(format!("quadrature tolerance must be positive, got {}", abs_tol.as_f64())));
    }
    if breaks.iter().any(|x| !x.finite()) {
        return Err(Error::OutOfDomain("non-finite integration limit".into()));
    }
    let first = breaks[0];
    let last = breaks[breaks.len() - 1];
    let sign = if last < first { -R::one() } else { R::one() };
    let mut pts: Vec<R> = breaks.to_vec();
    if last < first {
        pts.reverse();
    }
    if pts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::OutOfDomain("breakpoints are not monotone".into()));
    }
    pts.dedup();
    if pts.len() < 2 {
        let z = f(first).zero_like();
        return Ok(QuadResult { value: z, error: R::zero(), panels: 0, evaluations: 1 });
    }

    let span = pts[pts.len() - 1] - pts[0];
    let min_width = span * R::lit(64.0) * R::default_epsilon();
    let mut panels: Vec<Panel<T, R>> = pts.windows(2).map(|w| kronrod(&f, w[0], w[1])).collect();
    let mut evaluations = 15 * panels.len();
    loop {
        let total_err = panels.iter().fold(R::zero(), |s, p| s + p.error);
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -R::one()), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let too_narrow = panels[worst].b - panels[worst].a <= min_width;
        if total_err <= abs_tol || panels.len() >= MAX_PANELS || too_narrow {
            let mut value = panels[0].value.zero_like();
            for p in &panels {
                value.axpy(sign, &p.value);
            }
            if total_err > abs_tol {
                return Err(Error::Quadrature { estimate: total_err.as_f64(), requested: abs_tol.as_f64() });
            }
            return Ok(QuadResult { value, error: total_err, panels: panels.len(), evaluations });
        }
        let p = panels.swap_remove(worst);
        let mid = (p.a + p.b) / R::lit(2.0);
        panels.push(kronrod(&f, p.a, mid));
        panels.push(kronrod(&f, mid, p.b));
        evaluations += 30;
    }
}
