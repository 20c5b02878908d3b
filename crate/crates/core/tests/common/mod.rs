//! Oracles built straight on nalgebra, sharing no code paths with the
//! library beyond reading a scenario's input matrices.

#![allow(dead_code)]

use fcs_core::dynamics::Scenario;
use fcs_core::presets;
use fcs_core::AtomicMeasure;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type M = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn id(d: usize) -> M {
    M::identity(d, d)
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}

/// `e^{z H}` by scaling-and-squaring Padé.
pub fn expm(h: &M, z: Complex64) -> M {
    (h * z).exp()
}

pub fn trace(a: &M) -> Complex64 {
    a.trace()
}

pub fn max_abs(a: &M) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn gibbs(h: &M, beta: f64) -> M {
    let e = expm(h, c(-beta, 0.0));
    let z = trace(&e);
    e / z
}

/// Eigen-clusters of a Hermitian matrix: `(energy, projector)` pairs.
pub fn clusters(h: &M, tol: f64) -> Vec<(f64, M)> {
    let eig = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..h.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut out: Vec<(Vec<f64>, M)> = Vec::new();
    for i in idx {
        let e = eig.eigenvalues[i];
        let v = eig.eigenvectors.column(i).into_owned();
        let p = &v * v.adjoint();
        match out.last_mut() {
            Some((es, proj)) if e - *es.last().unwrap() <= tol => {
                es.push(e);
                *proj += p;
            }
            _ => out.push((vec![e], p)),
        }
    }
    out.into_iter().map(|(es, p)| (es.iter().sum::<f64>() / es.len() as f64, p)).collect()
}

pub struct Raw {
    pub h_s: M,
    pub h_r: M,
    pub h_lambda: M,
    pub rho_s: M,
    pub rho_r: M,
    pub ds: usize,
    pub dr: usize,
    pub beta: f64,
}

pub fn raw(scn: &Scenario<f64>) -> Raw {
    let (ds, dr) = (scn.dim_s(), scn.dim_r());
    let h_s = scn.h_s().matrix().clone();
    let h_r = scn.h_r().matrix().clone();
    let v = scn.v().matrix().clone();
    let h_lambda = kron(&h_s, &id(dr)) + kron(&id(ds), &h_r) + v * c(scn.lambda(), 0.0);
    Raw { rho_s: scn.rho_s().op().matrix().clone(), rho_r: gibbs(&h_r, scn.beta()), h_s, h_r, h_lambda, ds, dr, beta: scn.beta() }
}

/// Two-time measurement of `H_R`: weight `tr(U (Q_e ω Q_e) U* Q_e')` at
/// `e − e'`, with `U = e^{−itH_λ}`.
pub fn protocol_reservoir(scn: &Scenario<f64>, t: f64, tol: f64) -> Vec<(f64, f64)> {
    let r = raw(scn);
    let u = expm(&r.h_lambda, c(0.0, -t));
    let omega = kron(&r.rho_s, &r.rho_r);
    let qs: Vec<(f64, M)> = clusters(&r.h_r, tol).into_iter().map(|(e, q)| (e, kron(&id(r.ds), &q))).collect();
    let mut out = Vec::new();
    for (e, q) in &qs {
        let moved = &u * (q * &omega * q) * u.adjoint();
        for (e2, q2) in &qs {
            out.push((e - e2, trace(&(&moved * q2)).re));
        }
    }
    out
}

/// Two-time measurement of `H_S`, atoms at final minus initial energy.
pub fn protocol_system(scn: &Scenario<f64>, t: f64, tol: f64) -> Vec<(f64, f64)> {
    let r = raw(scn);
    let u = expm(&r.h_lambda, c(0.0, -t));
    let ps: Vec<(f64, M)> = clusters(&r.h_s, tol).into_iter().map(|(e, p)| (e, kron(&p, &id(r.dr)))).collect();
    let omega = kron(&r.rho_s, &r.rho_r);
    let mut out = Vec::new();
    for (e, p) in &ps {
        let moved = &u * (p * &omega * p) * u.adjoint();
        for (e2, p2) in &ps {
            out.push((e2 - e, trace(&(&moved * p2)).re));
        }
    }
    out
}

/// Merges points closer than `tol`, dropping weights at or below `1e-14`.
pub fn merge(points: &[(f64, f64)], tol: f64) -> Vec<(f64, f64)> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut groups: Vec<Vec<(f64, f64)>> = Vec::new();
    for x in p {
        match groups.last_mut() {
            Some(g) if x.0 - g.last().unwrap().0 <= tol => g.push(x),
            _ => groups.push(vec![x]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let w: f64 = g.iter().map(|x| x.1.max(0.0)).sum();
            let loc = if w > 0.0 { g.iter().map(|x| x.0 * x.1.max(0.0)).sum::<f64>() / w } else { g[0].0 };
            (loc, w)
        })
        .filter(|x| x.1 > 1e-14)
        .collect()
}

/// Largest location or weight mismatch between the two measures, matching
/// every atom heavier than `floor` with its nearest counterpart.
pub fn measure_mismatch(got: &AtomicMeasure<f64>, want: &[(f64, f64)], floor: f64) -> f64 {
    let got: Vec<(f64, f64)> = got.atoms().iter().map(|a| (a.location, a.weight)).collect();
    let one_way = |a: &[(f64, f64)], b: &[(f64, f64)]| {
        a.iter().filter(|x| x.1 > floor).fold(0.0f64, |m, x| {
            let nearest = b.iter().min_by(|p, q| (p.0 - x.0).abs().partial_cmp(&(q.0 - x.0).abs()).unwrap());
            match nearest {
                Some(y) => m.max((y.0 - x.0).abs()).max((y.1 - x.1).abs()),
                None => f64::INFINITY,
            }
        })
    };
    one_way(&got, want).max(one_way(want, &got))
}

/// `e^{itH} A e^{−itH}`.
pub fn heisenberg(a: &M, h: &M, t: f64) -> M {
    let u = expm(h, c(0.0, t));
    &u * a * u.adjoint()
}

/// `tr(e^{−itH_λ} ω e^{itH_λ} A) − tr(ω A)`.
pub fn expectation_change(scn: &Scenario<f64>, a: &M, t: f64) -> f64 {
    let r = raw(scn);
    let omega = kron(&r.rho_s, &r.rho_r);
    let at = heisenberg(a, &r.h_lambda, t);
    trace(&(&omega * &at)).re - trace(&(&omega * a)).re
}

/// Positive square root through the eigendecomposition of nalgebra.
pub fn sqrt_psd(a: &M) -> M {
    let eig = a.clone().symmetric_eigen();
    let d = M::from_diagonal(&eig.eigenvalues.map(|x| c(x.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// One of the 25 members of the standard scenario suite: `d_S ∈ {2, 3}`,
/// `d_R ∈ {2, 4, 8}`, `λ ∈ [0, 0.5]`, `t ∈ [0, 5]`, spread deterministically
/// over the ranges with both endpoints hit.
pub fn suite_member(k: usize) -> (Scenario<f64>, f64) {
    let ds = [2, 3][k % 2];
    let dr = [2, 4, 8][k % 3];
    let lambda = 0.5 * ((k * 7) % 25) as f64 / 24.0;
    let t = 5.0 * ((k * 11) % 25) as f64 / 24.0;
    let beta = 0.5 + ((k * 3) % 5) as f64 * 0.5;
    (presets::random_scenario::<f64>(ds, dr, lambda, beta, 1000 + k as u64).unwrap(), t)
}

pub fn scenario_suite() -> Vec<(Scenario<f64>, f64)> {
    (0..25).map(suite_member).collect()
}
