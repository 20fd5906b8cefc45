//! Chern curvature, Strominger-Bismut curvature (directly from the connection
//! and through the Chern relation), the four SB Ricci traces, holomorphic Ricci
//! and holomorphic sectional curvature, and their extrema.
//!
//! Four-index tensors are `R_{i jbar k lbar} = g(R(d_i, d_jbar) d_k, d_lbar)`
//! stored at `[i, j, k, l]`.

use crate::charts::{ChartPoint, MetricField, Regime};
use crate::connections::LocalMetric;
use crate::jet::{mat_det, Jet};
use crate::sampling::{unit_direction, SeedExt, SeededRng};
use crate::tensor::{ComplexTensor, HermitianMatrix, IndexKind};
use crate::{LabError, Result, C64};
use rayon::prelude::*;
use serde::Serialize;

const FOUR: [IndexKind; 4] = [
    IndexKind::HolLower,
    IndexKind::AntiLower,
    IndexKind::HolLower,
    IndexKind::AntiLower,
];

fn two(n: usize, f: impl Fn(usize, usize) -> C64) -> ComplexTensor {
    ComplexTensor::from_fn(
        vec![n, n],
        vec![IndexKind::HolLower, IndexKind::AntiLower],
        |x| f(x[0], x[1]),
    )
}

fn four(n: usize, f: impl Fn(usize, usize, usize, usize) -> C64) -> ComplexTensor {
    ComplexTensor::from_fn(vec![n; 4], FOUR.to_vec(), |x| f(x[0], x[1], x[2], x[3]))
}

/// `Theta_{i jbar k lbar} = -d_i dbar_j h_{k lbar} + h^{p qbar} dbar_j h_{p lbar} d_i h_{k qbar}`.
pub fn theta_from(lm: &LocalMetric) -> ComplexTensor {
    let n = lm.n;
    let dz: Vec<Jet> = (0..n * n * n)
        .map(|x| lm.hj(x / n % n, x % n).dz(x / (n * n)))
        .collect();
    let dzb: Vec<C64> = (0..n * n * n)
        .map(|x| lm.hj(x / n % n, x % n).dzb(x / (n * n)).value())
        .collect();
    four(n, |i, j, k, l| {
        let mut v = -dz[i * n * n + k * n + l].dzb(j).value();
        for p in 0..n {
            for q in 0..n {
                v += lm.gi(p, q) * dzb[j * n * n + p * n + l] * dz[i * n * n + k * n + q].value();
            }
        }
        v
    })
}

pub fn chern_curvature(m: &MetricField, p: &ChartPoint) -> Result<ComplexTensor> {
    Ok(theta_from(&LocalMetric::new(m, p, 2)?))
}

/// `-d_i dbar_j log det h`.
pub fn first_chern_ricci_from(lm: &LocalMetric) -> ComplexTensor {
    let n = lm.n;
    let ld = mat_det(&lm.jet.h, n).ln();
    two(n, |i, j| -ld.dz(i).dzb(j).value())
}

pub fn first_chern_ricci(m: &MetricField, p: &ChartPoint) -> Result<ComplexTensor> {
    Ok(first_chern_ricci_from(&LocalMetric::new(m, p, 2)?))
}

/// `h^{k lbar} Theta_{i jbar k lbar}`.
pub fn theta_trace(lm: &LocalMetric, theta: &ComplexTensor) -> ComplexTensor {
    let n = lm.n;
    two(n, |i, j| {
        let mut v = C64::new(0.0, 0.0);
        for k in 0..n {
            for l in 0..n {
                v += lm.gi(k, l) * theta.get(&[i, j, k, l]);
            }
        }
        v
    })
}

/// SB curvature from the Chern curvature and torsion on a balanced metric.
pub fn sb_relation_from(lm: &LocalMetric) -> ComplexTensor {
    let n = lm.n;
    let th = theta_from(lm);
    let t = lm.chern_torsion_values();
    let ct = |k: usize, i: usize, j: usize| t[k * n * n + i * n + j];
    four(n, |i, j, k, l| {
        let mut v = th.get(&[i, l, k, j]) + th.get(&[k, j, i, l]) - th.get(&[i, j, k, l]);
        for p in 0..n {
            for q in 0..n {
                v += lm.h(p, q) * ct(p, i, k) * ct(q, j, l).conj();
            }
        }
        for p in 0..n {
            for q in 0..n {
                let gpq = lm.gi(p, q);
                if gpq == C64::new(0.0, 0.0) {
                    continue;
                }
                for mm in 0..n {
                    for s in 0..n {
                        v -= gpq * lm.h(mm, l) * lm.h(k, s) * ct(mm, i, p) * ct(s, j, q).conj();
                    }
                }
            }
        }
        v
    })
}

pub fn sb_curvature_from_relation(m: &MetricField, p: &ChartPoint) -> Result<ComplexTensor> {
    Ok(sb_relation_from(&LocalMetric::new(m, p, 2)?))
}

/// Curvature of the SB connection:
/// `R_{i jbar k}^p = -dbar_j G^p_{ik} + d_i G^p_{jbar k} + G^p_{is} G^s_{jbar k} - G^p_{jbar s} G^s_{ik}`,
/// lowered with `h_{p lbar}`.
pub fn sb_direct_from(lm: &LocalMetric) -> ComplexTensor {
    let n = lm.n;
    let cg = lm.chern_gamma_jets();
    let sm = lm.sb_mixed_jets();
    // SB holomorphic part is the transpose of Chern.
    let hol = |p: usize, i: usize, k: usize| &cg[p * n * n + k * n + i];
    let mix = |p: usize, j: usize, k: usize| &sm[p * n * n + j * n + k];
    let mut up = vec![C64::new(0.0, 0.0); n * n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for p in 0..n {
                    let mut v = -hol(p, i, k).dzb(j).value() + mix(p, j, k).dz(i).value();
                    for s in 0..n {
                        v += hol(p, i, s).value() * mix(s, j, k).value();
                        v -= mix(p, j, s).value() * hol(s, i, k).value();
                    }
                    up[(((i * n + j) * n + k) * n) + p] = v;
                }
            }
        }
    }
    four(n, |i, j, k, l| {
        (0..n)
            .map(|p| lm.h(p, l) * up[(((i * n + j) * n + k) * n) + p])
            .sum()
    })
}

pub fn sb_curvature_direct(m: &MetricField, p: &ChartPoint) -> Result<ComplexTensor> {
    Ok(sb_direct_from(&LocalMetric::new(m, p, 2)?))
}

#[derive(Clone, Debug)]
pub struct RicciSet {
    /// `h^{k lbar} R_{i jbar k lbar}`.
    pub r1: ComplexTensor,
    /// `h^{k lbar} R_{k lbar i jbar}`.
    pub r2: ComplexTensor,
    /// `h^{k lbar} R_{i lbar k jbar}`.
    pub r3: ComplexTensor,
    /// `h^{k lbar} R_{k jbar i lbar}`.
    pub r4: ComplexTensor,
    /// `h^{p qbar} h^{s tbar} h_{k jbar} h_{i lbar} T^k_{sp} conj(T^l_{tq})`, Chern torsion.
    pub t_circ_tbar: ComplexTensor,
}

pub fn ricci_from(lm: &LocalMetric, r: &ComplexTensor) -> RicciSet {
    let n = lm.n;
    let trace = |f: &dyn Fn(usize, usize, usize, usize) -> C64| {
        two(n, |i, j| {
            let mut v = C64::new(0.0, 0.0);
            for k in 0..n {
                for l in 0..n {
                    v += lm.gi(k, l) * f(i, j, k, l);
                }
            }
            v
        })
    };
    let r1 = trace(&|i, j, k, l| r.get(&[i, j, k, l]));
    let r2 = trace(&|i, j, k, l| r.get(&[k, l, i, j]));
    let r3 = trace(&|i, j, k, l| r.get(&[i, l, k, j]));
    let r4 = trace(&|i, j, k, l| r.get(&[k, j, i, l]));
    RicciSet {
        r1,
        r2,
        r3,
        r4,
        t_circ_tbar: t_circ_tbar_from(lm),
    }
}

pub fn t_circ_tbar_from(lm: &LocalMetric) -> ComplexTensor {
    let n = lm.n;
    let t = lm.chern_torsion_values();
    let ct = |k: usize, i: usize, j: usize| t[k * n * n + i * n + j];
    // a[k][l] = h^{p qbar} h^{s tbar} T^k_{sp} conj(T^l_{tq})
    let mut a = vec![C64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for l in 0..n {
            let mut v = C64::new(0.0, 0.0);
            for p in 0..n {
                for q in 0..n {
                    for s in 0..n {
                        for tt in 0..n {
                            v += lm.gi(p, q) * lm.gi(s, tt) * ct(k, s, p) * ct(l, tt, q).conj();
                        }
                    }
                }
            }
            a[k * n + l] = v;
        }
    }
    two(n, |i, j| {
        let mut v = C64::new(0.0, 0.0);
        for k in 0..n {
            for l in 0..n {
                v += lm.h(k, j) * lm.h(i, l) * a[k * n + l];
            }
        }
        v
    })
}

pub fn sb_ricci_set(m: &MetricField, p: &ChartPoint) -> Result<RicciSet> {
    let lm = LocalMetric::new(m, p, 2)?;
    let r = sb_direct_from(&lm);
    Ok(ricci_from(&lm, &r))
}

#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub point: ChartPoint,
    pub regime: Regime,
    pub theta: ComplexTensor,
    pub theta_ric1: ComplexTensor,
    pub r_sb: ComplexTensor,
    pub ric_sb: [ComplexTensor; 4],
    pub t_circ_tbar: ComplexTensor,
}

pub fn curvature_bundle(m: &MetricField, p: &ChartPoint) -> Result<CurvatureBundle> {
    let lm = LocalMetric::new(m, p, 2)?;
    let r = sb_direct_from(&lm);
    let rs = ricci_from(&lm, &r);
    Ok(CurvatureBundle {
        point: p.clone(),
        regime: lm.regime,
        theta: theta_from(&lm),
        theta_ric1: first_chern_ricci_from(&lm),
        r_sb: r,
        ric_sb: [rs.r1, rs.r2, rs.r3, rs.r4],
        t_circ_tbar: rs.t_circ_tbar,
    })
}

fn leak_tolerance(regime: Regime) -> f64 {
    match regime {
        Regime::Analytic => 1e-8,
        Regime::FiniteDifference { .. } => 1e-5,
    }
}

fn real_or_err(v: C64, scale: f64, regime: Regime) -> Result<f64> {
    if v.im.abs() > leak_tolerance(regime) * scale.max(1.0) {
        return Err(LabError::InvalidArgument(format!(
            "expected a real value, imaginary part {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// `A(W, Wbar) = A_{i jbar} W^i conj(W^j)`.
pub fn eval11(a: &ComplexTensor, w: &[C64]) -> C64 {
    let n = w.len();
    let mut v = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            v += a.get(&[i, j]) * w[i] * w[j].conj();
        }
    }
    v
}

/// `R(W, Wbar, W, Wbar)`.
pub fn eval_quartic(r: &ComplexTensor, w: &[C64]) -> C64 {
    let n = w.len();
    let mut v = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = w[i] * w[j].conj();
            for k in 0..n {
                for l in 0..n {
                    v += r.get(&[i, j, k, l]) * a * w[k] * w[l].conj();
                }
            }
        }
    }
    v
}

fn nonzero(w: &[C64]) -> Result<()> {
    if w.iter().all(|z| z.norm() == 0.0) {
        return Err(LabError::ZeroVector);
    }
    Ok(())
}

pub fn holomorphic_ricci(m: &MetricField, p: &ChartPoint, w: &[C64]) -> Result<f64> {
    nonzero(w)?;
    let rs = sb_ricci_set(m, p)?;
    let v = eval11(&rs.r4, w);
    real_or_err(v, rs.r4.max_abs(), m.regime())
}

pub fn hsc_sb(m: &MetricField, p: &ChartPoint, w: &[C64]) -> Result<f64> {
    nonzero(w)?;
    let lm = LocalMetric::new(m, p, 2)?;
    let r = sb_direct_from(&lm);
    hsc_from(&lm, &r, w)
}

pub fn hsc_from(lm: &LocalMetric, r: &ComplexTensor, w: &[C64]) -> Result<f64> {
    nonzero(w)?;
    let hw = lm.matrix().pair(w, w).re;
    let v = eval_quartic(r, w) / (hw * hw);
    real_or_err(v, r.max_abs(), lm.regime)
}

/// Smallest generalized eigenvalue of the Hermitian part of `a` relative to
/// `h`, with a `(1,0)`-vector `W` attaining it.
pub fn min_relative_eigen(a: &ComplexTensor, h: &HermitianMatrix) -> Result<(f64, Vec<C64>)> {
    use nalgebra::DMatrix;
    let n = h.n();
    let l = h.cholesky()?;
    let lm = DMatrix::from_fn(n, n, |i, j| l[i * n + j]);
    let linv = lm
        .clone()
        .try_inverse()
        .ok_or_else(|| LabError::SingularMetric("Cholesky factor".into()))?;
    let am = DMatrix::from_fn(n, n, |i, j| (a.get(&[i, j]) + a.get(&[j, i]).conj()) * 0.5);
    let c = &linv * am * linv.adjoint();
    let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(c);
    let (imin, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let y = eig.eigenvectors.column(imin).into_owned();
    // v = L^{-*} y, and W = conj(v) since A(W, Wbar) = v^* A v.
    let v = linv.adjoint() * y;
    Ok((lam, v.iter().map(|z| z.conj()).collect()))
}

#[derive(Clone, Debug)]
pub struct Sampler {
    pub points: Vec<ChartPoint>,
    pub directions: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub point: ChartPoint,
    pub direction: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureExtrema {
    pub min_hol_ricci: f64,
    pub min_hsc: f64,
    pub sample_count: usize,
    pub argmin_hol_ricci: Extremum,
    pub argmin_hsc: Extremum,
    /// Smallest value seen by direction sampling alone, a cross-check on the eigenvalue route.
    pub sampled_min_hol_ricci: f64,
}

const GD_STEPS: usize = 20;
const GD_STEP: f64 = 0.1;
const GD_KEEP: usize = 4;

/// Projected gradient descent of a degree-0 homogeneous function on the unit sphere of `C^n = R^{2n}`.
fn descend(f: &dyn Fn(&[C64]) -> f64, w0: &[C64]) -> (f64, Vec<C64>) {
    let n = w0.len();
    let norm = |w: &[C64]| w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut w: Vec<C64> = w0.iter().map(|z| z / norm(w0)).collect();
    let mut best = (f(&w), w.clone());
    let eps = 1e-6;
    for _ in 0..GD_STEPS {
        let f0 = f(&w);
        let mut grad = vec![C64::new(0.0, 0.0); n];
        for a in 0..2 * n {
            let mut wp = w.clone();
            let mut wm = w.clone();
            let d = if a % 2 == 0 {
                C64::new(eps, 0.0)
            } else {
                C64::new(0.0, eps)
            };
            wp[a / 2] += d;
            wm[a / 2] -= d;
            let g = (f(&wp) - f(&wm)) / (2.0 * eps);
            if a % 2 == 0 {
                grad[a / 2].re = g;
            } else {
                grad[a / 2].im = g;
            }
        }
        let next: Vec<C64> = w.iter().zip(&grad).map(|(z, g)| z - g * GD_STEP).collect();
        let nn = norm(&next);
        if !(nn > 0.0) {
            break;
        }
        w = next.iter().map(|z| z / nn).collect();
        let fv = f(&w);
        if fv < best.0 {
            best = (fv, w.clone());
        }
        if (f0 - fv).abs() < 1e-15 {
            break;
        }
    }
    best
}

struct PointExtrema {
    ric: (f64, Vec<C64>),
    ric_sampled: f64,
    hsc: (f64, Vec<C64>),
}

fn point_extrema(
    m: &MetricField,
    p: &ChartPoint,
    directions: usize,
    seed: u64,
) -> Result<PointExtrema> {
    let lm = LocalMetric::new(m, p, 2)?;
    let r = sb_direct_from(&lm);
    let rs = ricci_from(&lm, &r);
    let h = lm.matrix();
    let (lam, wmin) = min_relative_eigen(&rs.r4, &h)?;
    let ric = |w: &[C64]| eval11(&rs.r4, w).re / h.pair(w, w).re;
    let hsc = |w: &[C64]| eval_quartic(&r, w).re / h.pair(w, w).re.powi(2);
    let mut rng = SeededRng::new(seed);
    let dirs: Vec<Vec<C64>> = (0..directions.max(1))
        .map(|_| unit_direction(&mut rng, lm.n))
        .collect();
    let ric_sampled = dirs.iter().map(|w| ric(w)).fold(f64::INFINITY, f64::min);
    let mut scored: Vec<(f64, usize)> = dirs.iter().enumerate().map(|(k, w)| (hsc(w), k)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut hbest = (f64::INFINITY, dirs[0].clone());
    for &(_, k) in scored.iter().take(GD_KEEP) {
        let cand = descend(&hsc, &dirs[k]);
        if cand.0 < hbest.0 {
            hbest = cand;
        }
    }
    Ok(PointExtrema {
        ric: (lam, wmin),
        ric_sampled,
        hsc: hbest,
    })
}

/// Minima of holomorphic Ricci and holomorphic sectional curvature over the
/// sample points and unit directions. Deterministic for a given seed.
pub fn curvature_extrema(
    m: &MetricField,
    sampler: &Sampler,
    seed: u64,
) -> Result<CurvatureExtrema> {
    if sampler.points.is_empty() {
        return Err(LabError::InvalidArgument("empty sampler".into()));
    }
    let per: Vec<PointExtrema> = sampler
        .points
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            point_extrema(
                m,
                p,
                sampler.directions,
                seed.wrapping_add(k as u64)
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ir = 0;
    let mut ih = 0;
    for k in 1..per.len() {
        if per[k].ric.0 < per[ir].ric.0 {
            ir = k;
        }
        if per[k].hsc.0 < per[ih].hsc.0 {
            ih = k;
        }
    }
    let sampled = per
        .iter()
        .map(|e| e.ric_sampled)
        .fold(f64::INFINITY, f64::min);
    Ok(CurvatureExtrema {
        min_hol_ricci: per[ir].ric.0,
        min_hsc: per[ih].hsc.0,
        sample_count: per.len(),
        argmin_hol_ricci: Extremum {
            value: per[ir].ric.0,
            point: sampler.points[ir].clone(),
            direction: per[ir].ric.1.clone(),
        },
        argmin_hsc: Extremum {
            value: per[ih].hsc.0,
            point: sampler.points[ih].clone(),
            direction: per[ih].hsc.1.clone(),
        },
        sampled_min_hol_ricci: sampled,
    })
}

/// `|Ric(W, Wbar) - (2 R1 - R2 - T o Tbar)(W, Wbar)|`, the component form of the
/// balanced identity expressing holomorphic Ricci through the first two traces.
pub fn holomorphic_ricci_identity(m: &MetricField, p: &ChartPoint, w: &[C64]) -> Result<f64> {
    nonzero(w)?;
    let rs = sb_ricci_set(m, p)?;
    Ok(holomorphic_ricci_identity_from(&rs, w))
}

pub fn holomorphic_ricci_identity_from(rs: &RicciSet, w: &[C64]) -> f64 {
    let lhs = eval11(&rs.r4, w);
    let rhs = eval11(&rs.r1, w) * 2.0 - eval11(&rs.r2, w) - eval11(&rs.t_circ_tbar, w);
    (lhs - rhs).norm()
}

/// Real SB curvature `g(R(JX, X) X, JX)` with `X = U + Ubar`, computed from the
/// connection on the full complexified tangent bundle, together with
/// `4 R(U, Ubar, U, Ubar)` from the `(1,0)` tensor.
pub fn hsc_bridge_terms(lm: &LocalMetric, u: &[C64]) -> (f64, C64) {
    let n = lm.n;
    let nn = 2 * n;
    let cg = lm.chern_gamma_jets();
    let sm = lm.sb_mixed_jets();
    let zero = cg[0].zero_like();
    // Full coefficients G[c][a][b]: nabla_{e_a} e_b = G^c_{ab} e_c, e_a = d_a, e_{n+a} = d_abar.
    let mut gam: Vec<Jet> = vec![zero.clone(); nn * nn * nn];
    let at = |c: usize, a: usize, b: usize| c * nn * nn + a * nn + b;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let hol = cg[k * n * n + j * n + i].clone();
                let mix = sm[k * n * n + i * n + j].clone();
                gam[at(k, i, j)] = hol.clone();
                gam[at(k, n + i, j)] = mix.clone();
                gam[at(n + k, n + i, n + j)] = hol.conj();
                gam[at(n + k, i, n + j)] = mix.conj();
            }
        }
    }
    let d = |j: &Jet, a: usize| {
        if a < n {
            j.dz(a).value()
        } else {
            j.dzb(a - n).value()
        }
    };
    let gmet = |a: usize, b: usize| -> C64 {
        match (a < n, b < n) {
            (true, false) => lm.h(a, b - n),
            (false, true) => lm.h(b, a - n),
            _ => C64::new(0.0, 0.0),
        }
    };
    let x: Vec<C64> = (0..nn)
        .map(|a| if a < n { u[a] } else { u[a - n].conj() })
        .collect();
    let jx: Vec<C64> = (0..nn)
        .map(|a| {
            if a < n {
                C64::new(0.0, 1.0) * u[a]
            } else {
                C64::new(0.0, -1.0) * u[a - n].conj()
            }
        })
        .collect();
    // R(A, B) C = (d_A G^D_{BC} - d_B G^D_{AC} + G^E_{BC} G^D_{AE} - G^E_{AC} G^D_{BE}) e_D
    let mut total = C64::new(0.0, 0.0);
    for dd in 0..nn {
        let mut rd = C64::new(0.0, 0.0);
        for a in 0..nn {
            if jx[a] == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..nn {
                for c in 0..nn {
                    let coef = jx[a] * x[b] * x[c];
                    if coef == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut v = d(&gam[at(dd, b, c)], a) - d(&gam[at(dd, a, c)], b);
                    for e in 0..nn {
                        v += gam[at(e, b, c)].value() * gam[at(dd, a, e)].value();
                        v -= gam[at(e, a, c)].value() * gam[at(dd, b, e)].value();
                    }
                    rd += coef * v;
                }
            }
        }
        for f in 0..nn {
            total += rd * gmet(dd, f) * jx[f];
        }
    }
    let r = sb_direct_from(lm);
    (total.re, eval_quartic(&r, u) * 4.0)
}
