//! Identities checked point by point at quasi-random chart points.

use super::{
    pointwise_residuals, regime_of, CheckKind, CheckReport, Residual, Tolerances, POLE_MARGIN,
};
use crate::charts::{ChartPoint, GeometryEntry, GeometryKind, ScalarField};
use crate::connections::{hessians_from, HessianPair, LocalMetric};
use crate::curvature::{
    eval11, eval_quartic, first_chern_ricci_from, holomorphic_ricci_identity_from,
    hsc_bridge_terms, ricci_from, sb_direct_from, sb_relation_from, theta_from,
};
use crate::hodge::{balanced_residual, lambda_ddbar_omega, laplace_beltrami, trace_ddbar};
use crate::jet::Jet;
use crate::sampling::{unit_direction, SeedExt, SeededRng};
use crate::tensor::ComplexTensor;
use crate::{LabError, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

const ID: CheckKind = CheckKind::IdentityResidual;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `h^{i jbar} u_i u_jbar` as a jet; its order is the smaller of the metric
/// order and one less than the order of `u`.
pub(crate) fn grad_sq(lm: &LocalMetric, u: &Jet) -> Jet {
    let n = lm.n;
    let du: Vec<Jet> = (0..n).map(|k| u.dz(k)).collect();
    let db: Vec<Jet> = (0..n).map(|k| u.dzb(k)).collect();
    let mut acc = lm.g[0]
        .zero_like()
        .truncate(lm.order.min(u.order().saturating_sub(1)));
    for i in 0..n {
        for j in 0..n {
            acc += &(&lm.g[i * n + j] * &(&du[i] * &db[j]));
        }
    }
    acc
}

pub(crate) fn first_derivs(u: &Jet, n: usize) -> (Vec<C64>, Vec<C64>) {
    (
        (0..n).map(|k| u.dz(k).value()).collect(),
        (0..n).map(|k| u.dzb(k).value()).collect(),
    )
}

/// `|t|^2 = h^{i jbar} h^{k lbar} t_{ik} conj(t_{jl})` and
/// `|s|^2 = h^{i jbar} h^{k lbar} s_{jbar k} s_{i lbar}`.
pub(crate) fn hessian_norms(lm: &LocalMetric, hp: &HessianPair) -> (f64, f64) {
    let n = lm.n;
    let mut tn = C64::new(0.0, 0.0);
    let mut sn = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let g = lm.gi(i, j) * lm.gi(k, l);
                    tn += g * hp.t.get(&[i, k]) * hp.t.get(&[j, l]).conj();
                    sn += g * hp.s_bar_first.get(&[j, k]) * hp.s.get(&[i, l]);
                }
            }
        }
    }
    (tn.re, sn.re)
}

/// Lowered Chern torsion `T_{i j lbar} = d_i h_{j lbar} - d_j h_{i lbar}` at `[(i*n+j)*n+l]`.
pub(crate) fn torsion_lowered(lm: &LocalMetric) -> Vec<C64> {
    let n = lm.n;
    let mut t = vec![C64::new(0.0, 0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                t[(i * n + j) * n + l] = lm.hj(j, l).dz(i).value() - lm.hj(i, l).dz(j).value();
            }
        }
    }
    t
}

/// Coefficients of `C T(U, ., Ubar) = T_{i j lbar} U^i conj(U^l) dz^j`.
pub(crate) fn torsion_form(t_low: &[C64], n: usize, u: &[C64]) -> Vec<C64> {
    (0..n)
        .map(|j| {
            let mut v = C64::new(0.0, 0.0);
            for i in 0..n {
                for l in 0..n {
                    v += t_low[(i * n + j) * n + l] * u[i] * u[l].conj();
                }
            }
            v
        })
        .collect()
}

fn tensor_residual(a: &ComplexTensor, b: &ComplexTensor) -> Result<Residual> {
    Ok(Residual {
        abs: a.sub(b)?.max_abs(),
        scale: a.max_abs().max(b.max_abs()),
    })
}

fn report(
    name: &str,
    entry: &GeometryEntry,
    u: Option<&ScalarField>,
    r: Residual,
    used: usize,
    tol: &Tolerances,
) -> CheckReport {
    let regime = regime_of(&entry.metric, u);
    CheckReport::new(
        name,
        &entry.name,
        ID,
        r.relative(),
        tol.for_regime(regime),
        regime,
    )
    .with("abs_residual", r.abs)
    .samples(used)
}

/// `Delta_d u = -2 h^{i jbar} u_{i jbar}` with `Delta_d` computed as the
/// Laplace-Beltrami operator of the underlying Riemannian metric.
pub fn check_laplacian_trace(
    entry: &GeometryEntry,
    u: &ScalarField,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let m = &entry.metric;
    let (res, used) = pointwise_residuals(points, 1, |_, p| {
        let lb = laplace_beltrami(m, u, p)?;
        let lm = LocalMetric::new(m, p, 0)?;
        let tr = trace_ddbar(&lm, &u.jet(p, 2)?);
        Ok(Some(vec![Residual::pair(c(lb), tr * -2.0)]))
    })?;
    Ok(report("laplacian-trace", entry, Some(u), res[0], used, tol)
        .with("pointwise", res[0].relative()))
}

/// `h^{i jbar} s_{i jbar} = tr_omega(sqrt(-1) del delbar u) = -(lambda/2) u`.
/// With `lambda = None` only the first equality is checked, which holds for any
/// function on a balanced metric.
pub fn check_hessian_trace(
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: Option<f64>,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let m = &entry.metric;
    let (res, used) = pointwise_residuals(points, 2, |_, p| {
        let lm = LocalMetric::new(m, p, 1)?;
        let uj = u.jet(p, 2)?;
        let hp = hessians_from(&lm, &uj);
        let n = lm.n;
        let mut tr_s = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                tr_s += lm.gi(i, j) * hp.s.get(&[i, j]);
            }
        }
        let mut v = vec![Residual::pair(tr_s, trace_ddbar(&lm, &uj))];
        if let Some(l) = lambda {
            v.push(Residual::pair(tr_s, uj.value() * (-0.5 * l)));
        }
        Ok(Some(v))
    })?;
    let mut r = report(
        "hessian-trace",
        entry,
        Some(u),
        res[0].merge(res[1]),
        used,
        tol,
    )
    .with("trace_vs_ddbar", res[0].relative());
    if let Some(l) = lambda {
        r = r
            .with("trace_vs_eigenvalue", res[1].relative())
            .with("lambda1", l);
    } else {
        r = r.note("trace identity only: the probe function is not an eigenfunction");
    }
    Ok(r)
}

/// Bochner formula for an eigenfunction:
/// `Delta_dbar |du|^2 = -Ric(U, Ubar) + lambda |du|^2 - |t|^2 - |s|^2`,
/// with `Delta_dbar f = -tr_omega(sqrt(-1) del delbar f)` and `U = (du)^sharp`.
pub fn check_bochner(
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: f64,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let m = &entry.metric;
    let (res, used) = pointwise_residuals(points, 1, |_, p| {
        let lm = LocalMetric::new(m, p, 2)?;
        let uj = u.jet(p, 3)?;
        let f = grad_sq(&lm, &uj);
        let lhs = -trace_ddbar(&lm, &f);
        let (_, dbu) = first_derivs(&uj, lm.n);
        let up = lm.sharp(&dbu);
        let rs = ricci_from(&lm, &sb_direct_from(&lm));
        let ric = eval11(&rs.r4, &up);
        let (tn, sn) = hessian_norms(&lm, &hessians_from(&lm, &uj));
        let rhs = -ric + f.value() * lambda - c(tn) - c(sn);
        Ok(Some(vec![Residual::pair(lhs, rhs)]))
    })?;
    Ok(report("bochner", entry, Some(u), res[0], used, tol).with("lambda1", lambda))
}

/// Equality-case quantities: `Q = |du|^2 + (lambda/4n) u^2` is constant and
/// equal to `K/2`, `|du| / sqrt(1 - u^2) = sqrt(K/2)`, and `D = pi / sqrt K`.
pub fn check_q_and_rigidity(
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: f64,
    k: f64,
    diameter: Option<f64>,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let n = entry.n() as f64;
    if !(k > 0.0) || (lambda - 2.0 * n * k).abs() > 1e-6 * lambda.abs().max(1.0) {
        return Ok(CheckReport::not_applicable(
            "gradient-rigidity",
            &entry.name,
            ID,
            "not an equality case of lambda1 >= 2nK",
        )
        .with("lambda1", lambda)
        .with("K", k));
    }
    let m = &entry.metric;
    let per = points
        .par_iter()
        .map(|p| -> Result<(f64, Option<f64>)> {
            let lm = LocalMetric::new(m, p, 0)?;
            let uj = u.jet(p, 1)?;
            let (du, _) = first_derivs(&uj, lm.n);
            let g2 = lm.pair10(&du, &du).re;
            let uv = uj.value().re;
            let q = g2 + lambda / (4.0 * n) * uv * uv;
            let ratio =
                (uv * uv < 1.0 - POLE_MARGIN).then(|| g2.max(0.0).sqrt() / (1.0 - uv * uv).sqrt());
            Ok((q, ratio))
        })
        .collect::<Result<Vec<_>>>()?;
    let qmax = per.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let qmin = per.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    let spread = qmax - qmin;
    let level = per
        .iter()
        .map(|x| (x.0 - k / 2.0).abs())
        .fold(0.0, f64::max);
    let target = (k / 2.0).sqrt();
    let ratio = per
        .iter()
        .filter_map(|x| x.1)
        .map(|r| (r - target).abs())
        .fold(0.0, f64::max);
    let used = per.iter().filter(|x| x.1.is_some()).count();
    let regime = regime_of(m, Some(u));
    let mut r = CheckReport::new(
        "gradient-rigidity",
        &entry.name,
        ID,
        spread.max(level).max(ratio),
        tol.for_regime(regime),
        regime,
    )
    .with("q_spread", spread)
    .with("q_minus_half_k", level)
    .with("gradient_ratio", ratio)
    .with("K", k)
    .with("lambda1", lambda);
    if let Some(d) = diameter {
        let dd = (d - PI / k.sqrt()).abs();
        r = r
            .absorb("diameter_minus_pi_over_sqrt_k", dd)
            .with("d_sqrt_k", d * k.sqrt());
    }
    Ok(r.samples(used))
}

/// With `v = log(a + u)` and `P = |dv|^2`:
/// the trace identity `tr_omega(sqrt(-1) del delbar v) = h^{i jbar} s'_{i jbar} = -P - lambda/2 + a lambda / (2(a+u))`
/// and the Bochner formula for `P`. Requires `a > 1` and `u >= -1`.
pub fn check_liyau_identities(
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: f64,
    a: f64,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<Vec<CheckReport>> {
    if !(a > 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "the shift a must exceed 1, got {a}"
        )));
    }
    let m = &entry.metric;
    let (res, used) = pointwise_residuals(points, 3, |_, p| {
        let lm = LocalMetric::new(m, p, 2)?;
        let uj = u.jet(p, 3)?;
        let uv = uj.value().re;
        if a + uv <= 0.0 {
            return Err(LabError::Domain(format!(
                "a + u = {} is not positive",
                a + uv
            )));
        }
        let v = (&uj + a).ln();
        let pj = grad_sq(&lm, &v);
        let pv = pj.value();
        let n = lm.n;
        let hp = hessians_from(&lm, &v);
        let mut tr_s = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                tr_s += lm.gi(i, j) * hp.s.get(&[i, j]);
            }
        }
        let tr_v = trace_ddbar(&lm, &v);
        let rhs41 = -pv - c(lambda / 2.0) + c(a * lambda / (2.0 * (a + uv)));
        let (dv, dbv) = first_derivs(&v, n);
        let dp: Vec<C64> = (0..n).map(|k| pj.dz(k).value()).collect();
        let vp = lm.sharp(&dbv);
        let rs = ricci_from(&lm, &sb_direct_from(&lm));
        let ric = eval11(&rs.r4, &vp);
        let (tn, sn) = hessian_norms(&lm, &hp);
        let cross = lm.pair10(&dp, &dv).re;
        let rhs43 = ric - c(2.0 * cross) - pv * (a * lambda / (a + uv)) + c(tn + sn);
        Ok(Some(vec![
            Residual::pair(tr_v, rhs41),
            Residual::pair(tr_s, rhs41),
            Residual::pair(trace_ddbar(&lm, &pj), rhs43),
        ]))
    })?;
    let trace = res[0].merge(res[1]);
    Ok(vec![
        report("log-gradient-trace", entry, Some(u), trace, used, tol)
            .with("ddbar_form", res[0].relative())
            .with("sb_hessian_form", res[1].relative())
            .with("a", a)
            .with("lambda1", lambda),
        report("log-gradient-bochner", entry, Some(u), res[2], used, tol)
            .with("a", a)
            .with("lambda1", lambda),
    ])
}

/// Known range `(min, max)` of a catalogue eigenfunction.
pub fn eigenfunction_range(entry: &GeometryEntry) -> Option<(f64, f64)> {
    entry.eigenfunction.as_ref()?;
    match entry.kind {
        GeometryKind::FubiniStudy { n: 1 } | GeometryKind::FlatTorus { .. } => Some((-1.0, 1.0)),
        GeometryKind::FubiniStudy { n } => {
            let mean = 1.0 / (n + 1) as f64;
            Some((-mean, 1.0 - mean))
        }
        _ => None,
    }
}

/// The affine map `u -> y` with `max y = 1`, `min y = -1`, written as
/// `y = (u/top - (1-k)/2) / ((1+k)/2)` after flipping the sign of `u` if needed.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ArcsinNormalization {
    sign: f64,
    top: f64,
    k: f64,
    pub b: f64,
}

impl ArcsinNormalization {
    pub fn new(range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = range;
        if !(lo < 0.0 && hi > 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "eigenfunction range [{lo}, {hi}] does not straddle 0"
            )));
        }
        let (sign, top, bottom) = if hi >= -lo {
            (1.0, hi, lo)
        } else {
            (-1.0, -lo, -hi)
        };
        let k = -bottom / top;
        Ok(ArcsinNormalization {
            sign,
            top,
            k,
            b: (1.0 - k) / (1.0 + k),
        })
    }

    pub fn apply(&self, u: &Jet) -> Jet {
        &(&(u * (self.sign / self.top)) + (-(1.0 - self.k) / 2.0)) * (2.0 / (1.0 + self.k))
    }
}

/// With `u` rescaled to `max u = 1`, `min u = -k`, set `y = (u - (1-k)/2) / ((1+k)/2)`,
/// `b = (1-k)/(1+k)` and `theta = arcsin y`. Checks
/// `tr_omega(sqrt(-1) del delbar theta) = -lambda (sin theta + b) / (2 cos theta) + tan theta |d theta|^2`
/// and, when holomorphic Ricci curvature is nonnegative, the bound
/// `|dy|^2 / (1 - y^2) <= (1 + b) lambda / 2`.
pub fn check_arcsin_gradient(
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: f64,
    range: (f64, f64),
    min_hol_ricci: f64,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<Vec<CheckReport>> {
    let norm = ArcsinNormalization::new(range)?;
    let b = norm.b;
    let m = &entry.metric;
    let regime = regime_of(m, Some(u));
    let per = points
        .par_iter()
        .map(|p| -> Result<Option<(Residual, f64)>> {
            let lm = LocalMetric::new(m, p, 1)?;
            let uj = u.jet(p, 2)?;
            let y = norm.apply(&uj);
            let yv = y.value().re;
            if yv.abs() >= 1.0 - POLE_MARGIN {
                return Ok(None);
            }
            let th = y.asin()?;
            let t = th.value().re;
            let pv = grad_sq(&lm, &th).value().re;
            let lhs = trace_ddbar(&lm, &th);
            let rhs = -lambda * (t.sin() + b) / (2.0 * t.cos()) + t.tan() * pv;
            Ok(Some((Residual::pair(lhs, c(rhs)), pv)))
        })
        .collect::<Result<Vec<_>>>()?;
    let used: Vec<(Residual, f64)> = per.into_iter().flatten().collect();
    let res = used.iter().fold(Residual::default(), |a, x| a.merge(x.0));
    let pmax = used.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let ident = CheckReport::new(
        "arcsin-trace",
        &entry.name,
        ID,
        res.relative(),
        tol.for_regime(regime),
        regime,
    )
    .with("abs_residual", res.abs)
    .with("b", b)
    .samples(used.len());
    let margin = (1.0 + b) * lambda / 2.0 - pmax;
    let bound = CheckReport::new(
        "arcsin-gradient-bound",
        &entry.name,
        CheckKind::InequalityMargin,
        margin,
        tol.for_regime(regime),
        regime,
    )
    .with("b", b)
    .with("max_p", pmax)
    .with("lambda1", lambda)
    .with("min_hol_ricci", min_hol_ricci)
    .samples(used.len());
    let bound = if min_hol_ricci < -tol.for_regime(regime) {
        bound.demote("holomorphic Ricci curvature is negative somewhere")
    } else {
        bound
    };
    Ok(vec![ident, bound])
}

/// Random unit directions for point `k`, independent of thread scheduling.
fn directions(seed: u64, k: usize, n: usize, count: usize) -> Vec<Vec<C64>> {
    let mut rng = SeededRng::new(
        seed.wrapping_mul(0x2545_F491_4F6C_DD1D)
            .wrapping_add(k as u64),
    );
    (0..count).map(|_| unit_direction(&mut rng, n)).collect()
}

/// `R(JX, X, X, JX) = 4 R(U, Ubar, U, Ubar)` for `X = U + Ubar`, with the real
/// tensor computed from the connection on the complexified tangent bundle.
pub fn check_hsc_bridge(
    entry: &GeometryEntry,
    points: &[ChartPoint],
    count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let m = &entry.metric;
    let per = points
        .par_iter()
        .enumerate()
        .map(|(k, p)| -> Result<(Residual, f64, f64)> {
            let lm = LocalMetric::new(m, p, 2)?;
            let mut res = Residual::default();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for w in directions(seed, k, lm.n, count) {
                let (real, cplx) = hsc_bridge_terms(&lm, &w);
                res = res.merge(Residual::pair(c(real), cplx));
                // g(X, X) = 2 h(U, Ubar)
                let gxx = 2.0 * lm.matrix().pair(&w, &w).re;
                let hsc = real / (gxx * gxx);
                lo = lo.min(hsc);
                hi = hi.max(hsc);
            }
            Ok((res, lo, hi))
        })
        .collect::<Result<Vec<_>>>()?;
    let res = per.iter().fold(Residual::default(), |a, x| a.merge(x.0));
    let lo = per.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let hi = per.iter().map(|x| x.2).fold(f64::NEG_INFINITY, f64::max);
    Ok(report("hsc-bridge", entry, None, res, per.len(), tol)
        .with("real_hsc_min", lo)
        .with("real_hsc_max", hi))
}

/// `R^SB(U, Ubar, U, Ubar) = Theta(U, Ubar, U, Ubar) - |C T(U, ., Ubar)|^2` for random `U`.
pub fn check_sb_quartic(
    entry: &GeometryEntry,
    points: &[ChartPoint],
    count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let m = &entry.metric;
    let (res, used) = pointwise_residuals(points, 1, |k, p| {
        let lm = LocalMetric::new(m, p, 2)?;
        let r = sb_direct_from(&lm);
        let th = theta_from(&lm);
        let tl = torsion_lowered(&lm);
        let mut res = Residual::default();
        for w in directions(seed ^ 0x51, k, lm.n, count) {
            let tf = torsion_form(&tl, lm.n, &w);
            let rhs = eval_quartic(&th, &w) - lm.pair10(&tf, &tf);
            res = res.merge(Residual::pair(eval_quartic(&r, &w), rhs));
        }
        Ok(Some(vec![res]))
    })?;
    Ok(report("sb-quartic-torsion", entry, None, res[0], used, tol))
}

/// Strominger-Bismut curvature by the direct route against the Chern-plus-torsion
/// route, and the trace relations of a balanced metric:
/// `Ric1 = Theta1 = Theta3 = Theta4`, `Ric2 = Theta1 + c - T o Tbar`,
/// `Ric3 = Ric4 = Theta1 - c` with `c` the coefficients of `Lambda(del delbar omega)`,
/// and the holomorphic Ricci curvature `Ric4(W, Wbar) = (2 Ric1 - Ric2 - T o Tbar)(W, Wbar)`.
pub fn check_ricci_relations(
    entry: &GeometryEntry,
    points: &[ChartPoint],
    count: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<CheckReport>> {
    let m = &entry.metric;
    let (res, used) = pointwise_residuals(points, 5, |k, p| {
        let lm = LocalMetric::new(m, p, 2)?;
        let n = lm.n;
        let direct = sb_direct_from(&lm);
        let routes = tensor_residual(&direct, &sb_relation_from(&lm))?;
        let rs = ricci_from(&lm, &direct);
        let th = theta_from(&lm);
        let th1 = first_chern_ricci_from(&lm);
        let ths = ricci_from(&lm, &th);
        let first = tensor_residual(&rs.r1, &th1)?
            .merge(tensor_residual(&ths.r3, &th1)?)
            .merge(tensor_residual(&ths.r4, &th1)?);
        let cc = lambda_ddbar_omega(&lm)?;
        let ct = ComplexTensor::from_fn(th1.dims().to_vec(), th1.kinds().to_vec(), |x| {
            cc[x[0] * n + x[1]]
        });
        let second = tensor_residual(&rs.r2, &th1.add(&ct)?.sub(&rs.t_circ_tbar)?)?;
        let expected4 = th1.sub(&ct)?;
        let fourth =
            tensor_residual(&rs.r4, &expected4)?.merge(tensor_residual(&rs.r3, &expected4)?);
        let mut hol = Residual::default();
        for w in directions(seed ^ 0x62, k, n, count) {
            let lhs = eval11(&rs.r4, &w);
            hol = hol.merge(Residual {
                abs: holomorphic_ricci_identity_from(&rs, &w),
                scale: lhs.norm(),
            });
        }
        Ok(Some(vec![routes, first, second, fourth, hol]))
    })?;
    let names = [
        "sb-curvature-routes",
        "ricci-first-trace",
        "ricci-second-trace",
        "ricci-third-fourth-trace",
        "holomorphic-ricci-traces",
    ];
    Ok(names
        .iter()
        .zip(res)
        .map(|(nm, r)| report(nm, entry, None, r, used, tol))
        .collect())
}

/// Balanced residual `max(|delbar^* omega|, |d omega^{n-1}|)`: an identity for
/// metrics expected balanced, a margin above 0.1 for the non-balanced control.
pub fn check_balanced(
    entry: &GeometryEntry,
    points: &[ChartPoint],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let br = balanced_residual(&entry.metric, points)?;
    let regime = entry.metric.regime();
    let v = br.max();
    let r = if entry.kind == GeometryKind::NonBalanced {
        CheckReport::new(
            "balanced",
            &entry.name,
            CheckKind::InequalityMargin,
            v - 0.1,
            tol.for_regime(regime),
            regime,
        )
        .note("negative control: the residual must exceed 0.1")
    } else {
        CheckReport::new(
            "balanced",
            &entry.name,
            ID,
            v,
            tol.for_regime(regime).max(1e-5),
            regime,
        )
    };
    Ok(r.with("dbar_star_omega", br.dbar_star_omega)
        .with("d_omega_power", br.d_omega_power)
        .with("balanced_residual", v)
        .samples(points.len()))
}
