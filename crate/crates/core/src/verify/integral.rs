//! Integrated identities evaluated by quadrature over a compact geometry.

use super::{CheckKind, CheckReport, Tolerances};
use crate::charts::{GeometryEntry, Regime, ScalarField};
use crate::connections::LocalMetric;
use crate::curvature::{eval_quartic, sb_direct_from, theta_from};
use crate::hodge::{weak_laplacian_trace_check, ChernJets, Quadrature};
use crate::{Result, C64};
use serde::Serialize;

/// Integrals of the terms of the Chern-connection integral formula for an
/// eigenpair `(u, lambda)`, with `U = (du)^sharp`, `B = {C nabla^{1,0} du, du}`,
/// `A = {C nabla^{0,1} du, du}` and `T = C T(U, ., Ubar)`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct IntegralFormulaTerms {
    /// `lambda |du|^4`.
    pub lhs: f64,
    /// `Theta(U, Ubar, U, Ubar)`.
    pub theta: f64,
    /// `|du|^2 |del delbar u|^2`.
    pub grad_ddbar: f64,
    /// `|B - (lambda/2) u du|^2`.
    pub b_shifted: f64,
    /// `|B|^2`.
    pub b_sq: f64,
    /// `Re <T, B>`.
    pub torsion_b: f64,
    /// `Re <Tbar, A>`.
    pub torsion_a: f64,
    /// `R^SB(U, Ubar, U, Ubar)`.
    pub sb_quartic: f64,
    /// `|T|^2`.
    pub torsion_sq: f64,
    /// `integral of |du|^2`, which equals `(lambda/2) integral of u^2`.
    pub grad_sq: f64,
}

impl IntegralFormulaTerms {
    pub fn rhs(&self) -> f64 {
        self.theta + self.grad_ddbar + self.b_shifted + self.b_sq - self.torsion_b + self.torsion_a
    }

    /// `lambda int |du|^4 - int R^SB(U, Ubar, U, Ubar) - (1/2) ||T||^2`.
    pub fn inequality_margin(&self) -> f64 {
        self.lhs - self.sb_quartic - 0.5 * self.torsion_sq
    }
}

/// One quadrature pass over all terms.
pub fn integral_formula_terms(
    q: &Quadrature,
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: f64,
) -> Result<IntegralFormulaTerms> {
    let m = &entry.metric;
    let v = q.integrate_many(10, |p| {
        let lm = LocalMetric::new(m, p, 2)?;
        let n = lm.n;
        let uj = u.jet(p, 2)?;
        let cj = ChernJets::new(&lm, &uj);
        let g2 = lm.pair10(&cj.du, &cj.du).re;
        let up = lm.sharp(&cj.dbu);
        let theta = eval_quartic(&theta_from(&lm), &up).re;
        let sb = eval_quartic(&sb_direct_from(&lm), &up).re;
        let mut ddb = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        ddb += lm.gi(i, j)
                            * lm.gi(k, l)
                            * cj.u_hol_anti[i * n + l]
                            * cj.u_hol_anti[j * n + k].conj();
                    }
                }
            }
        }
        let b = cj.c10_pair(&lm);
        let uv = uj.value().re;
        let bm: Vec<C64> = b
            .iter()
            .zip(&cj.du)
            .map(|(x, d)| x - d * (0.5 * lambda * uv))
            .collect();
        let t = cj.torsion_uu(&lm);
        let a = cj.c01_pair(&lm);
        let mut ta = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                ta += lm.gi(j, i) * t[i].conj() * a[j].conj();
            }
        }
        let r = |x: f64| C64::new(x, 0.0);
        Ok(vec![
            r(lambda * g2 * g2),
            r(theta),
            r(g2 * ddb.re),
            lm.pair10(&bm, &bm),
            lm.pair10(&b, &b),
            r(lm.pair10(&t, &b).re),
            r(ta.re),
            r(sb),
            lm.pair10(&t, &t),
            r(g2),
        ])
    })?;
    Ok(IntegralFormulaTerms {
        lhs: v[0].re,
        theta: v[1].re,
        grad_ddbar: v[2].re,
        b_shifted: v[3].re,
        b_sq: v[4].re,
        torsion_b: v[5].re,
        torsion_a: v[6].re,
        sb_quartic: v[7].re,
        torsion_sq: v[8].re,
        grad_sq: v[9].re,
    })
}

fn rel(l: f64, r: f64) -> f64 {
    let s = l.abs().max(r.abs());
    if s == 0.0 {
        0.0
    } else {
        (l - r).abs() / s
    }
}

fn quad_regime(entry: &GeometryEntry, u: &ScalarField) -> Regime {
    super::regime_of(&entry.metric, Some(u))
}

/// The integral formula `lambda int |du|^4 = int Theta(U..) + int |du|^2 |del delbar u|^2 + ||B - (lambda/2) u du||^2
/// + ||B||^2 - Re(T, B) + Re(Tbar, A)`, reported as `|L - R| / max(|L|, |R|)`.
pub fn check_integral_identity(
    q: &Quadrature,
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: f64,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let t = integral_formula_terms(q, entry, u, lambda)?;
    let regime = quad_regime(entry, u);
    Ok(CheckReport::new(
        "integral-identity",
        &entry.name,
        CheckKind::IdentityResidual,
        rel(t.lhs, t.rhs()),
        tol.for_regime(regime),
        regime,
    )
    .with("lhs", t.lhs)
    .with("rhs", t.rhs())
    .with("theta", t.theta)
    .with("grad_ddbar", t.grad_ddbar)
    .with("b_shifted", t.b_shifted)
    .with("b_sq", t.b_sq)
    .with("torsion_b", t.torsion_b)
    .with("torsion_a", t.torsion_a)
    .with("lambda1", lambda)
    .with("quadrature", q.resolution as f64)
    .samples(q.nodes.len()))
}

/// `lambda int |du|^4 >= int R^SB(U, Ubar, U, Ubar) + (1/2) ||T||^2` as a margin.
pub fn check_integral_inequality(
    q: &Quadrature,
    entry: &GeometryEntry,
    u: &ScalarField,
    lambda: f64,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let t = integral_formula_terms(q, entry, u, lambda)?;
    let regime = quad_regime(entry, u);
    Ok(CheckReport::new(
        "integral-inequality",
        &entry.name,
        CheckKind::InequalityMargin,
        t.inequality_margin(),
        tol.for_regime(regime),
        regime,
    )
    .with("lhs", t.lhs)
    .with("sb_quartic", t.sb_quartic)
    .with("torsion_sq", t.torsion_sq)
    .with("lambda1", lambda)
    .samples(q.nodes.len()))
}

/// Weak form `(du, dF) = -int F tr_omega(sqrt(-1) del delbar u)` maximized over test functions.
pub fn check_laplacian_trace_weak(
    q: &Quadrature,
    entry: &GeometryEntry,
    u: &ScalarField,
    tests: &[ScalarField],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for f in tests {
        worst = worst.max(weak_laplacian_trace_check(q, &entry.metric, u, f)?.residual);
    }
    let regime = quad_regime(entry, u);
    Ok(CheckReport::new(
        "laplacian-trace-weak",
        &entry.name,
        CheckKind::IdentityResidual,
        worst,
        tol.for_regime(regime),
        regime,
    )
    .with("test_functions", tests.len() as f64)
    .samples(q.nodes.len()))
}
