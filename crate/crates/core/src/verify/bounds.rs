//! First-eigenvalue lower bounds evaluated against computed spectra, and the
//! formula-level evaluators of the Li-Yau argument.

use super::{CheckKind, CheckReport, Tolerances, POLE_MARGIN};
use crate::charts::{flat_torus_scaled, ChartPoint, GeometryEntry, Regime, ScalarField};
use crate::connections::LocalMetric;
use crate::curvature::{hsc_from, sb_direct_from, CurvatureExtrema};
use crate::spectral::{SpectralMethod, SpectralResult};
use crate::{LabError, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{E, PI};

const EQUALITY_TOL: f64 = 1e-6;
const MARGIN: CheckKind = CheckKind::InequalityMargin;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiYauBound {
    /// `e^{-alpha} (alpha^2 / (2(3n-2) D^2) - K)`.
    pub bound: f64,
    /// `2 / ((3n-2) e^2 D^2)`, present when `K = 0`.
    pub closed_form: Option<f64>,
    /// The maximizing shift `a = 1 / (1 - e^{-alpha})`.
    pub a: f64,
    pub alpha: f64,
}

/// Li-Yau type lower bound for `n >= 3`, `K >= 0`, `D > 0`, with
/// `alpha = 1 + sqrt(1 + 2(3n-2) K D^2)`.
pub fn liyau_bound(n: usize, k: f64, d: f64) -> Result<LiYauBound> {
    if n < 3 {
        return Err(LabError::InvalidArgument(format!(
            "the Li-Yau bound needs n >= 3, got {n}"
        )));
    }
    if !(k >= 0.0) || !(d > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "need K >= 0 and D > 0, got K = {k}, D = {d}"
        )));
    }
    let c = (3 * n - 2) as f64;
    let alpha = 1.0 + (1.0 + 2.0 * c * k * d * d).sqrt();
    let ea = (-alpha).exp();
    Ok(LiYauBound {
        bound: ea * (alpha * alpha / (2.0 * c * d * d) - k),
        closed_form: (k == 0.0).then(|| 2.0 / (c * E * E * d * d)),
        a: 1.0 / (1.0 - ea),
        alpha,
    })
}

/// `((a-1)/a) ((log(a/(a-1)))^2 / (2(3n-2) D^2) - K)`, the bound before optimizing over `a > 1`.
pub fn liyau_rhs(n: usize, k: f64, d: f64, a: f64) -> Result<f64> {
    if n < 3 || !(a > 1.0) || !(d > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "need n >= 3, a > 1, D > 0; got n = {n}, a = {a}, D = {d}"
        )));
    }
    let l = (a / (a - 1.0)).ln();
    Ok((a - 1.0) / a * (l * l / (2.0 * (3 * n - 2) as f64 * d * d) - k))
}

/// Both sides of `3(n-1)K + (3n-2) a lambda / (a+u) - lambda <= (3n-2)(K + a lambda / (a-1))`,
/// valid for `u >= -1`.
pub fn liyau_gradient_sides(n: usize, k: f64, lambda: f64, a: f64, u: f64) -> Result<(f64, f64)> {
    if n < 3 || !(a > 1.0) || !(u >= -1.0) {
        return Err(LabError::InvalidArgument(format!(
            "need n >= 3, a > 1, u >= -1; got n = {n}, a = {a}, u = {u}"
        )));
    }
    let c = (3 * n - 2) as f64;
    let lhs = 3.0 * (n - 1) as f64 * k + c * a * lambda / (a + u) - lambda;
    Ok((lhs, c * (k + a * lambda / (a - 1.0))))
}

/// Pointwise data entering the lower bound for `tr_omega(sqrt(-1) del delbar P)`.
#[derive(Clone, Copy, Debug)]
pub struct LogGradientInputs {
    pub n: usize,
    /// `Ric(V, Vbar)` with `V = (dv)^sharp`.
    pub ric: f64,
    pub p: f64,
    pub lambda: f64,
    pub a: f64,
    pub u: f64,
    /// `|del P|^2`.
    pub grad_p_sq: f64,
    /// `Re <del P, del v>`.
    pub re_dp_dv: f64,
}

/// `Ric + P^2/(3(n-1)) + (lambda/(3(n-1)) - (3n-2) a lambda / (3(n-1)(a+u))) P + |del P|^2/(4P)
/// + (2/(n-1)) ((2-n) P + lambda/2 - a lambda/(2(a+u))) Re<del P, del v> / P`.
pub fn log_gradient_lower_bound(x: &LogGradientInputs) -> Result<f64> {
    if x.n < 3 || !(x.p > 0.0) || !(x.a + x.u > 0.0) {
        return Err(LabError::InvalidArgument(format!(
            "need n >= 3, P > 0 and a + u > 0; got n = {}, P = {}",
            x.n, x.p
        )));
    }
    let n1 = (x.n - 1) as f64;
    let c = (3 * x.n - 2) as f64;
    let s = x.a * x.lambda / (x.a + x.u);
    Ok(x.ric
        + x.p * x.p / (3.0 * n1)
        + (x.lambda / (3.0 * n1) - c * s / (3.0 * n1)) * x.p
        + x.grad_p_sq / (4.0 * x.p)
        + 2.0 / n1 * ((2.0 - x.n as f64) * x.p + 0.5 * x.lambda - 0.5 * s) * x.re_dp_dv / x.p)
}

/// Minimum of `HSC(U)` with `U = (du)^sharp` over the points where `du` is not negligible.
pub fn gradient_hsc_min(
    entry: &GeometryEntry,
    u: &ScalarField,
    points: &[ChartPoint],
) -> Result<Option<f64>> {
    let m = &entry.metric;
    let vals = points
        .par_iter()
        .map(|p| -> Result<Option<f64>> {
            let lm = LocalMetric::new(m, p, 2)?;
            let uj = u.jet(p, 1)?;
            let dbu: Vec<_> = (0..lm.n).map(|k| uj.dzb(k).value()).collect();
            let up = lm.sharp(&dbu);
            if up.iter().all(|z| z.norm() < POLE_MARGIN) {
                return Ok(None);
            }
            Ok(Some(hsc_from(&lm, &sb_direct_from(&lm), &up)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.into_iter().flatten().reduce(f64::min))
}

/// Everything the bound panel needs about one geometry.
#[derive(Clone, Copy)]
pub struct BoundInputs<'a> {
    pub entry: &'a GeometryEntry,
    pub spectral: Option<&'a SpectralResult>,
    pub extrema: Option<&'a CurvatureExtrema>,
    /// `min HSC((du)^sharp)` over sample points.
    pub gradient_hsc_min: Option<f64>,
}

struct Panel<'a> {
    geometry: &'a str,
    lambda: f64,
    mesh_lambda: Option<f64>,
    tol: f64,
    regime: Regime,
}

impl Panel<'_> {
    fn report(&self, name: &str, bound: f64) -> CheckReport {
        let mut r = CheckReport::new(
            name,
            self.geometry,
            MARGIN,
            self.lambda - bound,
            self.tol,
            self.regime,
        )
        .with("lambda1", self.lambda)
        .with("bound", bound);
        if let Some(l) = self.mesh_lambda {
            r = r.with("lambda1_mesh", l).with("margin_mesh", l - bound);
        }
        r
    }
}

const NAMES: [&str; 6] = [
    "lichnerowicz",
    "zhong-yang",
    "zhong-yang-nonneg",
    "hsc-bound",
    "hsc-gradient-bound",
    "li-yau",
];

/// Margins `lambda1 - bound` for each bound whose curvature hypothesis holds on
/// the sampled extrema. `lambda1` is the exact value when the catalogue knows
/// it, otherwise the computed one; a mesh value is recorded alongside.
pub fn check_bounds(inp: BoundInputs, tol: &Tolerances) -> Vec<CheckReport> {
    let e = inp.entry;
    let na = |reason: &str| -> Vec<CheckReport> {
        NAMES
            .iter()
            .map(|nm| CheckReport::not_applicable(nm, &e.name, MARGIN, reason))
            .collect()
    };
    if !e.is_balanced_expected {
        return na("the metric is not balanced");
    }
    let lambda = match (e.exact_lambda1, inp.spectral) {
        (Some(l), _) => l,
        (None, Some(s)) => s.lambda1,
        (None, None) => return na("no spectrum registered for this geometry"),
    };
    let Some(ext) = inp.extrema else {
        return na("no curvature extrema available");
    };
    let regime = e.metric.regime();
    let panel = Panel {
        geometry: &e.name,
        lambda,
        mesh_lambda: inp
            .spectral
            .filter(|s| s.method == SpectralMethod::MeshCotangent)
            .map(|s| s.lambda1),
        tol: tol.for_regime(regime),
        regime,
    };
    let n = e.n();
    let nf = n as f64;
    let diameter = e.diameter.or(inp.spectral.map(|s| s.diameter));
    let ric = ext.min_hol_ricci;
    let small = panel.tol;
    let mut out = Vec::new();

    let k = ric / (2.0 * nf - 1.0);
    out.push(if k > small {
        let mut r = panel
            .report("lichnerowicz", 2.0 * nf * k)
            .with("K", k)
            .with("min_hol_ricci", ric);
        if r.value.abs() <= EQUALITY_TOL {
            r = r.with("equality", 1.0).note("equality");
            if let Some(d) = diameter {
                r = r
                    .with("d_sqrt_k", d * k.sqrt())
                    .with("d_sqrt_k_minus_pi", d * k.sqrt() - PI);
            }
        }
        r
    } else {
        CheckReport::not_applicable(
            "lichnerowicz",
            &e.name,
            MARGIN,
            "holomorphic Ricci curvature is not positive",
        )
        .with("min_hol_ricci", ric)
    });

    out.push(match diameter {
        Some(d) if ric > small => panel
            .report("zhong-yang", PI * PI / (d * d))
            .with("K", ric)
            .with("diameter", d)
            .note("hypothesis read with unit-normalized directions"),
        Some(_) => CheckReport::not_applicable(
            "zhong-yang",
            &e.name,
            MARGIN,
            "holomorphic Ricci curvature is not positive",
        )
        .with("min_hol_ricci", ric),
        None => CheckReport::not_applicable("zhong-yang", &e.name, MARGIN, "no diameter"),
    });

    out.push(match diameter {
        Some(d) if ric >= -small => panel
            .report("zhong-yang-nonneg", PI * PI / (d * d))
            .with("min_hol_ricci", ric)
            .with("diameter", d),
        Some(_) => CheckReport::not_applicable(
            "zhong-yang-nonneg",
            &e.name,
            MARGIN,
            "holomorphic Ricci curvature is negative somewhere",
        )
        .with("min_hol_ricci", ric),
        None => CheckReport::not_applicable("zhong-yang-nonneg", &e.name, MARGIN, "no diameter"),
    });

    let hsc = ext.min_hsc;
    out.push(if hsc > small {
        panel.report("hsc-bound", hsc).with("K", hsc)
    } else {
        CheckReport::not_applicable(
            "hsc-bound",
            &e.name,
            MARGIN,
            "holomorphic sectional curvature is not positive",
        )
        .with("min_hsc", hsc)
    });

    out.push(match inp.gradient_hsc_min {
        Some(g) if g > small => panel.report("hsc-gradient-bound", g).with("K", g),
        Some(g) => CheckReport::not_applicable(
            "hsc-gradient-bound",
            &e.name,
            MARGIN,
            "gradient-direction sectional curvature is not positive",
        )
        .with("min_hsc_gradient", g),
        None => CheckReport::not_applicable(
            "hsc-gradient-bound",
            &e.name,
            MARGIN,
            "no eigenfunction gradient available",
        ),
    });

    out.push(match diameter {
        Some(d) if n >= 3 => {
            let kk = (-ric).max(0.0);
            match liyau_bound(n, kk, d) {
                Ok(b) => panel
                    .report("li-yau", b.bound)
                    .with("K", kk)
                    .with("a", b.a)
                    .with("alpha", b.alpha),
                Err(err) => {
                    CheckReport::not_applicable("li-yau", &e.name, MARGIN, &err.to_string())
                }
            }
        }
        Some(_) => CheckReport::not_applicable(
            "li-yau",
            &e.name,
            MARGIN,
            "needs complex dimension at least 3",
        ),
        None => CheckReport::not_applicable("li-yau", &e.name, MARGIN, "no diameter"),
    });
    out
}

/// The general Li-Yau formula at `K = 0` against the closed form `2 / ((3n-2) e^2 D^2)`.
pub fn liyau_formula_report(n: usize, d: f64) -> Result<CheckReport> {
    let b = liyau_bound(n, 0.0, d)?;
    let closed = b.closed_form.expect("K = 0");
    Ok(CheckReport::series(
        "li-yau-closed-form",
        b.bound,
        closed,
        4.0 * f64::EPSILON * closed,
    )
    .with("n", n as f64)
    .with("diameter", d))
}

/// Zhong-Yang margin of a flat torus, from its catalogue data.
fn torus_margin(e: &GeometryEntry) -> Result<(f64, f64, f64)> {
    let l = e
        .exact_lambda1
        .ok_or_else(|| LabError::Unsupported("torus without eigenvalue".into()))?;
    let d = e
        .diameter
        .ok_or_else(|| LabError::Unsupported("torus without diameter".into()))?;
    Ok((l, d, l - PI * PI / (d * d)))
}

/// Multiplying the metric by `c` divides `lambda1` by `c`, multiplies `D` by
/// `sqrt c` and divides bound margins by `c`; checked on the square torus with `c = 4`.
pub fn scale_covariance(tol: &Tolerances) -> Result<CheckReport> {
    let c = 4.0;
    let base = flat_torus_scaled(1, 2.0 * PI, 1.0)?;
    let scaled = flat_torus_scaled(1, 2.0 * PI, c)?;
    let (l0, d0, m0) = torus_margin(&base)?;
    let (l1, d1, m1) = torus_margin(&scaled)?;
    let rl = (l1 - l0 / c).abs() / l0;
    let rd = (d1 - d0 * c.sqrt()).abs() / d0;
    let rm = (m1 - m0 / c).abs() / m0.abs().max(1.0);
    // the metric itself: h scales by c exactly
    let p = base.origin();
    let h0 = base.metric.eval(&p)?;
    let h1 = scaled.metric.eval(&p)?;
    let rh = (h1.get(0, 0) - h0.get(0, 0) * c).norm() / h0.get(0, 0).norm();
    Ok(CheckReport::new(
        "scale-covariance",
        &scaled.name,
        CheckKind::IdentityResidual,
        rl.max(rd).max(rm).max(rh),
        tol.analytic,
        Regime::Analytic,
    )
    .with("scale", c)
    .with("lambda1_ratio", l1 / l0)
    .with("diameter_ratio", d1 / d0)
    .with("margin_ratio", m1 / m0))
}
