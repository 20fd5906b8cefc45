//! Per-point quantities of an eigenpair for plot export.

use super::pointwise::{first_derivs, grad_sq, hessian_norms, ArcsinNormalization};
use super::{Eigenpair, POLE_MARGIN};
use crate::charts::{ChartPoint, GeometryEntry};
use crate::connections::{hessians_from, LocalMetric};
use crate::curvature::{eval11, ricci_from, sb_direct_from};
use crate::hodge::trace_ddbar;
use crate::{Result, C64};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct PlotRow {
    /// Real chart coordinates `x^1, y^1, x^2, ...`.
    pub coords: Vec<f64>,
    pub u: f64,
    /// `|du|^2 = h^{i jbar} u_i u_jbar`.
    pub grad_sq: f64,
    /// `|du|^2 + (lambda / 4n) u^2`.
    pub q: f64,
    /// `|dy|^2 / (1 - y^2)` for the normalized `y`; `None` near `|y| = 1` or without a known range.
    pub p: Option<f64>,
    /// Absolute residual of the Bochner formula for `|du|^2`.
    pub bochner_residual: f64,
}

pub fn plot_rows(
    entry: &GeometryEntry,
    pair: &Eigenpair,
    points: &[ChartPoint],
) -> Result<Vec<PlotRow>> {
    let m = &entry.metric;
    let n = entry.n() as f64;
    let lambda = pair.lambda;
    let norm = pair.range.map(ArcsinNormalization::new).transpose()?;
    points
        .par_iter()
        .map(|pt| {
            let lm = LocalMetric::new(m, pt, 2)?;
            let uj = pair.u.jet(pt, 3)?;
            let uv = uj.value().re;
            let f = grad_sq(&lm, &uj);
            let g2 = f.value().re;
            let (_, dbu) = first_derivs(&uj, lm.n);
            let up = lm.sharp(&dbu);
            let ric = eval11(&ricci_from(&lm, &sb_direct_from(&lm)).r4, &up);
            let (tn, sn) = hessian_norms(&lm, &hessians_from(&lm, &uj));
            let lhs = -trace_ddbar(&lm, &f);
            let rhs = -ric + f.value() * lambda - C64::new(tn + sn, 0.0);
            let p = match norm {
                Some(nm) => {
                    let y = nm.apply(&uj.truncate(1));
                    let yv = y.value().re;
                    (yv.abs() < 1.0 - POLE_MARGIN)
                        .then(|| grad_sq(&lm, &y).value().re / (1.0 - yv * yv))
                }
                None => None,
            };
            Ok(PlotRow {
                coords: pt.real(),
                u: uv,
                grad_sq: g2,
                q: g2 + lambda / (4.0 * n) * uv * uv,
                p,
                bochner_residual: (lhs - rhs).norm(),
            })
        })
        .collect()
}
