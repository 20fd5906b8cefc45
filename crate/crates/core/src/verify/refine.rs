//! Convergence of identity residuals under one refinement step.

use super::{CheckKind, CheckReport};
use crate::charts::Regime;

/// Coarse residuals below this are at round-off and cannot shrink further.
pub const REFINEMENT_FLOOR: f64 = 1e-11;
/// Required ratio `fine / coarse`.
pub const REFINEMENT_RATIO: f64 = 0.5;

/// Reports `fine / coarse` for residuals of `name` at two resolutions; passes
/// when the residual at least halves. `step` describes the refinement.
pub fn refinement_study(
    name: &str,
    geometry: &str,
    coarse: f64,
    fine: f64,
    step: &str,
) -> CheckReport {
    let label = format!("refinement:{name}");
    let at_floor = coarse.abs() < REFINEMENT_FLOOR && fine.abs() < REFINEMENT_FLOOR;
    let ratio = if at_floor { 0.0 } else { fine / coarse };
    let mut r = CheckReport::new(
        &label,
        geometry,
        CheckKind::IdentityResidual,
        ratio,
        REFINEMENT_RATIO,
        Regime::Analytic,
    )
    .with("coarse", coarse)
    .with("fine", fine)
    .note(step);
    r.regime = "refinement".into();
    if at_floor {
        r = r.note("at round-off");
    }
    r
}
