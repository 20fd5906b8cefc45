//! Machine checks of the pointwise identities, integral identities and
//! eigenvalue bounds, each producing a [`CheckReport`].
//!
//! Identity checks report a relative residual and pass when it is at most the
//! tolerance; inequality checks report the margin `LHS - RHS` and pass when it
//! is at least `-tolerance`. A check whose hypotheses fail on the geometry is
//! reported as not applicable rather than failed.

mod bounds;
mod integral;
mod plot;
mod pointwise;
mod refine;
mod series;
mod suite;

pub use bounds::{
    check_bounds, gradient_hsc_min, liyau_bound, liyau_formula_report, liyau_gradient_sides,
    liyau_rhs, log_gradient_lower_bound, scale_covariance, BoundInputs, LiYauBound,
    LogGradientInputs,
};
pub use integral::{
    check_integral_identity, check_integral_inequality, check_laplacian_trace_weak,
    integral_formula_terms, IntegralFormulaTerms,
};
pub use plot::{plot_rows, PlotRow};
pub use pointwise::{
    check_arcsin_gradient, check_balanced, check_bochner, check_hessian_trace, check_hsc_bridge,
    check_laplacian_trace, check_liyau_identities, check_q_and_rigidity, check_ricci_relations,
    check_sb_quartic, eigenfunction_range,
};
pub use refine::{refinement_study, REFINEMENT_FLOOR, REFINEMENT_RATIO};
pub use series::{
    zhongyang_coefficient, zhongyang_psi, zhongyang_series, zhongyang_series_reports,
};
pub use suite::{
    default_quadrature, eigenpair, probe_function, run_suite, test_functions, Eigenpair, Suite,
    SuiteInputs,
};

use crate::charts::{ChartPoint, GeometryEntry, MetricField, Regime, ScalarField};
use crate::sampling::halton_points;
use crate::{Result, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    IdentityResidual,
    InequalityMargin,
    SeriesValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub geometry: String,
    pub kind: CheckKind,
    /// Residual, margin, or evaluated series value depending on `kind`.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub status: CheckStatus,
    pub regime: String,
    pub sample_count: usize,
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CheckReport {
    /// For series values `expected` goes in `details["expected"]` and the check
    /// passes when `|value - expected| <= tolerance`.
    pub fn new(
        name: &str,
        geometry: &str,
        kind: CheckKind,
        value: f64,
        tolerance: f64,
        regime: Regime,
    ) -> Self {
        let mut r = CheckReport {
            name: name.into(),
            geometry: geometry.into(),
            kind,
            value,
            tolerance,
            passed: false,
            status: CheckStatus::Fail,
            regime: regime.label(),
            sample_count: 0,
            details: BTreeMap::new(),
            notes: Vec::new(),
        };
        r.judge();
        r
    }

    pub fn series(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        CheckReport::new(
            name,
            "-",
            CheckKind::SeriesValue,
            value,
            tolerance,
            Regime::Analytic,
        )
        .with("expected", expected)
    }

    pub fn not_applicable(name: &str, geometry: &str, kind: CheckKind, reason: &str) -> Self {
        CheckReport {
            name: name.into(),
            geometry: geometry.into(),
            kind,
            value: 0.0,
            tolerance: 0.0,
            passed: true,
            status: CheckStatus::NotApplicable,
            regime: "-".into(),
            sample_count: 0,
            details: BTreeMap::new(),
            notes: vec![reason.into()],
        }
    }

    fn judge(&mut self) {
        if self.status == CheckStatus::NotApplicable {
            return;
        }
        self.passed = self.value.is_finite()
            && match self.kind {
                CheckKind::IdentityResidual => self.value <= self.tolerance,
                CheckKind::InequalityMargin => self.value >= -self.tolerance,
                CheckKind::SeriesValue => {
                    let e = self.details.get("expected").copied().unwrap_or(f64::NAN);
                    (self.value - e).abs() <= self.tolerance
                }
            };
        self.status = if self.passed {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.into(), v);
        self.judge();
        self
    }

    pub fn note(mut self, s: &str) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }

    /// Keeps the computed value for the record but marks the check not applicable.
    pub fn demote(mut self, reason: &str) -> Self {
        self.details.insert("observed_value".into(), self.value);
        self.value = 0.0;
        self.passed = true;
        self.status = CheckStatus::NotApplicable;
        self.notes.push(reason.into());
        self
    }

    /// Folds a further residual into the value (identity checks).
    pub fn absorb(mut self, key: &str, v: f64) -> Self {
        self.details.insert(key.into(), v);
        self.value = if v.is_nan() { v } else { self.value.max(v) };
        self.judge();
        self
    }

    pub fn is_applicable(&self) -> bool {
        self.status != CheckStatus::NotApplicable
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub analytic: f64,
    pub finite_difference: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            analytic: 1e-6,
            finite_difference: 1e-3,
        }
    }
}

impl Tolerances {
    pub fn uniform(t: f64) -> Self {
        Tolerances {
            analytic: t,
            finite_difference: t,
        }
    }

    pub fn for_regime(&self, r: Regime) -> f64 {
        match r {
            Regime::Analytic => self.analytic,
            Regime::FiniteDifference { .. } => self.finite_difference,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    /// Quasi-random sample points per pointwise check.
    pub points: usize,
    pub seed: u64,
    /// Quadrature resolution; `None` picks a per-geometry default.
    pub quadrature: Option<usize>,
    /// Random unit directions per point for curvature sampling.
    pub directions: usize,
    pub tol: Tolerances,
    pub subdivisions: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            points: 200,
            seed: 0,
            quadrature: None,
            directions: 8,
            tol: Tolerances::default(),
            subdivisions: crate::spectral::DEFAULT_SUBDIVISIONS,
        }
    }
}

/// Fraction of each side of the sample box left out at both ends.
pub const SAMPLE_MARGIN: f64 = 0.02;
/// Points with `u^2 > 1 - POLE_MARGIN` are skipped where `theta`- or `v`-based quantities degenerate.
pub const POLE_MARGIN: f64 = 1e-6;

/// Halton points in the geometry's sample box; the seed selects the start of the sequence.
pub fn sample_points(entry: &GeometryEntry, count: usize, seed: u64) -> Vec<ChartPoint> {
    halton_points(
        &entry.sample_box,
        count,
        SAMPLE_MARGIN,
        1 + (seed % (1 << 32)) * 7919,
    )
}

/// Finite differences anywhere in the inputs make the whole check finite-difference.
pub fn regime_of(m: &MetricField, u: Option<&ScalarField>) -> Regime {
    match (m.regime(), u) {
        (Regime::Analytic, Some(f)) if !f.has_analytic_derivatives() => {
            Regime::FiniteDifference { step: m.fd_step() }
        }
        (r, _) => r,
    }
}

/// Max absolute residual and max term size of one identity.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Residual {
    pub abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn pair(l: C64, r: C64) -> Self {
        Residual {
            abs: (l - r).norm(),
            scale: l.norm().max(r.norm()),
        }
    }

    pub fn merge(self, o: Residual) -> Self {
        Residual {
            abs: self.abs.max(o.abs),
            scale: self.scale.max(o.scale),
        }
    }

    /// `|L - R| / max(1, |L|, |R|)`.
    pub fn relative(&self) -> f64 {
        self.abs / self.scale.max(1.0)
    }
}

/// Evaluates `f(index, point)` at each point; `None` skips the point, otherwise one
/// residual per identity. Returns the per-identity maxima and the number of
/// points used.
pub(crate) fn pointwise_residuals(
    points: &[ChartPoint],
    k: usize,
    f: impl Fn(usize, &ChartPoint) -> Result<Option<Vec<Residual>>> + Sync,
) -> Result<(Vec<Residual>, usize)> {
    let per = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| f(i, p))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Residual::default(); k];
    let mut used = 0;
    for v in per.into_iter().flatten() {
        used += 1;
        for (acc, r) in out.iter_mut().zip(v) {
            *acc = acc.merge(r);
        }
    }
    Ok((out, used))
}
