//! Which checks run on which geometry, and in what order.

use super::bounds::{
    check_bounds, gradient_hsc_min, liyau_formula_report, scale_covariance, BoundInputs,
};
use super::integral::{
    check_integral_identity, check_integral_inequality, check_laplacian_trace_weak,
};
use super::pointwise::{
    check_arcsin_gradient, check_balanced, check_bochner, check_hessian_trace, check_hsc_bridge,
    check_laplacian_trace, check_liyau_identities, check_q_and_rigidity, check_ricci_relations,
    check_sb_quartic, eigenfunction_range,
};
use super::refine::refinement_study;
use super::series::zhongyang_series_reports;
use super::{sample_points, CheckReport, Tolerances, VerifyConfig};
use crate::charts::{ChartPoint, GeometryEntry, GeometryKind, ScalarField};
use crate::curvature::{curvature_extrema, CurvatureExtrema, Sampler};
use crate::hodge::Quadrature;
use crate::jet::Jet;
use crate::sampling::{uniform, SeedExt, SeededRng};
use crate::spectral::{spectrum, SpectralResult};
use crate::{LabError, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    Bounds,
    All,
}

impl FromStr for Suite {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "bounds" => Ok(Suite::Bounds),
            "all" => Ok(Suite::All),
            _ => Err(LabError::InvalidArgument(format!(
                "unknown suite {s}; expected identities, bounds or all"
            ))),
        }
    }
}

/// An eigenfunction with its eigenvalue. `is_first` is false for probe pairs
/// whose eigenvalue need not be `lambda1`.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub u: ScalarField,
    pub lambda: f64,
    pub range: Option<(f64, f64)>,
    pub label: String,
    pub is_first: bool,
}

/// `cos(2 pi Re z^2)` on the Iwasawa manifold: lattice-periodic, independent of
/// `z^3`, with `Delta_d u = 2 pi^2 u`.
pub fn probe_function(entry: &GeometryEntry) -> Option<Eigenpair> {
    match entry.kind {
        GeometryKind::Iwasawa => Some(Eigenpair {
            u: ScalarField::from_expression("cos(2 pi Re z^2)", |z| {
                (&z[1].re() * (2.0 * PI)).cos()
            }),
            lambda: 2.0 * PI * PI,
            range: Some((-1.0, 1.0)),
            label: "probe eigenpair cos(2 pi Re z^2), not necessarily the first".into(),
            is_first: false,
        }),
        _ => None,
    }
}

/// The catalogue eigenpair when there is one, else a probe pair.
pub fn eigenpair(entry: &GeometryEntry) -> Option<Eigenpair> {
    match (&entry.eigenfunction, entry.exact_lambda1) {
        (Some(u), Some(l)) => Some(Eigenpair {
            u: u.clone(),
            lambda: l,
            range: eigenfunction_range(entry),
            label: format!("eigenfunction {}", u.label),
            is_first: true,
        }),
        _ => probe_function(entry),
    }
}

fn real_coord(z: &[Jet], j: usize) -> Jet {
    if j % 2 == 0 {
        z[j / 2].re()
    } else {
        z[j / 2].im()
    }
}

/// `cos(k m.x + phi)` over the first `dims` real coordinates.
fn lattice_wave(k: f64, m: Vec<i32>, phi: f64) -> ScalarField {
    let label = format!("cos({k} {m:?}.x + {phi})");
    ScalarField::from_expression(&label, move |z| {
        let mut acc = z[0].zero_like();
        for (j, &mj) in m.iter().enumerate() {
            if mj != 0 {
                acc += &(&real_coord(z, j) * (k * mj as f64));
            }
        }
        (&acc + phi).cos()
    })
}

fn lattice_waves(k: f64, dims: usize, rng: &mut SeededRng) -> Vec<ScalarField> {
    (0..5)
        .map(|_| {
            let mut m: Vec<i32> = (0..dims).map(|_| rng.gen_range(-2..=2)).collect();
            if m.iter().all(|&x| x == 0) {
                m[0] = 1;
            }
            lattice_wave(k, m, uniform(rng, 0.0, 2.0 * PI))
        })
        .collect()
}

/// Restrictions of linear and quadratic functions on the round sphere, in the
/// stereographic chart.
fn sphere_polynomials(rng: &mut SeededRng) -> Vec<ScalarField> {
    let c: Vec<f64> = (0..4).map(|_| uniform(rng, -1.0, 1.0)).collect();
    let xyz = |z: &[Jet]| {
        let r2 = &z[0] * &z[0].conj();
        let s = (&r2 + 1.0).recip();
        let x = &(&z[0].re() * &s) * 2.0;
        let y = &(&z[0].im() * &s) * 2.0;
        let w = &(&(-&r2) + 1.0) * &s;
        (x, y, w)
    };
    vec![
        ScalarField::from_expression("X", move |z| xyz(z).0),
        ScalarField::from_expression("Y", move |z| xyz(z).1),
        ScalarField::from_expression("XZ", move |z| {
            let (x, _, w) = xyz(z);
            &x * &w
        }),
        ScalarField::from_expression("X^2 - Y^2 + Z/2", move |z| {
            let (x, y, w) = xyz(z);
            &(&(&x * &x) - &(&y * &y)) + &(&w * 0.5)
        }),
        ScalarField::from_expression("random quadric", move |z| {
            let (x, y, w) = xyz(z);
            let a = &(&x * c[0]) + &(&y * c[1]);
            let b = &(&(&w * &w) * c[2]) + &(&(&x * &y) * c[3]);
            &a + &b
        }),
    ]
}

/// Smooth rational functions `Re(p(z)) / (1 + |z|^2)` for charts without global structure.
fn rational_functions(n: usize, rng: &mut SeededRng) -> Vec<ScalarField> {
    (0..5)
        .map(|t| {
            let c: Vec<f64> = (0..2 * n + 1).map(|_| uniform(rng, -1.0, 1.0)).collect();
            ScalarField::from_expression(&format!("rational {t}"), move |z| {
                let mut r2 = z[0].zero_like();
                let mut num = z[0].constant_like(crate::C64::new(c[2 * n], 0.0));
                for k in 0..n {
                    r2 += &(&z[k] * &z[k].conj());
                    num += &(&z[k].re() * c[2 * k]);
                    num += &(&(&z[k] * &z[k]).im() * c[2 * k + 1]);
                }
                &num / &(&r2 + 1.0)
            })
        })
        .collect()
}

/// Five real test functions suited to the geometry; periodic on compact quotients.
pub fn test_functions(entry: &GeometryEntry, seed: u64) -> Vec<ScalarField> {
    let mut rng = SeededRng::new(seed ^ 0x7E57_F00D);
    match entry.kind {
        GeometryKind::FubiniStudy { n: 1 } => sphere_polynomials(&mut rng),
        GeometryKind::FlatTorus { n, period, .. } => {
            lattice_waves(2.0 * PI / period, 2 * n, &mut rng)
        }
        GeometryKind::Iwasawa => lattice_waves(2.0 * PI, 4, &mut rng),
        _ => rational_functions(entry.n(), &mut rng),
    }
}

/// Quadrature resolution used when the configuration does not set one.
pub fn default_quadrature(entry: &GeometryEntry) -> Option<usize> {
    match entry.kind {
        GeometryKind::FubiniStudy { n: 1 } => Some(48),
        GeometryKind::FlatTorus { n: 1, .. } => Some(16),
        GeometryKind::FlatTorus { n: 2, .. } => Some(8),
        GeometryKind::FlatTorus { .. } => Some(6),
        GeometryKind::Iwasawa => Some(8),
        _ => None,
    }
}

/// Precomputed inputs; missing spectral data or extrema are computed on demand.
#[derive(Clone, Copy)]
pub struct SuiteInputs<'a> {
    pub entry: &'a GeometryEntry,
    pub config: &'a VerifyConfig,
    pub spectral: Option<&'a SpectralResult>,
    pub extrema: Option<&'a CurvatureExtrema>,
}

/// Checks that hold on every Hermitian metric and so are not demoted on non-balanced ones.
const GENERAL: [&str; 3] = ["sb-curvature-routes", "sb-quartic-torsion", "hsc-bridge"];

const FD_STEPS: [f64; 2] = [0.05, 0.025];
const QUAD_STEPS: [usize; 2] = [3, 6];
const REFINEMENT_POINTS: usize = 24;

type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckReport>> + Send + Sync + 'a>;

fn one<'a>(f: impl Fn() -> Result<CheckReport> + Send + Sync + 'a) -> Job<'a> {
    Box::new(move || Ok(vec![f()?]))
}

fn quadrature(entry: &GeometryEntry, cfg: &VerifyConfig) -> Result<Option<Quadrature>> {
    match cfg.quadrature.or_else(|| default_quadrature(entry)) {
        Some(m) => Ok(Some(Quadrature::for_entry(entry, m)?)),
        None => Ok(None),
    }
}

/// Identity residuals of the eigenpair checks with finite-difference derivatives at one step.
fn fd_residuals(
    entry: &GeometryEntry,
    pair: &Eigenpair,
    step: f64,
    pts: &[ChartPoint],
    cfg: &VerifyConfig,
) -> Result<Vec<(String, f64)>> {
    let e = entry.finite_difference_only(step);
    let u = pair.u.finite_difference_only().with_fd_step(step);
    let tol = Tolerances::default();
    let mut out = vec![
        check_laplacian_trace(&e, &u, pts, &tol)?,
        check_hessian_trace(&e, &u, Some(pair.lambda), pts, &tol)?,
        check_bochner(&e, &u, pair.lambda, pts, &tol)?,
    ];
    if pair.range.is_some_and(|r| r.0 >= -1.0) {
        out.extend(check_liyau_identities(&e, &u, pair.lambda, 2.0, pts, &tol)?);
    }
    out.extend(check_ricci_relations(
        &e,
        pts,
        cfg.directions,
        cfg.seed,
        &tol,
    )?);
    Ok(out.into_iter().map(|r| (r.name, r.value)).collect())
}

fn refinements(
    entry: &GeometryEntry,
    pair: &Eigenpair,
    cfg: &VerifyConfig,
) -> Result<Vec<CheckReport>> {
    let pts = sample_points(entry, REFINEMENT_POINTS, cfg.seed);
    let coarse = fd_residuals(entry, pair, FD_STEPS[0], &pts, cfg)?;
    let fine = fd_residuals(entry, pair, FD_STEPS[1], &pts, cfg)?;
    let step = format!("finite-difference step {} -> {}", FD_STEPS[0], FD_STEPS[1]);
    let mut out: Vec<CheckReport> = coarse
        .iter()
        .zip(&fine)
        .map(|((name, c), (_, f))| refinement_study(name, &entry.name, *c, *f, &step))
        .collect();
    if default_quadrature(entry).is_some() {
        let tol = Tolerances::default();
        let tests = test_functions(entry, cfg.seed);
        let mut vals = Vec::new();
        for m in QUAD_STEPS {
            let q = Quadrature::for_entry(entry, m)?;
            vals.push((
                check_integral_identity(&q, entry, &pair.u, pair.lambda, &tol)?.value,
                check_laplacian_trace_weak(&q, entry, &pair.u, &tests, &tol)?.value,
            ));
        }
        let step = format!("quadrature {} -> {}", QUAD_STEPS[0], QUAD_STEPS[1]);
        out.push(refinement_study(
            "integral-identity",
            &entry.name,
            vals[0].0,
            vals[1].0,
            &step,
        ));
        out.push(refinement_study(
            "laplacian-trace-weak",
            &entry.name,
            vals[0].1,
            vals[1].1,
            &step,
        ));
    }
    Ok(out)
}

fn identity_jobs<'a>(
    entry: &'a GeometryEntry,
    cfg: &'a VerifyConfig,
    pts: &'a [ChartPoint],
    pair: Option<&'a Eigenpair>,
    ext: &'a CurvatureExtrema,
    quad: Option<&'a Quadrature>,
    tests: &'a [ScalarField],
) -> Vec<Job<'a>> {
    let tol = &cfg.tol;
    let mut jobs: Vec<Job> = Vec::new();
    let probe = pair.map(|p| &p.u).unwrap_or(&tests[0]);
    jobs.push(one(move || {
        let mut r = check_laplacian_trace(entry, probe, pts, tol)?;
        if let Some(q) = quad {
            let w = check_laplacian_trace_weak(q, entry, probe, tests, tol)?;
            r = r.absorb("weak", w.value);
        }
        Ok(r)
    }));
    jobs.push(one(move || {
        check_hessian_trace(entry, probe, pair.map(|p| p.lambda), pts, tol)
    }));
    if let Some(p) = pair {
        let note = |r: CheckReport| if p.is_first { r } else { r.note(&p.label) };
        jobs.push(one(move || {
            Ok(note(check_bochner(entry, &p.u, p.lambda, pts, tol)?))
        }));
        if p.is_first {
            let k = ext.min_hol_ricci / (2.0 * entry.n() as f64 - 1.0);
            jobs.push(one(move || {
                check_q_and_rigidity(entry, &p.u, p.lambda, k, entry.diameter, pts, tol)
            }));
        }
        if let Some(range) = p.range {
            if range.0 >= -1.0 {
                jobs.push(Box::new(move || {
                    Ok(
                        check_liyau_identities(entry, &p.u, p.lambda, 2.0, pts, tol)?
                            .into_iter()
                            .map(note)
                            .collect(),
                    )
                }));
            }
            jobs.push(Box::new(move || {
                Ok(check_arcsin_gradient(
                    entry,
                    &p.u,
                    p.lambda,
                    range,
                    ext.min_hol_ricci,
                    pts,
                    tol,
                )?
                .into_iter()
                .map(note)
                .collect())
            }));
        }
        if let Some(q) = quad {
            jobs.push(one(move || {
                Ok(note(check_integral_identity(
                    q, entry, &p.u, p.lambda, tol,
                )?))
            }));
            jobs.push(one(move || {
                Ok(note(check_integral_inequality(
                    q, entry, &p.u, p.lambda, tol,
                )?))
            }));
        }
    }
    jobs.push(one(move || {
        check_sb_quartic(entry, pts, cfg.directions, cfg.seed, tol)
    }));
    jobs.push(one(move || {
        check_hsc_bridge(entry, pts, cfg.directions, cfg.seed, tol)
    }));
    jobs.push(Box::new(move || {
        check_ricci_relations(entry, pts, cfg.directions, cfg.seed, tol)
    }));
    if let Some(p) = pair {
        if entry.metric.has_analytic_derivatives() && p.u.has_analytic_derivatives() {
            jobs.push(Box::new(move || refinements(entry, p, cfg)));
        }
    }
    jobs
}

fn run_jobs(jobs: Vec<Job>) -> Result<Vec<CheckReport>> {
    let per = jobs.par_iter().map(|j| j()).collect::<Result<Vec<_>>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Runs the requested suite on one geometry. Reports come back in a fixed order
/// independent of scheduling.
pub fn run_suite(inp: SuiteInputs, suite: Suite) -> Result<Vec<CheckReport>> {
    let entry = inp.entry;
    let cfg = inp.config;
    let pts = sample_points(entry, cfg.points, cfg.seed);
    let owned_ext;
    let ext = match inp.extrema {
        Some(e) => e,
        None => {
            owned_ext = curvature_extrema(
                &entry.metric,
                &Sampler {
                    points: pts.clone(),
                    directions: cfg.directions,
                },
                cfg.seed,
            )?;
            &owned_ext
        }
    };
    let mut out = Vec::new();
    let balanced = check_balanced(entry, &pts, &cfg.tol)?;
    let balanced_ok = match entry.kind {
        GeometryKind::Custom => balanced.passed,
        _ => entry.is_balanced_expected,
    };
    out.push(if entry.kind == GeometryKind::Custom && !balanced.passed {
        balanced.demote("the metric is not balanced; checks that assume it are not applicable")
    } else {
        balanced
    });
    let pair = eigenpair(entry);

    if matches!(suite, Suite::Identities | Suite::All) {
        let quad = quadrature(entry, cfg)?;
        let tests = test_functions(entry, cfg.seed);
        let jobs = identity_jobs(entry, cfg, &pts, pair.as_ref(), ext, quad.as_ref(), &tests);
        let reports = run_jobs(jobs)?;
        out.extend(reports.into_iter().map(|r| {
            if balanced_ok || !r.is_applicable() || GENERAL.contains(&r.name.as_str()) {
                r
            } else {
                r.demote("the metric is not balanced")
            }
        }));
    }

    if matches!(suite, Suite::Bounds | Suite::All) {
        let owned_spec;
        let spec = match inp.spectral {
            Some(s) => Some(s),
            None => match spectrum(entry, cfg.subdivisions) {
                Ok(s) => {
                    owned_spec = s;
                    Some(&owned_spec)
                }
                Err(LabError::Unsupported(_)) => None,
                Err(e) => return Err(e),
            },
        };
        let ghsc = match &pair {
            Some(p) if p.is_first && balanced_ok => gradient_hsc_min(entry, &p.u, &pts)?,
            _ => None,
        };
        out.extend(check_bounds(
            BoundInputs {
                entry,
                spectral: spec,
                extrema: Some(ext),
                gradient_hsc_min: ghsc,
            },
            &cfg.tol,
        ));
        let d = entry.diameter.or(spec.map(|s| s.diameter)).unwrap_or(1.0);
        out.push(liyau_formula_report(entry.n().max(3), d)?);
        out.push(scale_covariance(&cfg.tol)?);
        out.extend(zhongyang_series_reports()?);
    }
    Ok(out)
}
