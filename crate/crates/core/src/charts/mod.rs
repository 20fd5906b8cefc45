//! Chart points, Hermitian metric fields with derivative access, scalar
//! fields, and the built-in geometry catalogue.
//!
//! Conventions: `z^k = x^k + i y^k`; the real coordinates are ordered
//! `(x^1, y^1, ..., x^n, y^n)`. The Riemannian metric is
//! `g(X, Y) = 2 Re h(X^{1,0}, Y^{1,0})`, so `h = I/2` is Euclidean, the volume
//! form is `det(h) 2^n dx^1 dy^1 ... dx^n dy^n`, and `|du|_g^2 = 2 |du|^2`
//! with `|du|^2 = h^{i jbar} u_i u_jbar`.

mod catalogue;
pub mod fd;
pub mod spline;

pub use catalogue::{
    by_name, catalogue_names, flat_torus, flat_torus_scaled, fubini_study, iwasawa,
    nonbalanced_example, GeometryEntry, GeometryKind,
};

use crate::jet::{coordinate_jets, Jet};
use crate::tensor::{ComplexTensor, HermitianMatrix, IndexKind};
use crate::{LabError, Result, C64};
use serde::Serialize;
use std::sync::Arc;

/// Default relative finite-difference step.
pub const FD_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartPoint {
    pub coords: Vec<C64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<C64>) -> Self {
        ChartPoint { coords }
    }

    pub fn origin(n: usize) -> Self {
        ChartPoint {
            coords: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// From interleaved real coordinates `(x^1, y^1, ...)`.
    pub fn from_real(x: &[f64]) -> Self {
        assert!(x.len() % 2 == 0);
        ChartPoint {
            coords: x.chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
        }
    }

    pub fn real(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Axis-aligned box in the real coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(LabError::InvalidArgument("degenerate domain box".into()));
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        DomainBox {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &ChartPoint) -> bool {
        let x = p.real();
        x.len() == self.lo.len()
            && x.iter()
                .enumerate()
                .all(|(v, &t)| t >= self.lo[v] && t <= self.hi[v])
    }

    /// Maps a point of the unit cube into the box.
    pub fn from_unit(&self, t: &[f64]) -> ChartPoint {
        let x: Vec<f64> = t
            .iter()
            .enumerate()
            .map(|(v, &s)| self.lo[v] + s * (self.hi[v] - self.lo[v]))
            .collect();
        ChartPoint::from_real(&x)
    }
}

/// How derivatives were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Regime {
    Analytic,
    FiniteDifference { step: f64 },
}

impl Regime {
    pub fn label(&self) -> String {
        match self {
            Regime::Analytic => "analytic".into(),
            Regime::FiniteDifference { step } => format!("finite-difference(step={step:e})"),
        }
    }
}

pub type MetricExpr = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;
pub type MetricJetProvider = dyn Fn(&ChartPoint, usize) -> Result<Vec<Jet>> + Send + Sync;
pub type MetricEval = dyn Fn(&ChartPoint) -> Result<HermitianMatrix> + Send + Sync;

#[derive(Clone)]
enum Derivatives {
    /// Closed form written over coordinate jets.
    Expression(Arc<MetricExpr>),
    /// Any other exact derivative source (e.g. spline differentiation).
    Provider(Arc<MetricJetProvider>),
}

/// A Hermitian metric `h_{i jbar}` on a chart.
#[derive(Clone)]
pub struct MetricField {
    pub n: usize,
    pub label: String,
    pub domain: DomainBox,
    eval: Arc<MetricEval>,
    analytic: Option<Derivatives>,
    fd_step: f64,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricField")
            .field("n", &self.n)
            .field("label", &self.label)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

fn to_matrix(n: usize, h: &[Jet]) -> Result<HermitianMatrix> {
    HermitianMatrix::new(n, h.iter().map(|j| j.value()).collect())
}

impl MetricField {
    /// Metric given by an expression in the coordinate jets `z^k`, returning
    /// the `n*n` entries `h_{i jbar}` row-major.
    pub fn from_expression(
        n: usize,
        label: &str,
        domain: DomainBox,
        expr: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        let expr: Arc<MetricExpr> = Arc::new(expr);
        let e2 = expr.clone();
        let eval = move |p: &ChartPoint| to_matrix(n, &e2(&coordinate_jets(&p.coords, 0)));
        MetricField {
            n,
            label: label.into(),
            domain,
            eval: Arc::new(eval),
            analytic: Some(Derivatives::Expression(expr)),
            fd_step: FD_STEP,
        }
    }

    /// Metric with point evaluation and an exact jet provider.
    pub fn from_provider(
        n: usize,
        label: &str,
        domain: DomainBox,
        eval: impl Fn(&ChartPoint) -> Result<HermitianMatrix> + Send + Sync + 'static,
        provider: impl Fn(&ChartPoint, usize) -> Result<Vec<Jet>> + Send + Sync + 'static,
    ) -> Self {
        MetricField {
            n,
            label: label.into(),
            domain,
            eval: Arc::new(eval),
            analytic: Some(Derivatives::Provider(Arc::new(provider))),
            fd_step: FD_STEP,
        }
    }

    /// Metric known only through point evaluation; derivatives by finite differences.
    pub fn from_eval(
        n: usize,
        label: &str,
        domain: DomainBox,
        eval: impl Fn(&ChartPoint) -> Result<HermitianMatrix> + Send + Sync + 'static,
    ) -> Self {
        MetricField {
            n,
            label: label.into(),
            domain,
            eval: Arc::new(eval),
            analytic: None,
            fd_step: FD_STEP,
        }
    }

    /// The same metric with exact derivatives dropped.
    pub fn finite_difference_only(&self) -> Self {
        MetricField {
            analytic: None,
            ..self.clone()
        }
    }

    pub fn with_fd_step(&self, rel: f64) -> Self {
        MetricField {
            fd_step: rel,
            ..self.clone()
        }
    }

    /// `c * h`, for scale-covariance checks.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        match &self.analytic {
            Some(Derivatives::Expression(e)) => {
                let e = e.clone();
                let mut m = MetricField::from_expression(
                    self.n,
                    &format!("{}*{c}", self.label),
                    self.domain.clone(),
                    move |z| e(z).iter().map(|j| j * c).collect(),
                );
                m.fd_step = self.fd_step;
                m
            }
            _ => {
                let mut m = MetricField::from_eval(
                    self.n,
                    &format!("{}*{c}", self.label),
                    self.domain.clone(),
                    move |p| {
                        let h = inner.eval(p)?;
                        HermitianMatrix::new(h.n(), h.entries().iter().map(|z| z * c).collect())
                    },
                );
                m.fd_step = self.fd_step;
                m
            }
        }
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn regime(&self) -> Regime {
        if self.analytic.is_some() {
            Regime::Analytic
        } else {
            Regime::FiniteDifference { step: self.fd_step }
        }
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.n() != self.n {
            return Err(LabError::InvalidArgument(format!(
                "point has {} coordinates, metric has n = {}",
                p.n(),
                self.n
            )));
        }
        if !p.is_finite() {
            return Err(LabError::Domain("non-finite coordinates".into()));
        }
        if !self.domain.contains(p) {
            return Err(LabError::Domain(format!(
                "{:?} outside the chart box",
                p.coords
            )));
        }
        Ok(())
    }

    /// `h_{i jbar}(p)`, checked positive-definite.
    pub fn eval(&self, p: &ChartPoint) -> Result<HermitianMatrix> {
        self.check_point(p)?;
        let h = (self.eval)(p)?;
        h.cholesky()?;
        Ok(h)
    }

    /// Taylor jets of the metric entries at `p` up to `order` (at most 3).
    pub fn jet(&self, p: &ChartPoint, order: usize) -> Result<MetricJet> {
        self.check_point(p)?;
        let h = match &self.analytic {
            Some(Derivatives::Expression(e)) => e(&coordinate_jets(&p.coords, order)),
            Some(Derivatives::Provider(f)) => f(p, order)?,
            None => {
                let n = self.n;
                let eval = self.eval.clone();
                let f = move |x: &[f64]| -> Result<Vec<C64>> {
                    Ok((eval)(&ChartPoint::from_real(x))?.entries().to_vec())
                };
                fd::fd_jets(f, &p.real(), order, self.fd_step, Some(&self.domain), n * n)?
            }
        };
        let mj = MetricJet {
            n: self.n,
            order,
            h,
        };
        mj.value()?.cholesky()?;
        Ok(mj)
    }
}

/// Jets of all metric entries at one point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub n: usize,
    pub order: usize,
    /// `h[i*n + j]` is the jet of `h_{i jbar}`.
    pub h: Vec<Jet>,
}

impl MetricJet {
    pub fn value(&self) -> Result<HermitianMatrix> {
        to_matrix(self.n, &self.h)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Jet {
        &self.h[i * self.n + j]
    }

    /// Jets of `h^{k lbar}` stored as `g[k*n + l]`.
    pub fn inverse(&self) -> Result<Vec<Jet>> {
        let n = self.n;
        let r = crate::jet::mat_inverse(&self.h, n)?;
        Ok((0..n * n)
            .map(|kl| r[(kl % n) * n + kl / n].clone())
            .collect())
    }
}

/// Wirtinger derivatives of the metric at a point. Tensor slots list the
/// differentiation indices first, then `(i, jbar)` of `h_{i jbar}`.
#[derive(Clone, Debug)]
pub struct MetricDerivatives {
    pub order: usize,
    pub regime: Regime,
    /// `d h_{i jbar} / dz^k` at `[k, i, j]`.
    pub dz: ComplexTensor,
    /// `d h_{i jbar} / dzbar^k` at `[k, i, j]`.
    pub dzbar: ComplexTensor,
    /// `d^2 h / dz^a dzbar^b` at `[a, b, i, j]`.
    pub dz_dzbar: Option<ComplexTensor>,
    /// `d^2 h / dz^a dz^b` at `[a, b, i, j]`.
    pub dz_dz: Option<ComplexTensor>,
    /// `d^3 h / dz^a dz^b dzbar^c` at `[a, b, c, i, j]`.
    pub dz_dz_dzbar: Option<ComplexTensor>,
    /// `d^3 h / dz^a dzbar^b dzbar^c` at `[a, b, c, i, j]`.
    pub dz_dzbar_dzbar: Option<ComplexTensor>,
}

/// Wirtinger derivative of a jet along a sequence of `(index, antiholomorphic)` steps.
pub fn wirtinger(j: &Jet, steps: &[(usize, bool)]) -> Jet {
    let mut out = j.clone();
    for &(k, anti) in steps {
        out = if anti { out.dzb(k) } else { out.dz(k) };
    }
    out
}

pub fn metric_derivatives(
    m: &MetricField,
    p: &ChartPoint,
    order: usize,
) -> Result<MetricDerivatives> {
    if !(1..=3).contains(&order) {
        return Err(LabError::InvalidArgument(format!(
            "derivative order must be 1..3, got {order}"
        )));
    }
    let n = m.n;
    let mj = m.jet(p, order)?;
    use IndexKind::*;
    let build = |steps: &dyn Fn(&[usize]) -> Vec<(usize, bool)>, kinds: Vec<IndexKind>| {
        let r = kinds.len();
        ComplexTensor::from_fn(vec![n; r], kinds, |idx| {
            let (d, e) = idx.split_at(r - 2);
            wirtinger(mj.entry(e[0], e[1]), &steps(d)).value()
        })
    };
    let dz = build(
        &|d| vec![(d[0], false)],
        vec![HolLower, HolLower, AntiLower],
    );
    let dzbar = build(
        &|d| vec![(d[0], true)],
        vec![AntiLower, HolLower, AntiLower],
    );
    let (mut dz_dzbar, mut dz_dz, mut t1, mut t2) = (None, None, None, None);
    if order >= 2 {
        dz_dzbar = Some(build(
            &|d| vec![(d[0], false), (d[1], true)],
            vec![HolLower, AntiLower, HolLower, AntiLower],
        ));
        dz_dz = Some(build(
            &|d| vec![(d[0], false), (d[1], false)],
            vec![HolLower, HolLower, HolLower, AntiLower],
        ));
    }
    if order >= 3 {
        t1 = Some(build(
            &|d| vec![(d[0], false), (d[1], false), (d[2], true)],
            vec![HolLower, HolLower, AntiLower, HolLower, AntiLower],
        ));
        t2 = Some(build(
            &|d| vec![(d[0], false), (d[1], true), (d[2], true)],
            vec![HolLower, AntiLower, AntiLower, HolLower, AntiLower],
        ));
    }
    Ok(MetricDerivatives {
        order,
        regime: m.regime(),
        dz,
        dzbar,
        dz_dzbar,
        dz_dz,
        dz_dz_dzbar: t1,
        dz_dzbar_dzbar: t2,
    })
}

pub type ScalarExpr = dyn Fn(&[Jet]) -> Jet + Send + Sync;
pub type ScalarEval = dyn Fn(&ChartPoint) -> C64 + Send + Sync;

/// A (generally complex-valued) function on the chart.
#[derive(Clone)]
pub struct ScalarField {
    pub label: String,
    eval: Arc<ScalarEval>,
    analytic: Option<Arc<ScalarExpr>>,
    fd_step: f64,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn from_expression(
        label: &str,
        expr: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static,
    ) -> Self {
        let expr: Arc<ScalarExpr> = Arc::new(expr);
        let e2 = expr.clone();
        ScalarField {
            label: label.into(),
            eval: Arc::new(move |p: &ChartPoint| e2(&coordinate_jets(&p.coords, 0)).value()),
            analytic: Some(expr),
            fd_step: FD_STEP,
        }
    }

    pub fn from_fn(label: &str, f: impl Fn(&ChartPoint) -> C64 + Send + Sync + 'static) -> Self {
        ScalarField {
            label: label.into(),
            eval: Arc::new(f),
            analytic: None,
            fd_step: FD_STEP,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_expression(&format!("const {c}"), move |z| {
            z[0].constant_like(C64::new(c, 0.0))
        })
    }

    pub fn finite_difference_only(&self) -> Self {
        ScalarField {
            analytic: None,
            ..self.clone()
        }
    }

    pub fn with_fd_step(&self, rel: f64) -> Self {
        ScalarField {
            fd_step: rel,
            ..self.clone()
        }
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn value(&self, p: &ChartPoint) -> C64 {
        (self.eval)(p)
    }

    pub fn jet(&self, p: &ChartPoint, order: usize) -> Result<Jet> {
        match &self.analytic {
            Some(e) => Ok(e(&coordinate_jets(&p.coords, order))),
            None => {
                let eval = self.eval.clone();
                let f = move |x: &[f64]| -> Result<Vec<C64>> {
                    Ok(vec![eval(&ChartPoint::from_real(x))])
                };
                Ok(fd::fd_jets(f, &p.real(), order, self.fd_step, None, 1)?.remove(0))
            }
        }
    }
}
