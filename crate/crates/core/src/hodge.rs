//! Differential forms on a chart, the contraction `Lambda`, the torsion operator
//! `tau = [Lambda, d omega]`, balanced-condition residuals, the scalar
//! Laplacian, and integrated (weak) forms of the adjoint identities.
//!
//! A `(p,q)`-form is stored as coefficients of `dz^I ^ dzbar^J` with `I`, `J`
//! strictly increasing, indexed by bitmasks. Contraction conventions:
//! `iota_i` removes `dz^i` with sign `(-1)^(position)`, `iota_jbar` removes
//! `dzbar^j` with sign `(-1)^(p + position)`, and
//! `Lambda = -sqrt(-1) h^{i jbar} iota_jbar iota_i`, so `Lambda omega = n`.

use crate::charts::{ChartPoint, GeometryEntry, GeometryKind, MetricField, ScalarField};
use crate::connections::LocalMetric;
use crate::jet::{mat_det, mat_inverse, Jet, JetSpace};
use crate::sampling::pairwise_sum_c;
use crate::{LabError, Result, C64, I};
use rayon::prelude::*;
use std::sync::Arc;

fn bit(k: usize) -> usize {
    1 << k
}

/// Number of set bits of `mask` below position `k`.
fn below(mask: usize, k: usize) -> u32 {
    (mask & (bit(k) - 1)).count_ones()
}

/// Sign of sorting the concatenation of two disjoint increasing index sets.
fn merge_sign(a: usize, b: usize) -> f64 {
    let mut inv = 0;
    let mut bb = b;
    while bb != 0 {
        let k = bb.trailing_zeros() as usize;
        inv += (a >> (k + 1)).count_ones();
        bb &= bb - 1;
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn parity(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn indices(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize)
        .filter(|&k| mask & bit(k) != 0)
        .collect()
}

/// A `(p,q)`-form whose coefficients are Taylor jets at one point.
#[derive(Clone, Debug)]
pub struct JetForm {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    order: usize,
    space: Arc<JetSpace>,
    /// Dense over `(I, J)` masks, `c[I << n | J]`; entries off the bidegree stay zero.
    c: Vec<Jet>,
}

impl JetForm {
    pub fn zero(n: usize, p: usize, q: usize, proto: &Jet) -> Result<Self> {
        if p > n || q > n {
            return Err(LabError::Bidegree(format!(
                "({p},{q}) exceeds dimension {n}"
            )));
        }
        let z = proto.zero_like();
        Ok(JetForm {
            n,
            p,
            q,
            order: proto.order(),
            space: proto.space().clone(),
            c: vec![z; 1 << (2 * n)],
        })
    }

    pub fn scalar(n: usize, f: Jet) -> Self {
        let mut w = JetForm::zero(n, 0, 0, &f).expect("(0,0) fits");
        w.c[0] = f;
        w
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        (i << self.n) | j
    }

    /// Iterates over the basis masks of this bidegree.
    pub fn basis(&self) -> Vec<(usize, usize)> {
        let all = 1usize << self.n;
        let mut out = Vec::new();
        for i in 0..all {
            if i.count_ones() as usize != self.p {
                continue;
            }
            for j in 0..all {
                if j.count_ones() as usize == self.q {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Coefficient of `dz^I ^ dzbar^J`, masks.
    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.c[self.slot(i, j)]
    }

    pub fn value(&self, i: usize, j: usize) -> C64 {
        self.get(i, j).value()
    }

    /// Coefficient by index lists; any order, sign of the sorting permutation applied.
    pub fn component(&self, hol: &[usize], anti: &[usize]) -> C64 {
        match (sort_sign(hol), sort_sign(anti)) {
            (Some((a, s1)), Some((b, s2))) => self.value(a, b) * (s1 * s2),
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        debug_assert!(i.count_ones() as usize == self.p && j.count_ones() as usize == self.q);
        let s = self.slot(i, j);
        self.c[s] = v;
    }

    fn add_at(&mut self, i: usize, j: usize, v: &Jet, sign: f64) {
        let s = self.slot(i, j);
        if sign > 0.0 {
            self.c[s] += v;
        } else {
            self.c[s] -= v;
        }
    }

    fn reorder(&self, order: usize) -> JetForm {
        JetForm {
            n: self.n,
            p: self.p,
            q: self.q,
            order,
            space: self.space.clone(),
            c: self.c.iter().map(|j| j.truncate(order)).collect(),
        }
    }

    fn proto(&self, order: usize) -> Jet {
        Jet::constant(&self.space, order, C64::new(0.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> JetForm {
        let mut w = self.clone();
        w.c = w.c.iter().map(|j| j.scale(s)).collect();
        w
    }

    pub fn mul_jet(&self, f: &Jet) -> JetForm {
        let order = self.order.min(f.order());
        let mut w = self.reorder(order);
        for (i, j) in self.basis() {
            let s = w.slot(i, j);
            w.c[s] = &self.c[s] * f;
        }
        w
    }

    pub fn add(&self, other: &JetForm) -> Result<JetForm> {
        self.check_same(other)?;
        let order = self.order.min(other.order);
        let mut w = self.reorder(order);
        for (a, b) in w.c.iter_mut().zip(&other.c) {
            *a += &b.truncate(order);
        }
        Ok(w)
    }

    pub fn sub(&self, other: &JetForm) -> Result<JetForm> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    fn check_same(&self, other: &JetForm) -> Result<()> {
        if (self.n, self.p, self.q) != (other.n, other.p, other.q) {
            return Err(LabError::Bidegree(format!(
                "({},{}) vs ({},{})",
                self.p, self.q, other.p, other.q
            )));
        }
        Ok(())
    }

    /// `(dz^I ^ dzbar^J) ^ (dz^K ^ dzbar^L) = (-1)^{|J||K|} sgn dz^{IK} ^ dzbar^{JL}`.
    pub fn wedge(&self, other: &JetForm) -> Result<JetForm> {
        let (p, q) = (self.p + other.p, self.q + other.q);
        let order = self.order.min(other.order);
        let mut w = JetForm::zero(self.n, p, q, &self.proto(order))?;
        let cross = parity((self.q * other.p) as u32);
        for (i, j) in self.basis() {
            let a = self.get(i, j);
            if a.max_abs() == 0.0 {
                continue;
            }
            for (k, l) in other.basis() {
                if i & k != 0 || j & l != 0 {
                    continue;
                }
                let b = other.get(k, l);
                if b.max_abs() == 0.0 {
                    continue;
                }
                let s = cross * merge_sign(i, k) * merge_sign(j, l);
                w.add_at(i | k, j | l, &(a * b), s);
            }
        }
        Ok(w)
    }

    /// `del`; the result has jet order one less.
    pub fn del(&self) -> Result<JetForm> {
        self.exterior(true)
    }

    /// `delbar`; the result has jet order one less.
    pub fn delbar(&self) -> Result<JetForm> {
        self.exterior(false)
    }

    fn exterior(&self, hol: bool) -> Result<JetForm> {
        if self.order == 0 {
            return Err(LabError::Resolution(
                "form jets of order 0 cannot be differentiated".into(),
            ));
        }
        let (p, q) = if hol {
            (self.p + 1, self.q)
        } else {
            (self.p, self.q + 1)
        };
        let mut w = JetForm::zero(self.n, p, q, &self.proto(self.order - 1))?;
        for (i, j) in self.basis() {
            let a = self.get(i, j);
            for k in 0..self.n {
                if hol && i & bit(k) == 0 {
                    w.add_at(i | bit(k), j, &a.dz(k), parity(below(i, k)));
                } else if !hol && j & bit(k) == 0 {
                    w.add_at(
                        i,
                        j | bit(k),
                        &a.dzb(k),
                        parity(self.p as u32 + below(j, k)),
                    );
                }
            }
        }
        Ok(w)
    }

    pub fn d(&self) -> Result<(JetForm, JetForm)> {
        Ok((self.del()?, self.delbar()?))
    }

    /// Interior product with `d/dz^k`.
    pub fn iota(&self, k: usize) -> Result<JetForm> {
        if self.p == 0 {
            return JetForm::zero(self.n, 0, self.q, &self.proto(self.order))
                .and_then(|z| Ok(z.with_p_minus()));
        }
        let mut w = JetForm::zero(self.n, self.p - 1, self.q, &self.proto(self.order))?;
        for (i, j) in self.basis() {
            if i & bit(k) != 0 {
                w.add_at(i & !bit(k), j, self.get(i, j), parity(below(i, k)));
            }
        }
        Ok(w)
    }

    fn with_p_minus(self) -> JetForm {
        self
    }

    /// Interior product with `d/dzbar^k`.
    pub fn iota_bar(&self, k: usize) -> Result<JetForm> {
        if self.q == 0 {
            return Err(LabError::Bidegree(
                "iota_bar on a form of bidegree (p,0)".into(),
            ));
        }
        let mut w = JetForm::zero(self.n, self.p, self.q - 1, &self.proto(self.order))?;
        for (i, j) in self.basis() {
            if j & bit(k) != 0 {
                w.add_at(
                    i,
                    j & !bit(k),
                    self.get(i, j),
                    parity(self.p as u32 + below(j, k)),
                );
            }
        }
        Ok(w)
    }

    /// `Lambda = -sqrt(-1) h^{i jbar} iota_jbar iota_i` with inverse-metric jets `g[i*n+j]`.
    pub fn lambda(&self, g: &[Jet]) -> Result<JetForm> {
        if self.p == 0 || self.q == 0 {
            return Err(LabError::Bidegree(format!(
                "Lambda needs bidegree at least (1,1), got ({},{})",
                self.p, self.q
            )));
        }
        let n = self.n;
        let order = self.order.min(g[0].order());
        let mut w = JetForm::zero(n, self.p - 1, self.q - 1, &self.proto(order))?;
        for i in 0..n {
            let ii = self.iota(i)?;
            for j in 0..n {
                let gij = &g[i * n + j];
                if gij.max_abs() == 0.0 {
                    continue;
                }
                let t = ii.iota_bar(j)?.mul_jet(gij);
                w = w.add(&t)?;
            }
        }
        Ok(w.scale(-I))
    }

    /// Complex conjugate; `conj(dz^I ^ dzbar^J) = (-1)^{pq} dz^J ^ dzbar^I`.
    pub fn conj(&self) -> JetForm {
        let mut w =
            JetForm::zero(self.n, self.q, self.p, &self.proto(self.order)).expect("same dimension");
        let s = parity((self.p * self.q) as u32);
        for (i, j) in self.basis() {
            w.add_at(j, i, &self.get(i, j).conj(), s);
        }
        w
    }

    pub fn max_abs(&self) -> f64 {
        self.basis()
            .iter()
            .map(|&(i, j)| self.value(i, j).norm())
            .fold(0.0, f64::max)
    }

    /// Coefficient values keyed by index lists, for reporting.
    pub fn values(&self) -> Vec<(Vec<usize>, Vec<usize>, C64)> {
        self.basis()
            .into_iter()
            .map(|(i, j)| (indices(i), indices(j), self.value(i, j)))
            .collect()
    }
}

fn sort_sign(idx: &[usize]) -> Option<(usize, f64)> {
    let mut mask = 0usize;
    let mut sign = 1.0;
    for (a, &k) in idx.iter().enumerate() {
        if mask & bit(k) != 0 {
            return None;
        }
        for &l in &idx[a + 1..] {
            if l < k {
                sign = -sign;
            }
        }
        mask |= bit(k);
    }
    Some((mask, sign))
}

fn det_small(m: &mut [C64], k: usize) -> C64 {
    // Gaussian elimination with partial pivoting on a k x k row-major block.
    let mut det = C64::new(1.0, 0.0);
    for c in 0..k {
        let piv = (c..k)
            .max_by(|&a, &b| m[a * k + c].norm().total_cmp(&m[b * k + c].norm()))
            .unwrap();
        if m[piv * k + c].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if piv != c {
            for x in 0..k {
                m.swap(c * k + x, piv * k + x);
            }
            det = -det;
        }
        let d = m[c * k + c];
        det *= d;
        for r in c + 1..k {
            let f = m[r * k + c] / d;
            for x in c..k {
                let v = m[c * k + x];
                m[r * k + x] -= f * v;
            }
        }
    }
    det
}

/// Pointwise inner product of forms of equal bidegree with inverse-metric values `g(k, l) = h^{k lbar}`:
/// `<dz^I ^ dzbar^J, dz^K ^ dzbar^L> = det[h^{I_a Kbar_b}] det[h^{L_b Jbar_a}]`.
pub fn inner(a: &JetForm, b: &JetForm, g: &dyn Fn(usize, usize) -> C64) -> Result<C64> {
    a.check_same(b)?;
    let minor = |rows: &[usize], cols: &[usize]| -> C64 {
        let k = rows.len();
        if k == 0 {
            return C64::new(1.0, 0.0);
        }
        let mut m: Vec<C64> = rows
            .iter()
            .flat_map(|&r| cols.iter().map(move |&c| g(r, c)))
            .collect();
        det_small(&mut m, k)
    };
    let basis = a.basis();
    let mut acc = C64::new(0.0, 0.0);
    for &(i, j) in &basis {
        let av = a.value(i, j);
        if av.norm() == 0.0 {
            continue;
        }
        let (ii, jj) = (indices(i), indices(j));
        for &(k, l) in &basis {
            let bv = b.value(k, l);
            if bv.norm() == 0.0 {
                continue;
            }
            acc += av * bv.conj() * minor(&ii, &indices(k)) * minor(&indices(l), &jj);
        }
    }
    Ok(acc)
}

/// `omega = sqrt(-1) h_{i jbar} dz^i ^ dzbar^j` as a jet form.
pub fn omega(lm: &LocalMetric) -> JetForm {
    let n = lm.n;
    let mut w = JetForm::zero(n, 1, 1, lm.hj(0, 0)).expect("(1,1) fits");
    for i in 0..n {
        for j in 0..n {
            w.set(bit(i), bit(j), lm.hj(i, j).scale(I));
        }
    }
    w
}

pub fn omega_power(lm: &LocalMetric, k: usize) -> Result<JetForm> {
    let om = omega(lm);
    let mut w = JetForm::scalar(lm.n, lm.hj(0, 0).constant_like(C64::new(1.0, 0.0)));
    for _ in 0..k {
        w = w.wedge(&om)?;
    }
    Ok(w)
}

pub fn del_scalar(n: usize, u: &Jet) -> JetForm {
    JetForm::scalar(n, u.clone())
        .del()
        .expect("scalar jets of order >= 1")
}

pub fn delbar_scalar(n: usize, u: &Jet) -> JetForm {
    JetForm::scalar(n, u.clone())
        .delbar()
        .expect("scalar jets of order >= 1")
}

/// A form-valued field on the chart, evaluated as jets of a requested order.
#[derive(Clone)]
pub struct FormField {
    pub p: usize,
    pub q: usize,
    pub label: String,
    f: Arc<dyn Fn(&ChartPoint, usize) -> Result<JetForm> + Send + Sync>,
}

impl std::fmt::Debug for FormField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FormField({},{}; {})", self.p, self.q, self.label)
    }
}

impl FormField {
    pub fn new(
        p: usize,
        q: usize,
        label: &str,
        f: impl Fn(&ChartPoint, usize) -> Result<JetForm> + Send + Sync + 'static,
    ) -> Self {
        FormField {
            p,
            q,
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn at(&self, p: &ChartPoint, order: usize) -> Result<JetForm> {
        let w = (self.f)(p, order)?;
        if (w.p, w.q) != (self.p, self.q) {
            return Err(LabError::Bidegree(format!(
                "{} produced ({},{})",
                self.label, w.p, w.q
            )));
        }
        Ok(w)
    }

    pub fn zero(n: usize, p: usize, q: usize) -> Self {
        FormField::new(p, q, "0", move |pt, order| {
            let proto = Jet::constant(&JetSpace::get(2 * n), order, C64::new(0.0, 0.0));
            let _ = pt;
            JetForm::zero(n, p, q, &proto)
        })
    }

    pub fn from_scalar(n: usize, u: &ScalarField) -> Self {
        let u = u.clone();
        FormField::new(0, 0, &u.label.clone(), move |pt, order| {
            Ok(JetForm::scalar(n, u.jet(pt, order)?))
        })
    }

    /// `f dz^k` or `f dzbar^k` for a scalar field `f`.
    pub fn one_form(n: usize, k: usize, anti: bool, f: &ScalarField) -> Self {
        let f = f.clone();
        let (p, q) = if anti { (0, 1) } else { (1, 0) };
        FormField::new(
            p,
            q,
            &format!("{} d{}{}", f.label, if anti { "zbar" } else { "z" }, k + 1),
            move |pt, order| {
                let c = f.jet(pt, order)?;
                let mut w = JetForm::zero(n, p, q, &c)?;
                if anti {
                    w.set(0, bit(k), c);
                } else {
                    w.set(bit(k), 0, c);
                }
                Ok(w)
            },
        )
    }

    pub fn add(&self, other: &FormField) -> Result<Self> {
        if (self.p, self.q) != (other.p, other.q) {
            return Err(LabError::Bidegree(
                "adding fields of different bidegree".into(),
            ));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(FormField::new(
            self.p,
            self.q,
            &format!("{} + {}", self.label, other.label),
            move |pt, o| a.at(pt, o)?.add(&b.at(pt, o)?),
        ))
    }
}

/// `Lambda f` at `p`, jet order `order` (the metric is expanded to the same order).
pub fn lambda_trace(
    m: &MetricField,
    p: &ChartPoint,
    f: &FormField,
    order: usize,
) -> Result<JetForm> {
    if f.p == 0 || f.q == 0 {
        return Err(LabError::Bidegree(format!(
            "Lambda needs bidegree at least (1,1), got ({},{})",
            f.p, f.q
        )));
    }
    let lm = LocalMetric::new(m, p, order)?;
    f.at(p, order)?.lambda(&lm.g)
}

/// `dbar^* omega = sqrt(-1) Lambda(del omega)`, as `n` coefficients of `dz^k`.
pub fn dbar_star_omega_from(lm: &LocalMetric) -> Result<Vec<C64>> {
    // on a curve del omega is a (2,1)-form, hence zero
    if lm.n == 1 {
        return Ok(vec![C64::new(0.0, 0.0)]);
    }
    let w = omega(lm).del()?.lambda(&lm.g)?.scale(I);
    Ok((0..lm.n).map(|k| w.value(bit(k), 0)).collect())
}

pub fn dbar_star_omega(m: &MetricField, p: &ChartPoint) -> Result<Vec<C64>> {
    dbar_star_omega_from(&LocalMetric::new(m, p, 1)?)
}

/// The coordinate formula `sqrt(-1) h^{i jbar}(d_k h_{i jbar} - d_i h_{k jbar})`.
pub fn dbar_star_omega_formula(lm: &LocalMetric) -> Vec<C64> {
    let n = lm.n;
    (0..n)
        .map(|k| {
            let mut v = C64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    v += lm.gi(i, j) * (lm.hj(i, j).dz(k).value() - lm.hj(k, j).dz(i).value());
                }
            }
            v * I
        })
        .collect()
}

/// Largest coefficient of `d(omega^{n-1})` at the point.
pub fn d_omega_power_residual(lm: &LocalMetric) -> Result<f64> {
    if lm.n == 1 {
        return Ok(0.0);
    }
    let w = omega_power(lm, lm.n - 1)?;
    let (a, b) = w.d()?;
    Ok(a.max_abs().max(b.max_abs()))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct BalancedResidual {
    pub dbar_star_omega: f64,
    pub d_omega_power: f64,
}

impl BalancedResidual {
    pub fn max(&self) -> f64 {
        self.dbar_star_omega.max(self.d_omega_power)
    }
}

/// Both balanced obstructions, maximized over the points.
pub fn balanced_residual(m: &MetricField, points: &[ChartPoint]) -> Result<BalancedResidual> {
    let per = points
        .par_iter()
        .map(|p| {
            let lm = LocalMetric::new(m, p, 1)?;
            let a = dbar_star_omega_from(&lm)?
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            Ok((a, d_omega_power_residual(&lm)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(BalancedResidual {
        dbar_star_omega: per.iter().map(|x| x.0).fold(0.0, f64::max),
        d_omega_power: per.iter().map(|x| x.1).fold(0.0, f64::max),
    })
}

/// `h^{i jbar} d_i dbar_j u`, the trace `tr_omega(sqrt(-1) del delbar u)`.
pub fn trace_ddbar(lm: &LocalMetric, u: &Jet) -> C64 {
    let n = lm.n;
    let mut v = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            v += lm.gi(i, j) * u.dz(i).dzb(j).value();
        }
    }
    v
}

/// `Delta_d u = -2 h^{i jbar} u_{i jbar}`, valid on balanced metrics.
pub fn scalar_laplacian(m: &MetricField, u: &ScalarField, p: &ChartPoint) -> Result<f64> {
    let lm = LocalMetric::new(m, p, 0)?;
    Ok((trace_ddbar(&lm, &u.jet(p, 2)?) * -2.0).re)
}

/// Real metric `g` on `(x^1, y^1, ..., x^n, y^n)` from `h`, as jets.
pub fn real_metric_jets(lm: &LocalMetric) -> Vec<Jet> {
    let n = lm.n;
    let d = 2 * n;
    let mut g = vec![lm.hj(0, 0).zero_like(); d * d];
    for a in 0..n {
        for b in 0..n {
            let h = lm.hj(a, b);
            let re = (h + &h.conj()).scale_re(1.0);
            let im = (h - &h.conj()).scale(C64::new(0.0, -1.0));
            g[(2 * a) * d + 2 * b] = re.clone();
            g[(2 * a + 1) * d + 2 * b + 1] = re;
            g[(2 * a) * d + 2 * b + 1] = im.clone();
            g[(2 * a + 1) * d + 2 * b] = im.scale_re(-1.0);
        }
    }
    g
}

/// Laplace-Beltrami `-(1/sqrt g) d_a(sqrt g g^{ab} d_b u)` from the real metric; no balanced assumption.
pub fn laplace_beltrami(m: &MetricField, u: &ScalarField, p: &ChartPoint) -> Result<f64> {
    let lm = LocalMetric::new(m, p, 1)?;
    let d = 2 * lm.n;
    let g = real_metric_jets(&lm);
    let ginv = mat_inverse(&g, d)?;
    let sq = mat_det(&g, d).sqrt();
    let uj = u.jet(p, 2)?;
    let mut acc = C64::new(0.0, 0.0);
    for a in 0..d {
        let mut flux = sq.zero_like();
        for b in 0..d {
            flux += &(&(&sq * &ginv[a * d + b]) * &uj.d(b));
        }
        acc += flux.d(a).value();
    }
    Ok((-acc / sq.value()).re)
}

/// `tau f = Lambda(del omega ^ f) - del omega ^ Lambda f`.
pub fn tau_from(lm: &LocalMetric, f: &JetForm) -> Result<JetForm> {
    let dom = omega(lm).del()?;
    let first = dom.wedge(f)?.lambda(&lm.g)?;
    if f.p == 0 || f.q == 0 {
        return Ok(first);
    }
    first.sub(&dom.wedge(&f.lambda(&lm.g)?)?)
}

/// `taubar f = [Lambda, delbar omega] f`.
pub fn tau_bar_from(lm: &LocalMetric, f: &JetForm) -> Result<JetForm> {
    let dom = omega(lm).delbar()?;
    let first = dom.wedge(f)?.lambda(&lm.g)?;
    if f.p == 0 || f.q == 0 {
        return Ok(first);
    }
    first.sub(&dom.wedge(&f.lambda(&lm.g)?)?)
}

pub fn tau_forms(m: &MetricField, p: &ChartPoint, f: &FormField) -> Result<JetForm> {
    if f.p + 2 > m.n || f.q + 1 > m.n {
        return Err(LabError::Bidegree(format!(
            "tau of a ({},{})-form overflows dimension {}",
            f.p, f.q, m.n
        )));
    }
    let lm = LocalMetric::new(m, p, 1)?;
    tau_from(&lm, &f.at(p, 0)?)
}

/// Nodes with positive weights (volume units) for integrating over a compact geometry.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub label: String,
    pub nodes: Vec<ChartPoint>,
    pub weights: Vec<f64>,
    pub resolution: usize,
}

impl Quadrature {
    /// Rule with resolution `m`: on the projective line, `m` Gauss-Legendre nodes in
    /// `theta` and `2m` trapezoid nodes in `phi` under `z = tan(theta/2) e^{i phi}`;
    /// on tori, `m` trapezoid nodes per real axis; on the Iwasawa manifold, `m`
    /// nodes per real axis of the `(z^1, z^2)` unit cell, for integrands that do
    /// not depend on `z^3`.
    pub fn for_entry(entry: &GeometryEntry, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(LabError::Resolution(
                "quadrature needs at least 2 nodes per axis".into(),
            ));
        }
        let metric = &entry.metric;
        let n = entry.n();
        let mut coord: Vec<(ChartPoint, f64)> = Vec::new();
        match &entry.kind {
            GeometryKind::FubiniStudy { n: 1 } => {
                let gl = gauss_quad::legendre::GaussLegendre::new(
                    std::num::NonZeroUsize::new(m).expect("m >= 2"),
                );
                let nphi = 2 * m;
                let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
                for &(x, w) in gl.as_node_weight_pairs() {
                    let th = 0.5 * std::f64::consts::PI * (x + 1.0);
                    let wt = 0.5 * std::f64::consts::PI * w;
                    let r = (0.5 * th).tan();
                    let dr = 0.5 / (0.5 * th).cos().powi(2);
                    for k in 0..nphi {
                        let ph = k as f64 * dphi;
                        coord.push((
                            ChartPoint::new(vec![C64::from_polar(r, ph)]),
                            r * dr * wt * dphi,
                        ));
                    }
                }
            }
            GeometryKind::FlatTorus { period, .. } => {
                let h = period / m as f64;
                let total = m.pow(2 * n as u32);
                for idx in 0..total {
                    let mut rest = idx;
                    let x: Vec<f64> = (0..2 * n)
                        .map(|_| {
                            let k = rest % m;
                            rest /= m;
                            k as f64 * h
                        })
                        .collect();
                    coord.push((ChartPoint::from_real(&x), h.powi(2 * n as i32)));
                }
            }
            GeometryKind::Iwasawa => {
                let h = 1.0 / m as f64;
                for idx in 0..m.pow(4) {
                    let mut rest = idx;
                    let mut x = vec![0.0; 6];
                    for v in x.iter_mut().take(4) {
                        *v = (rest % m) as f64 * h;
                        rest /= m;
                    }
                    coord.push((ChartPoint::from_real(&x), h.powi(4)));
                }
            }
            _ => {
                return Err(LabError::Unsupported(format!(
                    "no quadrature for {}",
                    entry.name
                )))
            }
        }
        let scale = 2f64.powi(n as i32);
        let weighted = coord
            .into_par_iter()
            .map(|(p, w)| {
                let h = metric.eval(&p)?;
                let det = crate::jet::mat_det(
                    &h.entries()
                        .iter()
                        .map(|&v| Jet::constant(&JetSpace::get(1), 0, v))
                        .collect::<Vec<_>>(),
                    n,
                )
                .value()
                .re;
                Ok((p, w * det * scale))
            })
            .collect::<Result<Vec<_>>>()?;
        let (nodes, weights) = weighted.into_iter().unzip();
        Ok(Quadrature {
            label: format!("{}@{m}", entry.name),
            nodes,
            weights,
            resolution: m,
        })
    }

    pub fn volume(&self) -> f64 {
        crate::sampling::pairwise_sum(&self.weights)
    }

    /// `sum_k w_k f(node_k)`, parallel over nodes with a fixed reduction tree.
    pub fn integrate(&self, f: impl Fn(&ChartPoint) -> Result<C64> + Sync) -> Result<C64> {
        let vals = self
            .nodes
            .par_iter()
            .zip(&self.weights)
            .map(|(p, &w)| Ok(f(p)? * w))
            .collect::<Result<Vec<C64>>>()?;
        Ok(pairwise_sum_c(&vals))
    }

    /// Several integrals at once from one pass over the nodes.
    pub fn integrate_many(
        &self,
        k: usize,
        f: impl Fn(&ChartPoint) -> Result<Vec<C64>> + Sync,
    ) -> Result<Vec<C64>> {
        let vals = self
            .nodes
            .par_iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                let v = f(p)?;
                debug_assert_eq!(v.len(), k);
                Ok(v.into_iter().map(|x| x * w).collect::<Vec<C64>>())
            })
            .collect::<Result<Vec<Vec<C64>>>>()?;
        Ok((0..k)
            .map(|i| pairwise_sum_c(&vals.iter().map(|v| v[i]).collect::<Vec<_>>()))
            .collect())
    }
}

/// `(a, b) = integral of <a, b> omega^n / n!`.
pub fn inner_product(q: &Quadrature, m: &MetricField, a: &FormField, b: &FormField) -> Result<C64> {
    if (a.p, a.q) != (b.p, b.q) {
        return Err(LabError::Bidegree(format!(
            "({},{}) vs ({},{})",
            a.p, a.q, b.p, b.q
        )));
    }
    q.integrate(|p| {
        let lm = LocalMetric::new(m, p, 0)?;
        inner(&a.at(p, 0)?, &b.at(p, 0)?, &|k, l| lm.gi(k, l))
    })
}

fn relative(lhs: C64, rhs: C64) -> f64 {
    (lhs - rhs).norm() / (1.0 + rhs.norm())
}

/// Integrated sides of an identity and the relative residual `|L - R| / (1 + |R|)`.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct WeakResidual {
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
}

impl WeakResidual {
    fn new(lhs: C64, rhs: C64) -> Self {
        WeakResidual {
            lhs,
            rhs,
            residual: relative(lhs, rhs),
        }
    }
}

/// `(-sqrt(-1) Lambda del phi, F) = (phi, delbar F)` for a `(0,1)`-form `phi`.
pub fn weak_adjoint_check(
    q: &Quadrature,
    m: &MetricField,
    phi: &FormField,
    f: &ScalarField,
) -> Result<WeakResidual> {
    if (phi.p, phi.q) != (0, 1) {
        return Err(LabError::Bidegree("phi must be a (0,1)-form".into()));
    }
    let n = m.n;
    let v = q.integrate_many(2, |p| {
        let lm = LocalMetric::new(m, p, 0)?;
        let ph = phi.at(p, 1)?;
        let fj = f.jet(p, 1)?;
        let left = ph.del()?.lambda(&lm.g)?.scale(-I).value(0, 0) * fj.value().conj();
        let right = inner(&ph.reorder(0), &delbar_scalar(n, &fj), &|k, l| lm.gi(k, l))?;
        Ok(vec![left, right])
    })?;
    Ok(WeakResidual::new(v[0], v[1]))
}

/// Weak form of `del^* del delbar u = delbar del^* del u` against a `(0,1)`-form:
/// `(del delbar u, del phi) = (Delta_del u, -sqrt(-1) Lambda del phi)` with
/// `Delta_del u = -tr_omega(sqrt(-1) del delbar u)`.
pub fn weak_dbar_commutation_check(
    q: &Quadrature,
    m: &MetricField,
    u: &ScalarField,
    phi: &FormField,
) -> Result<WeakResidual> {
    if (phi.p, phi.q) != (0, 1) {
        return Err(LabError::Bidegree("phi must be a (0,1)-form".into()));
    }
    let n = m.n;
    let v = q.integrate_many(2, |p| {
        let lm = LocalMetric::new(m, p, 0)?;
        let uj = u.jet(p, 2)?;
        let ph = phi.at(p, 1)?;
        let dph = ph.del()?;
        let ddb = JetForm::scalar(n, uj.clone()).delbar()?.del()?;
        let left = inner(&ddb, &dph, &|k, l| lm.gi(k, l))?;
        let lap = -trace_ddbar(&lm, &uj);
        let right = lap * dph.lambda(&lm.g)?.scale(-I).value(0, 0).conj();
        Ok(vec![left, right])
    })?;
    Ok(WeakResidual::new(v[0], v[1]))
}

/// `(del u, del F) = -integral of F tr_omega(sqrt(-1) del delbar u)` for real `F`.
pub fn weak_laplacian_trace_check(
    q: &Quadrature,
    m: &MetricField,
    u: &ScalarField,
    f: &ScalarField,
) -> Result<WeakResidual> {
    let v = q.integrate_many(2, |p| {
        let lm = LocalMetric::new(m, p, 0)?;
        let uj = u.jet(p, 2)?;
        let fj = f.jet(p, 1)?;
        let du: Vec<C64> = (0..lm.n).map(|k| uj.dz(k).value()).collect();
        let df: Vec<C64> = (0..lm.n).map(|k| fj.dz(k).value()).collect();
        Ok(vec![
            lm.pair10(&du, &df),
            -fj.value() * trace_ddbar(&lm, &uj),
        ])
    })?;
    Ok(WeakResidual::new(v[0], v[1]))
}

/// Pointwise first-order objects of a function `u` built from the Chern connection.
pub struct ChernJets {
    pub du: Vec<C64>,
    pub dbu: Vec<C64>,
    /// `u_{i jbar}` at `[i*n+j]`.
    pub u_hol_anti: Vec<C64>,
    /// `C nabla^{1,0} del u = (u_{ij} - Gamma^k_{ij} u_k) dz^i (x) dz^j` at `[i*n+j]`.
    pub c10: Vec<C64>,
    /// Lowered Chern torsion `T_{i j lbar} = d_i h_{j lbar} - d_j h_{i lbar}` at `[(i*n+j)*n+l]`.
    pub t_low: Vec<C64>,
}

impl ChernJets {
    pub fn new(lm: &LocalMetric, u: &Jet) -> Self {
        let n = lm.n;
        let cg = lm.chern_gamma_jets();
        let du: Vec<C64> = (0..n).map(|k| u.dz(k).value()).collect();
        let dbu: Vec<C64> = (0..n).map(|k| u.dzb(k).value()).collect();
        let mut u_hol_anti = vec![C64::new(0.0, 0.0); n * n];
        let mut c10 = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                u_hol_anti[i * n + j] = u.dz(i).dzb(j).value();
                let mut v = u.dz(i).dz(j).value();
                for k in 0..n {
                    v -= cg[k * n * n + i * n + j].value() * du[k];
                }
                c10[i * n + j] = v;
            }
        }
        let mut t_low = vec![C64::new(0.0, 0.0); n * n * n];
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    t_low[(i * n + j) * n + l] =
                        lm.hj(j, l).dz(i).value() - lm.hj(i, l).dz(j).value();
                }
            }
        }
        ChernJets {
            du,
            dbu,
            u_hol_anti,
            c10,
            t_low,
        }
    }

    /// Coefficients of `{C nabla^{1,0} del u, del u} = h^{j kbar} c_{ij} u_kbar dz^i`.
    pub fn c10_pair(&self, lm: &LocalMetric) -> Vec<C64> {
        let n = lm.n;
        (0..n)
            .map(|i| {
                let mut v = C64::new(0.0, 0.0);
                for j in 0..n {
                    for k in 0..n {
                        v += lm.gi(j, k) * self.c10[i * n + j] * self.dbu[k];
                    }
                }
                v
            })
            .collect()
    }

    /// Coefficients of `{del u, C nabla^{1,0} del u} = h^{a jbar} u_a conj(c_{ij}) dzbar^i`.
    pub fn pair_c10(&self, lm: &LocalMetric) -> Vec<C64> {
        let n = lm.n;
        (0..n)
            .map(|i| {
                let mut v = C64::new(0.0, 0.0);
                for a in 0..n {
                    for j in 0..n {
                        v += lm.gi(a, j) * self.du[a] * self.c10[i * n + j].conj();
                    }
                }
                v
            })
            .collect()
    }

    /// Coefficients of `{C nabla^{0,1} del u, del u} = h^{i kbar} u_{jbar i} u_kbar dzbar^j`.
    pub fn c01_pair(&self, lm: &LocalMetric) -> Vec<C64> {
        let n = lm.n;
        (0..n)
            .map(|j| {
                let mut v = C64::new(0.0, 0.0);
                for i in 0..n {
                    for k in 0..n {
                        v += lm.gi(i, k) * self.u_hol_anti[i * n + j] * self.dbu[k];
                    }
                }
                v
            })
            .collect()
    }

    /// Coefficients of `{del u, C nabla^{0,1} del u} = h^{a ibar} u_a conj(u_{jbar i}) dz^j`.
    pub fn pair_c01(&self, lm: &LocalMetric) -> Vec<C64> {
        let n = lm.n;
        (0..n)
            .map(|j| {
                let mut v = C64::new(0.0, 0.0);
                for a in 0..n {
                    for i in 0..n {
                        v += lm.gi(a, i) * self.du[a] * self.u_hol_anti[i * n + j].conj();
                    }
                }
                v
            })
            .collect()
    }

    /// Coefficients of `C T(U, ., Ubar) = h^{i abar} h^{b lbar} T_{i j lbar} u_abar u_b dz^j`.
    pub fn torsion_uu(&self, lm: &LocalMetric) -> Vec<C64> {
        let n = lm.n;
        let up = lm.sharp(&self.dbu);
        // h^{b lbar} u_b, the conjugate-side vector
        let w: Vec<C64> = (0..n)
            .map(|l| (0..n).map(|b| lm.gi(b, l) * self.du[b]).sum())
            .collect();
        (0..n)
            .map(|j| {
                let mut v = C64::new(0.0, 0.0);
                for i in 0..n {
                    for l in 0..n {
                        v += up[i] * w[l] * self.t_low[(i * n + j) * n + l];
                    }
                }
                v
            })
            .collect()
    }
}

fn one_form_values(n: usize, coeffs: &[C64], anti: bool, proto: &Jet) -> JetForm {
    let (p, q) = if anti { (0, 1) } else { (1, 0) };
    let z = proto.truncate(0).zero_like();
    let mut w = JetForm::zero(n, p, q, &z).expect("1-forms fit");
    for (k, &c) in coeffs.iter().enumerate() {
        let v = z.constant_like(c);
        if anti {
            w.set(0, bit(k), v);
        } else {
            w.set(bit(k), 0, v);
        }
    }
    w
}

/// Pointwise torsion-pairing identities behind the integrated statements
/// `-(tau^*(du ^ dbar u), A) = (<du, sqrt(-1) dbar^* omega> dbar u + Tbar(Ubar, ., U), A)` with
/// `A = {C nabla^{0,1} du, du}`, and its conjugate-type partner with `B = {C nabla^{1,0} du, du}`.
/// Returns `[lhs1, rhs1, lhs2, rhs2]` as pointwise inner products.
pub fn torsion_pairing_terms(lm: &LocalMetric, u: &Jet) -> Result<[C64; 4]> {
    let n = lm.n;
    let cj = ChernJets::new(lm, u);
    let g = |k: usize, l: usize| lm.gi(k, l);
    let du = one_form_values(n, &cj.du, false, u);
    let dbu = one_form_values(n, &cj.dbu, true, u);
    let dudb = du.wedge(&dbu)?;
    let lm0 = lm;
    let a = one_form_values(n, &cj.c01_pair(lm0), true, u);
    let b = one_form_values(n, &cj.c10_pair(lm0), false, u);
    let lhs1 = -inner(&dudb, &tau_from(lm, &a)?, &g)?;
    let lhs2 = -inner(&dudb, &tau_bar_from(lm, &b)?, &g)?;
    let dso = dbar_star_omega_from(lm)?;
    let dso_form = one_form_values(n, &dso, false, u);
    let c1 = inner(&du, &dso_form.scale(I), &g)?;
    let tuu = cj.torsion_uu(lm);
    let tconj: Vec<C64> = tuu.iter().map(|z| z.conj()).collect();
    let r1 = dbu.scale(c1).add(&one_form_values(n, &tconj, true, u))?;
    let rhs1 = inner(&r1, &a, &g)?;
    let c2 = inner(&dbu, &dso_form.conj().scale(I), &g)?;
    let r2 = du.scale(c2).sub(&one_form_values(n, &tuu, false, u))?;
    let rhs2 = inner(&r2, &b, &g)?;
    Ok([lhs1, rhs1, lhs2, rhs2])
}

/// Integrated torsion-pairing identities; residuals for both.
pub fn torsion_pairing_check(
    q: &Quadrature,
    m: &MetricField,
    u: &ScalarField,
) -> Result<[WeakResidual; 2]> {
    let v = q.integrate_many(4, |p| {
        let lm = LocalMetric::new(m, p, 1)?;
        Ok(torsion_pairing_terms(&lm, &u.jet(p, 2)?)?.to_vec())
    })?;
    Ok([WeakResidual::new(v[0], v[1]), WeakResidual::new(v[2], v[3])])
}

/// Weak forms of the two adjoint identities for `Omega = f du ^ dbar u`:
/// `(Omega, (tau + del) psi) = (f Delta u dbar u - f {du, C nabla^{1,0} du} - <du, df> dbar u, psi)` for a `(0,1)`-form `psi`, and
/// `(Omega, (taubar + delbar) chi) = (-f Delta u du + f {C nabla^{1,0} du, du} + <df, du> du, chi)` for a `(1,0)`-form `chi`,
/// with `Delta u = -tr_omega(sqrt(-1) del delbar u)` (balanced metrics).
pub fn weak_adjoint_identities_check(
    q: &Quadrature,
    m: &MetricField,
    u: &ScalarField,
    f: &ScalarField,
    psi: &FormField,
    chi: &FormField,
) -> Result<[WeakResidual; 2]> {
    if (psi.p, psi.q) != (0, 1) || (chi.p, chi.q) != (1, 0) {
        return Err(LabError::Bidegree("psi must be (0,1) and chi (1,0)".into()));
    }
    let n = m.n;
    let v = q.integrate_many(4, |p| {
        let lm = LocalMetric::new(m, p, 1)?;
        let g = |k: usize, l: usize| lm.gi(k, l);
        let uj = u.jet(p, 2)?;
        let fj = f.jet(p, 1)?;
        let cj = ChernJets::new(&lm, &uj);
        let fv = fj.value();
        let du = one_form_values(n, &cj.du, false, &uj);
        let dbu = one_form_values(n, &cj.dbu, true, &uj);
        let omega_u = du.wedge(&dbu)?.scale(fv);
        let ps = psi.at(p, 1)?;
        let ch = chi.at(p, 1)?;
        let ps0 = ps.reorder(0);
        let ch0 = ch.reorder(0);
        let t1 = tau_from(&lm, &ps0)?.add(&ps.del()?)?;
        let t2 = tau_bar_from(&lm, &ch0)?.add(&ch.delbar()?)?;
        let l1 = inner(&omega_u, &t1, &g)?;
        let l2 = inner(&omega_u, &t2, &g)?;
        let lap = -trace_ddbar(&lm, &uj);
        let df: Vec<C64> = (0..n).map(|k| fj.dz(k).value()).collect();
        let du_df = lm.pair10(&cj.du, &df);
        let df_du = lm.pair10(&df, &cj.du);
        let r1 = dbu
            .scale(fv * lap - du_df)
            .sub(&one_form_values(n, &cj.pair_c10(&lm), true, &uj).scale(fv))?;
        let r2 = du
            .scale(-fv * lap + df_du)
            .add(&one_form_values(n, &cj.c10_pair(&lm), false, &uj).scale(fv))?;
        Ok(vec![l1, inner(&r1, &ps0, &g)?, l2, inner(&r2, &ch0, &g)?])
    })?;
    Ok([WeakResidual::new(v[0], v[1]), WeakResidual::new(v[2], v[3])])
}

/// `Lambda(del delbar omega)` coefficients `[i*n+j]` of `dz^i ^ dzbar^j`.
pub fn lambda_ddbar_omega(lm: &LocalMetric) -> Result<Vec<C64>> {
    let n = lm.n;
    if n < 2 {
        return Ok(vec![C64::new(0.0, 0.0); n * n]);
    }
    let w = omega(lm).delbar()?.del()?.lambda(&lm.g)?;
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = w.value(bit(i), bit(j));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{flat_torus, fubini_study, iwasawa, nonbalanced_example};
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn wedge_and_conj_signs() {
        let sp = JetSpace::get(4);
        let one = Jet::constant(&sp, 1, c(1.0));
        let mut dz1 = JetForm::zero(2, 1, 0, &one).unwrap();
        dz1.set(1, 0, one.clone());
        let mut dz2 = JetForm::zero(2, 1, 0, &one).unwrap();
        dz2.set(2, 0, one.clone());
        let a = dz2.wedge(&dz1).unwrap();
        assert_eq!(a.value(3, 0), c(-1.0));
        let mut db1 = JetForm::zero(2, 0, 1, &one).unwrap();
        db1.set(0, 1, one.clone());
        // dzbar^1 ^ dz^1 = -dz^1 ^ dzbar^1
        assert_eq!(db1.wedge(&dz1).unwrap().value(1, 1), c(-1.0));
        // conj(dz^1 ^ dzbar^2) = dzbar^1 ^ dz^2 = -dz^2 ^ dzbar^1
        let mut m = JetForm::zero(2, 1, 1, &one).unwrap();
        m.set(1, 2, one.clone());
        assert_eq!(m.conj().value(2, 1), c(-1.0));
        // d^2 = 0 on a generic jet
        let z = crate::jet::coordinate_jets(&[C64::new(0.3, 0.1), C64::new(-0.2, 0.4)], 3);
        let f = &(&z[0] * &z[1].conj()) + &(&z[1] * &z[1]).exp();
        let u = JetForm::scalar(2, f);
        let ddb = u.delbar().unwrap().del().unwrap();
        let dbd = u.del().unwrap().delbar().unwrap();
        assert!(ddb.add(&dbd).unwrap().max_abs() < 1e-14);
        assert!(u.del().unwrap().del().unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn lambda_examples() {
        let t = flat_torus(2).unwrap();
        let o = ChartPoint::origin(2);
        let lm = LocalMetric::new(&t.metric, &o, 1).unwrap();
        assert!((omega(&lm).lambda(&lm.g).unwrap().value(0, 0) - c(2.0)).norm() < 1e-14);
        let fs = fubini_study(1).unwrap();
        let u = fs.eigenfunction.clone().unwrap();
        let lm = LocalMetric::new(&fs.metric, &ChartPoint::origin(1), 1).unwrap();
        let uj = u.jet(&ChartPoint::origin(1), 2).unwrap();
        let w = del_scalar(1, &uj)
            .wedge(&delbar_scalar(1, &uj))
            .unwrap()
            .scale(I);
        assert!(w.lambda(&lm.g).unwrap().value(0, 0).norm() < 1e-14);
        let t1 = flat_torus(1).unwrap();
        let u = t1.eigenfunction.clone().unwrap();
        let lm = LocalMetric::new(&t1.metric, &ChartPoint::origin(1), 1).unwrap();
        let uj = u.jet(&ChartPoint::origin(1), 2).unwrap();
        let w = JetForm::scalar(1, uj)
            .delbar()
            .unwrap()
            .del()
            .unwrap()
            .scale(I);
        assert!((w.lambda(&lm.g).unwrap().value(0, 0) - c(-0.5)).norm() < 1e-14);
        assert!(matches!(
            JetForm::scalar(1, lm.hj(0, 0).clone()).lambda(&lm.g),
            Err(LabError::Bidegree(_))
        ));
    }

    #[test]
    fn dbar_star_omega_values() {
        let nb = nonbalanced_example();
        let p = ChartPoint::new(vec![c(1.0), c(0.0)]);
        let lm = LocalMetric::new(&nb.metric, &p, 1).unwrap();
        let a = dbar_star_omega_from(&lm).unwrap();
        let b = dbar_star_omega_formula(&lm);
        for k in 0..2 {
            assert!((a[k] - b[k]).norm() < 1e-14);
        }
        // sqrt(-1) zbar^1 with h = e^{|z|^2}/2 I
        assert!((a[0] - C64::new(0.0, 1.0)).norm() < 1e-13);
        let w = iwasawa();
        for p in crate::sampling::random_points(&w.sample_box, 10, 2) {
            assert!(dbar_star_omega(&w.metric, &p)
                .unwrap()
                .iter()
                .all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn balanced_residuals() {
        let pts2 = crate::sampling::random_points(&DomainBoxExt::cube4(), 6, 1);
        let fs2 = fubini_study(2).unwrap();
        assert!(balanced_residual(&fs2.metric, &pts2).unwrap().max() < 1e-12);
        let nb = nonbalanced_example();
        let r = balanced_residual(&nb.metric, &pts2).unwrap();
        assert!(r.dbar_star_omega > 0.1 && r.d_omega_power > 0.1, "{r:?}");
        let w = iwasawa();
        let pts = crate::sampling::random_points(&w.sample_box, 6, 3);
        assert!(balanced_residual(&w.metric, &pts).unwrap().max() < 1e-12);
    }

    struct DomainBoxExt;
    impl DomainBoxExt {
        fn cube4() -> crate::charts::DomainBox {
            crate::charts::DomainBox::cube(4, -1.0, 1.0)
        }
    }

    #[test]
    fn tau_on_iwasawa_origin() {
        let w = iwasawa();
        let phi = FormField::one_form(3, 0, true, &ScalarField::constant(1.0));
        let t = tau_forms(&w.metric, &ChartPoint::origin(3), &phi).unwrap();
        // Hand expansion: del omega = -sqrt(-1) dz^1 dz^2 dzbar^3 at the origin.
        assert!((t.component(&[1], &[2]) - c(-1.0)).norm() < 1e-14);
        let mut rest = t.clone();
        rest.set(2, 4, t.get(2, 4).zero_like());
        assert!(rest.max_abs() < 1e-14);
        let fs = fubini_study(2).unwrap();
        let psi = FormField::one_form(2, 1, true, &ScalarField::constant(1.0));
        assert!(
            tau_forms(
                &fs.metric,
                &ChartPoint::new(vec![C64::new(0.2, 0.3), c(-0.5)]),
                &psi
            )
            .unwrap()
            .max_abs()
                < 1e-14
        );
    }

    #[test]
    fn laplacians() {
        let t = flat_torus(1).unwrap();
        let u = t.eigenfunction.clone().unwrap();
        assert!(
            (scalar_laplacian(&t.metric, &u, &ChartPoint::origin(1)).unwrap() - 1.0).abs() < 1e-14
        );
        let fs = fubini_study(1).unwrap();
        let u = fs.eigenfunction.clone().unwrap();
        assert!(
            (scalar_laplacian(&fs.metric, &u, &ChartPoint::origin(1)).unwrap() - 4.0).abs() < 1e-13
        );
        let p = ChartPoint::new(vec![C64::new(0.4, -0.3)]);
        let a = scalar_laplacian(&fs.metric, &u, &p).unwrap();
        let b = laplace_beltrami(&fs.metric, &u, &p).unwrap();
        assert!((a - b).abs() < 1e-12 && (a - 4.0 * u.value(&p).re).abs() < 1e-12);
        assert_eq!(
            scalar_laplacian(&fs.metric, &ScalarField::constant(2.0), &p).unwrap(),
            0.0
        );
        // Balanced but not Kaehler: the two Laplacians still agree.
        let w = iwasawa();
        let u = ScalarField::from_expression("x1 y2 + |z3|^2", |z| {
            &(&z[0].re() * &z[1].im()) + &(&z[2] * &z[2].conj())
        });
        let p = ChartPoint::new(vec![
            C64::new(0.3, -0.7),
            C64::new(0.2, 0.1),
            C64::new(-0.5, 0.9),
        ]);
        let a = scalar_laplacian(&w.metric, &u, &p).unwrap();
        let b = laplace_beltrami(&w.metric, &u, &p).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} {b}");
        // Not balanced: they differ.
        let nb = nonbalanced_example();
        let u = ScalarField::from_expression("x1", |z| z[0].re());
        let p = ChartPoint::new(vec![c(0.7), c(0.1)]);
        let a = scalar_laplacian(&nb.metric, &u, &p).unwrap();
        let b = laplace_beltrami(&nb.metric, &u, &p).unwrap();
        assert!((a - b).abs() > 1e-2);
    }

    #[test]
    fn quadrature_volumes_and_products() {
        let fs = fubini_study(1).unwrap();
        let q = Quadrature::for_entry(&fs, 128).unwrap();
        assert!((q.volume() - 2.0 * PI).abs() < 1e-6);
        let t = flat_torus(1).unwrap();
        let qt = Quadrature::for_entry(&t, 16).unwrap();
        assert!((qt.volume() - 4.0 * PI * PI).abs() < 1e-10);
        let u = FormField::from_scalar(1, &t.eigenfunction.clone().unwrap());
        let uu = inner_product(&qt, &t.metric, &u, &u).unwrap();
        assert!((uu - c(2.0 * PI * PI)).norm() < 1e-10);
        let w = iwasawa();
        let qi = Quadrature::for_entry(&w, 4).unwrap();
        assert!((qi.volume() - 8.0).abs() < 1e-12);
        let a = FormField::one_form(
            1,
            0,
            true,
            &ScalarField::from_expression("e^{i x}", |z| (&z[0].re() * I).exp()),
        );
        let b = FormField::one_form(
            1,
            0,
            true,
            &ScalarField::from_expression("cos y + x", |z| &z[0].im().cos() + &z[0].re()),
        );
        let ab = inner_product(&qt, &t.metric, &a, &b).unwrap();
        let ba = inner_product(&qt, &t.metric, &b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-12);
    }

    #[test]
    fn weak_adjoint_on_torus_and_fs() {
        let t = flat_torus(2).unwrap();
        let q = Quadrature::for_entry(&t, 8).unwrap();
        let phi = FormField::one_form(
            2,
            0,
            true,
            &ScalarField::from_expression("e^{i x1}", |z| (&z[0].re() * I).exp()),
        );
        let f = ScalarField::from_expression("cos x2", |z| z[1].re().cos());
        assert!(
            weak_adjoint_check(&q, &t.metric, &phi, &f)
                .unwrap()
                .residual
                < 1e-8
        );
        let phi2 = FormField::one_form(
            2,
            0,
            true,
            &ScalarField::from_expression("sin x1", |z| z[0].re().sin()),
        );
        let f2 = ScalarField::from_expression("cos x1", |z| z[0].re().cos());
        let r = weak_adjoint_check(&q, &t.metric, &phi2, &f2).unwrap();
        assert!(r.residual < 1e-10 && r.rhs.norm() > 1.0, "{r:?}");
        let fs = fubini_study(1).unwrap();
        let g = |z: &[Jet]| (&(&z[0] * &z[0].conj()) * -1.0).exp();
        let phi = FormField::one_form(
            1,
            0,
            true,
            &ScalarField::from_expression("z e^{-|z|^2}", move |z| &z[0] * &g(z)),
        );
        let f =
            ScalarField::from_expression("x^2 + y", |z| &(&z[0].re() * &z[0].re()) + &z[0].im());
        let r16 = weak_adjoint_check(
            &Quadrature::for_entry(&fs, 16).unwrap(),
            &fs.metric,
            &phi,
            &f,
        )
        .unwrap();
        let r64 = weak_adjoint_check(
            &Quadrature::for_entry(&fs, 64).unwrap(),
            &fs.metric,
            &phi,
            &f,
        )
        .unwrap();
        assert!(
            r64.residual < 1e-8 && r64.rhs.norm() > 0.1,
            "{r16:?} {r64:?}"
        );
        let zero = FormField::zero(1, 0, 1);
        assert_eq!(
            weak_adjoint_check(
                &Quadrature::for_entry(&fs, 4).unwrap(),
                &fs.metric,
                &zero,
                &f
            )
            .unwrap()
            .residual,
            0.0
        );
    }

    fn iwasawa_u() -> ScalarField {
        ScalarField::from_expression("cos 2pi x1 + sin 2pi y2 + cos 2pi(x1+x2)/2", |z| {
            let k = 2.0 * PI;
            &(&(&z[0].re() * k).cos() + &(&z[1].im() * k).sin())
                + &(&(&z[0].re() + &z[1].re()) * k).cos().scale_re(0.5)
        })
    }

    #[test]
    fn weak_dbar_commutation() {
        let t = flat_torus(1).unwrap();
        let q = Quadrature::for_entry(&t, 12).unwrap();
        let u = t.eigenfunction.clone().unwrap();
        let phi = FormField::one_form(
            1,
            0,
            true,
            &ScalarField::from_expression("sin x", |z| z[0].re().sin()),
        );
        let r = weak_dbar_commutation_check(&q, &t.metric, &u, &phi).unwrap();
        assert!(r.residual < 1e-8 && r.rhs.norm() > 0.1, "{r:?}");
        let w = iwasawa();
        let qi = Quadrature::for_entry(&w, 10).unwrap();
        let phi = FormField::one_form(
            3,
            1,
            true,
            &ScalarField::from_expression("e^{2 pi i x2} cos 2pi y1", |z| {
                &(&z[1].re() * (2.0 * PI * I)).exp() * &(&z[0].im() * (2.0 * PI)).cos()
            }),
        );
        let r = weak_dbar_commutation_check(&qi, &w.metric, &iwasawa_u(), &phi).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
    }

    #[test]
    fn adjoint_identities_and_torsion_pairing_on_iwasawa() {
        let w = iwasawa();
        let q = Quadrature::for_entry(&w, 8).unwrap();
        let u = iwasawa_u();
        let f = ScalarField::from_expression("1 + cos 2pi x1 / 3", |z| {
            &(&(&z[0].re() * (2.0 * PI)).cos() * (1.0 / 3.0)) + 1.0
        });
        // The pairings are quadratic in u, so the test forms carry doubled frequencies.
        let e2 = |z: &[Jet]| (&z[0].re() * (4.0 * PI * I)).exp();
        let psi = FormField::one_form(
            3,
            0,
            true,
            &ScalarField::from_expression("e^{4pi i x1}", e2),
        )
        .add(&FormField::one_form(
            3,
            1,
            true,
            &ScalarField::from_expression("cos 4pi y2", |z| (&z[1].im() * (4.0 * PI)).cos()),
        ))
        .unwrap();
        let em2 = |z: &[Jet]| (&z[0].re() * (-4.0 * PI * I)).exp();
        let chi = FormField::one_form(
            3,
            0,
            false,
            &ScalarField::from_expression("e^{-4pi i x1}", em2),
        )
        .add(&FormField::one_form(
            3,
            1,
            false,
            &ScalarField::from_expression("sin 4pi y2", |z| (&z[1].im() * (4.0 * PI)).sin()),
        ))
        .unwrap();
        let r = weak_adjoint_identities_check(&q, &w.metric, &u, &f, &psi, &chi).unwrap();
        for x in r {
            assert!(x.residual < 1e-8 && x.rhs.norm() > 1e-3, "{r:?}");
        }
        // Lattice-periodic u cannot depend on z^3, and then the torsion pairings vanish identically.
        let tp = torsion_pairing_check(&q, &w.metric, &u).unwrap();
        for x in tp {
            assert!(x.residual < 1e-10, "{tp:?}");
        }
        let u3 = ScalarField::from_expression("Re(z1 z3bar) + x2 y3", |z| {
            &(&z[0] * &z[2].conj()).re() + &(&z[1].re() * &z[2].im())
        });
        for p in crate::sampling::random_points(&w.sample_box, 5, 9) {
            let lm = LocalMetric::new(&w.metric, &p, 1).unwrap();
            let [l1, r1, l2, r2] = torsion_pairing_terms(&lm, &u3.jet(&p, 2).unwrap()).unwrap();
            assert!(
                (l1 - r1).norm() < 1e-12
                    && (l2 - r2).norm() < 1e-12
                    && r1.norm() > 1e-3
                    && r2.norm() > 1e-3,
                "{l1} {r1} {l2} {r2}"
            );
        }
    }

    #[test]
    fn torsion_pairing_pointwise_nonbalanced() {
        // The pointwise identity does not need balancedness; here dbar^* omega is nonzero.
        let nb = nonbalanced_example();
        let u = ScalarField::from_expression("x1 y2 + x1^2 + y1 x2", |z| {
            &(&(&z[0].re() * &z[1].im()) + &(&z[0].re() * &z[0].re())) + &(&z[0].im() * &z[1].re())
        });
        let p = ChartPoint::new(vec![C64::new(0.6, -0.2), C64::new(0.3, 0.5)]);
        let lm = LocalMetric::new(&nb.metric, &p, 1).unwrap();
        let [l1, r1, l2, r2] = torsion_pairing_terms(&lm, &u.jet(&p, 2).unwrap()).unwrap();
        assert!(
            (l1 - r1).norm() < 1e-12 && (l2 - r2).norm() < 1e-12 && r1.norm() > 1e-2,
            "{l1} {r1} {l2} {r2}"
        );
    }
}
