//! Chern and Strominger-Bismut connection coefficients, torsion, and the
//! covariant Hessians `t_{ij}`, `s_{jbar i}` of scalar fields.
//!
//! `Gamma^k_{ij}` is the `d_k` component of `nabla_{d_i} d_j`. Mixed
//! Strominger-Bismut coefficients `Gamma^k_{ibar j}` are stored in the
//! `(ibar, j)` slot order.

use crate::charts::{ChartPoint, MetricField, MetricJet, Regime, ScalarField};
use crate::jet::Jet;
use crate::tensor::{ComplexTensor, HermitianMatrix, IndexKind};
use crate::{Result, C64};
use serde::Serialize;

/// Metric jets and inverse-metric jets at one point.
#[derive(Clone, Debug)]
pub struct LocalMetric {
    pub point: ChartPoint,
    pub n: usize,
    pub order: usize,
    pub regime: Regime,
    pub jet: MetricJet,
    /// `g[k*n + l]` is the jet of `h^{k lbar}`.
    pub g: Vec<Jet>,
    h_val: Vec<C64>,
    g_val: Vec<C64>,
}

impl LocalMetric {
    pub fn new(m: &MetricField, p: &ChartPoint, order: usize) -> Result<Self> {
        let jet = m.jet(p, order)?;
        let g = jet.inverse()?;
        let h_val = jet.h.iter().map(|j| j.value()).collect();
        let g_val = g.iter().map(|j| j.value()).collect();
        Ok(LocalMetric {
            point: p.clone(),
            n: m.n,
            order,
            regime: m.regime(),
            jet,
            g,
            h_val,
            g_val,
        })
    }

    /// `h_{i jbar}` at the point.
    pub fn h(&self, i: usize, j: usize) -> C64 {
        self.h_val[i * self.n + j]
    }

    /// `h^{k lbar}` at the point.
    pub fn gi(&self, k: usize, l: usize) -> C64 {
        self.g_val[k * self.n + l]
    }

    pub fn hj(&self, i: usize, j: usize) -> &Jet {
        self.jet.entry(i, j)
    }

    pub fn matrix(&self) -> HermitianMatrix {
        HermitianMatrix::new(self.n, self.h_val.clone()).expect("metric jets are Hermitian")
    }

    /// `(1,0)`-vector `U^k = h^{k abar} u_abar` dual to `du`.
    pub fn sharp(&self, dbar_u: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|k| (0..n).map(|a| self.gi(k, a) * dbar_u[a]).sum())
            .collect()
    }

    /// `h^{i jbar} a_i conj(b_j)` for `(1,0)`-covector components.
    pub fn pair10(&self, a: &[C64], b: &[C64]) -> C64 {
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.gi(i, j) * a[i] * b[j].conj();
            }
        }
        acc
    }

    /// Jets of the Chern coefficients `Gamma^k_{ij} = h^{k lbar} d_i h_{j lbar}`, flattened `[k][i][j]`.
    pub fn chern_gamma_jets(&self) -> Vec<Jet> {
        let n = self.n;
        let dh: Vec<Jet> = (0..n * n * n)
            .map(|x| self.hj(x / n % n, x % n).dz(x / (n * n)))
            .collect();
        let mut out = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = self.g[k * n].zero_like().truncate(self.order - 1);
                    for l in 0..n {
                        acc += &(&self.g[k * n + l] * &dh[i * n * n + j * n + l]);
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    /// Jets of `Gamma^k_{ibar j} = h^{k lbar}(dbar_i h_{j lbar} - dbar_l h_{j ibar})`, flattened `[k][i][j]`.
    pub fn sb_mixed_jets(&self) -> Vec<Jet> {
        let n = self.n;
        // dbar[a][j][l] = dbar_a h_{j lbar}
        let db: Vec<Jet> = (0..n * n * n)
            .map(|x| self.hj(x / n % n, x % n).dzb(x / (n * n)))
            .collect();
        let mut out = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = self.g[k * n].zero_like().truncate(self.order - 1);
                    for l in 0..n {
                        let d = &db[i * n * n + j * n + l] - &db[l * n * n + j * n + i];
                        acc += &(&self.g[k * n + l] * &d);
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    /// Chern torsion values `T^k_{ij} = Gamma^k_{ij} - Gamma^k_{ji}`, flattened `[k][i][j]`.
    pub fn chern_torsion_values(&self) -> Vec<C64> {
        let n = self.n;
        let cg = self.chern_gamma_jets();
        let mut t = vec![C64::new(0.0, 0.0); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    t[k * n * n + i * n + j] =
                        cg[k * n * n + i * n + j].value() - cg[k * n * n + j * n + i].value();
                }
            }
        }
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConnectionKind {
    Chern,
    StromingerBismut,
}

#[derive(Clone, Debug)]
pub struct ConnectionCoefficients {
    pub kind: ConnectionKind,
    /// `Gamma^k_{ij}` at `[k, i, j]`.
    pub gamma_hol: ComplexTensor,
    /// `Gamma^k_{ibar j}` at `[k, i, j]`; zero for Chern.
    pub gamma_mixed: ComplexTensor,
}

fn tensor3(
    n: usize,
    kinds: [IndexKind; 3],
    vals: impl Fn(usize, usize, usize) -> C64,
) -> ComplexTensor {
    ComplexTensor::from_fn(vec![n; 3], kinds.to_vec(), |x| vals(x[0], x[1], x[2]))
}

const HOL_KINDS: [IndexKind; 3] = [
    IndexKind::HolUpper,
    IndexKind::HolLower,
    IndexKind::HolLower,
];
const MIXED_KINDS: [IndexKind; 3] = [
    IndexKind::HolUpper,
    IndexKind::AntiLower,
    IndexKind::HolLower,
];

pub fn chern_connection(m: &MetricField, p: &ChartPoint) -> Result<ConnectionCoefficients> {
    let lm = LocalMetric::new(m, p, 1)?;
    Ok(chern_from(&lm))
}

pub fn chern_from(lm: &LocalMetric) -> ConnectionCoefficients {
    let n = lm.n;
    let cg = lm.chern_gamma_jets();
    ConnectionCoefficients {
        kind: ConnectionKind::Chern,
        gamma_hol: tensor3(n, HOL_KINDS, |k, i, j| cg[k * n * n + i * n + j].value()),
        gamma_mixed: ComplexTensor::zeros(vec![n; 3], MIXED_KINDS.to_vec()),
    }
}

pub fn sb_connection(m: &MetricField, p: &ChartPoint) -> Result<ConnectionCoefficients> {
    let lm = LocalMetric::new(m, p, 1)?;
    Ok(sb_from(&lm))
}

pub fn sb_from(lm: &LocalMetric) -> ConnectionCoefficients {
    let n = lm.n;
    let cg = lm.chern_gamma_jets();
    let sm = lm.sb_mixed_jets();
    ConnectionCoefficients {
        kind: ConnectionKind::StromingerBismut,
        gamma_hol: tensor3(n, HOL_KINDS, |k, i, j| cg[k * n * n + j * n + i].value()),
        gamma_mixed: tensor3(n, MIXED_KINDS, |k, i, j| sm[k * n * n + i * n + j].value()),
    }
}

#[derive(Clone, Debug)]
pub struct TorsionTensor {
    pub kind: ConnectionKind,
    /// `T^k_{ij}` at `[k, i, j]`.
    pub t: ComplexTensor,
    /// `T_{ij lbar} = h_{k lbar} T^k_{ij}` at `[i, j, l]`.
    pub lowered: ComplexTensor,
}

pub fn torsion(
    c: &ConnectionCoefficients,
    m: &MetricField,
    p: &ChartPoint,
) -> Result<TorsionTensor> {
    let h = m.eval(p)?;
    Ok(torsion_with(c, &h))
}

pub fn torsion_with(c: &ConnectionCoefficients, h: &HermitianMatrix) -> TorsionTensor {
    let n = h.n();
    let g = &c.gamma_hol;
    let t = tensor3(n, HOL_KINDS, |k, i, j| {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            g.get(&[k, i, j]) - g.get(&[k, j, i])
        }
    });
    let lowered = tensor3(
        n,
        [
            IndexKind::HolLower,
            IndexKind::HolLower,
            IndexKind::AntiLower,
        ],
        |i, j, l| (0..n).map(|k| h.get(k, l) * t.get(&[k, i, j])).sum(),
    );
    TorsionTensor {
        kind: c.kind,
        t,
        lowered,
    }
}

#[derive(Clone, Debug)]
pub struct HessianPair {
    /// `t_{ij} = u_{ij} - SB Gamma^k_{ij} u_k`.
    pub t: ComplexTensor,
    /// `s_{i jbar} = conj(s_{ibar j})`.
    pub s: ComplexTensor,
    /// `s_{ibar j} = u_{ibar j} - SB Gamma^k_{ibar j} u_k` at `[i, j]`.
    pub s_bar_first: ComplexTensor,
}

/// Hessians from a scalar jet of order `>= 2` and SB coefficient values.
pub fn hessians_from(lm: &LocalMetric, u: &Jet) -> HessianPair {
    let n = lm.n;
    let cg = lm.chern_gamma_jets();
    let sm = lm.sb_mixed_jets();
    let du: Vec<C64> = (0..n).map(|k| u.dz(k).value()).collect();
    let t = ComplexTensor::from_fn(
        vec![n, n],
        vec![IndexKind::HolLower, IndexKind::HolLower],
        |x| {
            let (i, j) = (x[0], x[1]);
            let mut v = u.dz(i).dz(j).value();
            for k in 0..n {
                v -= cg[k * n * n + j * n + i].value() * du[k];
            }
            v
        },
    );
    let sb = ComplexTensor::from_fn(
        vec![n, n],
        vec![IndexKind::AntiLower, IndexKind::HolLower],
        |x| {
            let (i, j) = (x[0], x[1]);
            let mut v = u.dzb(i).dz(j).value();
            for k in 0..n {
                v -= sm[k * n * n + i * n + j].value() * du[k];
            }
            v
        },
    );
    let s = ComplexTensor::from_fn(
        vec![n, n],
        vec![IndexKind::HolLower, IndexKind::AntiLower],
        |x| sb.get(&[x[0], x[1]]).conj(),
    );
    HessianPair {
        t,
        s,
        s_bar_first: sb,
    }
}

pub fn hessians(m: &MetricField, u: &ScalarField, p: &ChartPoint) -> Result<HessianPair> {
    let lm = LocalMetric::new(m, p, 1)?;
    let uj = u.jet(p, 2)?;
    Ok(hessians_from(&lm, &uj))
}

/// Largest relative error of `d_i h_{j lbar} = h_{k lbar} Gamma^k_{ij}` for the Chern connection.
pub fn metric_compatibility_error(m: &MetricField, p: &ChartPoint) -> Result<f64> {
    let lm = LocalMetric::new(m, p, 1)?;
    let n = lm.n;
    let c = chern_from(&lm);
    let mut err: f64 = 0.0;
    let mut scale: f64 = 1e-300;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let lhs = lm.hj(j, l).dz(i).value();
                let rhs: C64 = (0..n)
                    .map(|k| lm.h(k, l) * c.gamma_hol.get(&[k, i, j]))
                    .sum();
                err = err.max((lhs - rhs).norm());
                scale = scale.max(lhs.norm());
            }
        }
    }
    Ok(err / scale.max(1.0))
}
