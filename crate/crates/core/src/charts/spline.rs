//! Tensor-product natural cubic splines on uniform grids, and metrics
//! interpolated from grid samples.

use super::{ChartPoint, DomainBox, MetricField};
use crate::jet::{Jet, JetSpace};
use crate::tensor::HermitianMatrix;
use crate::{LabError, Result, C64};

#[derive(Clone, Debug)]
struct Axis {
    lo: f64,
    g: usize,
    delta: f64,
    /// Row-major `g x g` map from node values to spline second derivatives.
    second: Vec<f64>,
}

impl Axis {
    fn new(lo: f64, hi: f64, g: usize) -> Result<Axis> {
        if g < 4 {
            return Err(LabError::InvalidArgument(format!(
                "spline axis needs at least 4 nodes, got {g}"
            )));
        }
        let delta = (hi - lo) / (g - 1) as f64;
        // Natural end conditions; interior rows M_{i-1} + 4 M_i + M_{i+1} = 6/d^2 (y_{i-1} - 2 y_i + y_{i+1}).
        let m = g - 2;
        let mut second = vec![0.0; g * g];
        for col in 0..g {
            let mut rhs = vec![0.0; m];
            for r in 0..m {
                let i = r + 1;
                let y = |k: usize| if k == col { 1.0 } else { 0.0 };
                rhs[r] = 6.0 / (delta * delta) * (y(i - 1) - 2.0 * y(i) + y(i + 1));
            }
            // Thomas algorithm for the constant tridiagonal (1, 4, 1).
            let mut c = vec![0.0; m];
            let mut d = vec![0.0; m];
            for r in 0..m {
                let denom = 4.0 - if r > 0 { c[r - 1] } else { 0.0 };
                c[r] = 1.0 / denom;
                d[r] = (rhs[r] - if r > 0 { d[r - 1] } else { 0.0 }) / denom;
            }
            for r in (0..m).rev() {
                let next = if r + 1 < m {
                    second[(r + 2) * g + col]
                } else {
                    0.0
                };
                second[(r + 1) * g + col] = d[r] - c[r] * next;
            }
        }
        Ok(Axis {
            lo,
            g,
            delta,
            second,
        })
    }

    /// Weights `w[k]` with `S^(a)(x) = sum_k w[k] y_k`.
    fn weights(&self, x: f64, a: u8) -> Vec<f64> {
        let g = self.g;
        let d = self.delta;
        let i = (((x - self.lo) / d).floor().max(0.0) as usize).min(g - 2);
        let t = (x - self.lo) / d - i as f64;
        let s = 1.0 - t;
        let (wa, wb, wc, wd) = match a {
            0 => (
                s,
                t,
                d * d / 6.0 * (s * s * s - s),
                d * d / 6.0 * (t * t * t - t),
            ),
            1 => (
                -1.0 / d,
                1.0 / d,
                d / 6.0 * (1.0 - 3.0 * s * s),
                d / 6.0 * (3.0 * t * t - 1.0),
            ),
            2 => (0.0, 0.0, s, t),
            3 => (0.0, 0.0, -1.0 / d, 1.0 / d),
            _ => (0.0, 0.0, 0.0, 0.0),
        };
        let mut w = vec![0.0; g];
        w[i] += wa;
        w[i + 1] += wb;
        for k in 0..g {
            w[k] += wc * self.second[i * g + k] + wd * self.second[(i + 1) * g + k];
        }
        w
    }
}

/// Interpolant of complex data on a uniform tensor grid.
#[derive(Clone, Debug)]
pub struct TensorSpline {
    axes: Vec<Axis>,
    /// One row-major array per component, last axis fastest.
    data: Vec<Vec<C64>>,
}

impl TensorSpline {
    pub fn new(domain: &DomainBox, grid: &[usize], data: Vec<Vec<C64>>) -> Result<Self> {
        if grid.len() != domain.dim() {
            return Err(LabError::InvalidArgument(
                "grid rank differs from domain rank".into(),
            ));
        }
        let axes = (0..grid.len())
            .map(|v| Axis::new(domain.lo[v], domain.hi[v], grid[v]))
            .collect::<Result<Vec<_>>>()?;
        let total: usize = grid.iter().product();
        if data.iter().any(|d| d.len() != total) {
            return Err(LabError::InvalidArgument(format!(
                "each component needs {total} samples"
            )));
        }
        Ok(TensorSpline { axes, data })
    }

    /// Partial derivative `d^alpha` of every component at `x`.
    pub fn eval(&self, x: &[f64], alpha: &[u8]) -> Vec<C64> {
        let w: Vec<Vec<f64>> = self
            .axes
            .iter()
            .enumerate()
            .map(|(v, ax)| ax.weights(x[v], alpha[v]))
            .collect();
        self.data
            .iter()
            .map(|d| {
                // Contract the last axis first, then the next, and so on.
                let mut cur = d.clone();
                for (v, ax) in self.axes.iter().enumerate().rev() {
                    let g = ax.g;
                    let outer = cur.len() / g;
                    let mut next = vec![C64::new(0.0, 0.0); outer];
                    for (o, slot) in next.iter_mut().enumerate() {
                        let row = &cur[o * g..(o + 1) * g];
                        *slot = row.iter().zip(&w[v]).map(|(y, wk)| y * wk).sum();
                    }
                    cur = next;
                }
                cur[0]
            })
            .collect()
    }

    /// Taylor jets of every component at `x`.
    pub fn jets(&self, x: &[f64], order: usize) -> Vec<Jet> {
        let space = JetSpace::get(x.len());
        let count = space.count(order);
        let mut coeffs = vec![vec![C64::new(0.0, 0.0); count]; self.data.len()];
        for idx in 0..count {
            let vals = self.eval(x, space.monomial(idx));
            let f = space.factorial(idx);
            for (c, v) in vals.into_iter().enumerate() {
                coeffs[c][idx] = v / f;
            }
        }
        coeffs
            .into_iter()
            .map(|c| Jet::from_coeffs(&space, order, c))
            .collect()
    }
}

/// Metric interpolating Hermitian samples given at every grid node (row-major,
/// last real coordinate fastest). Derivatives come from differentiating the spline.
pub fn spline_metric(
    n: usize,
    label: &str,
    domain: DomainBox,
    grid: &[usize],
    samples: &[HermitianMatrix],
) -> Result<MetricField> {
    if domain.dim() != 2 * n {
        return Err(LabError::InvalidArgument(format!(
            "domain has {} axes, expected {}",
            domain.dim(),
            2 * n
        )));
    }
    let upper: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let data: Vec<Vec<C64>> = upper
        .iter()
        .map(|&(i, j)| samples.iter().map(|h| h.get(i, j)).collect())
        .collect();
    let spline = std::sync::Arc::new(TensorSpline::new(&domain, grid, data)?);
    let assemble = move |vals: Vec<Jet>| -> Vec<Jet> {
        let mut h: Vec<Option<Jet>> = vec![None; n * n];
        for (c, &(i, j)) in upper.iter().enumerate() {
            h[i * n + j] = Some(vals[c].clone());
            if i != j {
                h[j * n + i] = Some(vals[c].conj());
            } else {
                h[i * n + i] = Some(vals[c].re());
            }
        }
        h.into_iter().map(|e| e.expect("filled")).collect()
    };
    let (s1, a1) = (spline.clone(), assemble.clone());
    let eval = move |p: &ChartPoint| {
        let h = a1(s1.jets(&p.real(), 0));
        HermitianMatrix::new(n, h.iter().map(|j| j.value()).collect())
    };
    let provider = move |p: &ChartPoint, order: usize| {
        if order > 3 {
            return Err(LabError::InvalidArgument(
                "spline metrics have derivatives up to order 3".into(),
            ));
        }
        Ok(assemble(spline.jets(&p.real(), order)))
    };
    Ok(MetricField::from_provider(n, label, domain, eval, provider))
}
