//! Fourth-order central finite differences assembled into jets.

use super::DomainBox;
use crate::jet::{Jet, JetSpace};
use crate::{LabError, Result, C64};
use std::collections::HashMap;

/// Offsets and weights (before dividing by `h^k`) of the 1D stencil for the
/// `k`-th derivative.
fn stencil(k: u8) -> (&'static [i8], &'static [f64], f64) {
    match k {
        0 => (&[0], &[1.0], 1.0),
        1 => (&[-2, -1, 1, 2], &[1.0, -8.0, 8.0, -1.0], 12.0),
        2 => (&[-2, -1, 0, 1, 2], &[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (
            &[-3, -2, -1, 1, 2, 3],
            &[1.0, -8.0, 13.0, -13.0, 8.0, -1.0],
            8.0,
        ),
        _ => panic!("finite-difference order {k} unsupported"),
    }
}

/// Largest stencil offset used for derivatives up to `order`.
pub fn stencil_radius(order: usize) -> i8 {
    if order >= 3 {
        3
    } else if order >= 1 {
        2
    } else {
        0
    }
}

/// Per-coordinate step `rel * (1 + |x|)`.
pub fn steps(x0: &[f64], rel: f64) -> Vec<f64> {
    x0.iter().map(|x| rel * (1.0 + x.abs())).collect()
}

/// Jets of order `order <= 3` for each component of a vector-valued function
/// of the real coordinates, built from tensor-product central stencils.
pub fn fd_jets<F>(
    f: F,
    x0: &[f64],
    order: usize,
    rel_step: f64,
    domain: Option<&DomainBox>,
    ncomp: usize,
) -> Result<Vec<Jet>>
where
    F: Fn(&[f64]) -> Result<Vec<C64>>,
{
    if order > 3 {
        return Err(LabError::InvalidArgument(format!(
            "finite differences support order <= 3, got {order}"
        )));
    }
    let nv = x0.len();
    let space = JetSpace::get(nv);
    let h = steps(x0, rel_step);
    if let Some(d) = domain {
        let r = stencil_radius(order) as f64;
        for v in 0..nv {
            if x0[v] - r * h[v] < d.lo[v] || x0[v] + r * h[v] > d.hi[v] {
                return Err(LabError::Domain(format!(
                    "stencil around coordinate {v} = {} leaves [{}, {}]",
                    x0[v], d.lo[v], d.hi[v]
                )));
            }
        }
    }
    let mut cache: HashMap<Vec<i8>, Vec<C64>> = HashMap::new();
    let mut eval = |off: &[i8]| -> Result<Vec<C64>> {
        if let Some(v) = cache.get(off) {
            return Ok(v.clone());
        }
        let x: Vec<f64> = (0..nv).map(|v| x0[v] + off[v] as f64 * h[v]).collect();
        let val = f(&x)?;
        if val.len() != ncomp {
            return Err(LabError::InvalidArgument("component count changed".into()));
        }
        cache.insert(off.to_vec(), val.clone());
        Ok(val)
    };
    let count = space.count(order);
    let mut coeffs = vec![vec![C64::new(0.0, 0.0); count]; ncomp];
    for idx in 0..count {
        let alpha = space.monomial(idx).to_vec();
        let axes: Vec<usize> = (0..nv).filter(|&v| alpha[v] > 0).collect();
        let mut denom = 1.0;
        for &v in &axes {
            let (_, _, d) = stencil(alpha[v]);
            denom *= d * h[v].powi(alpha[v] as i32);
        }
        // Cartesian product of the per-axis stencils.
        let mut pos = vec![0usize; axes.len()];
        let mut acc = vec![C64::new(0.0, 0.0); ncomp];
        loop {
            let mut off = vec![0i8; nv];
            let mut w = 1.0;
            for (a, &v) in axes.iter().enumerate() {
                let (o, wt, _) = stencil(alpha[v]);
                off[v] = o[pos[a]];
                w *= wt[pos[a]];
            }
            let val = eval(&off)?;
            for c in 0..ncomp {
                acc[c] += val[c] * w;
            }
            let mut a = axes.len();
            let mut done = true;
            while a > 0 {
                a -= 1;
                pos[a] += 1;
                if pos[a] < stencil(alpha[axes[a]]).0.len() {
                    done = false;
                    break;
                }
                pos[a] = 0;
            }
            if done {
                break;
            }
        }
        let fact = space.factorial(idx);
        for c in 0..ncomp {
            coeffs[c][idx] = acc[c] / (denom * fact);
        }
    }
    Ok(coeffs
        .into_iter()
        .map(|c| Jet::from_coeffs(&space, order, c))
        .collect())
}
