//! Dense complex tensors with holomorphic/antiholomorphic index tags, and
//! Hermitian matrices.

use crate::{LabError, Result, C64};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    HolLower,
    HolUpper,
    AntiLower,
    AntiUpper,
}

impl IndexKind {
    pub fn is_upper(self) -> bool {
        matches!(self, IndexKind::HolUpper | IndexKind::AntiUpper)
    }

    pub fn is_hol(self) -> bool {
        matches!(self, IndexKind::HolLower | IndexKind::HolUpper)
    }

    /// An upper index may be summed against a lower index of the same type.
    pub fn pairs_with(self, other: IndexKind) -> bool {
        self.is_hol() == other.is_hol() && self.is_upper() != other.is_upper()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor {
    dims: Vec<usize>,
    kinds: Vec<IndexKind>,
    data: Vec<C64>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

/// Advances a multi-index odometer; returns false after the last index.
fn bump(idx: &mut [usize], dims: &[usize]) -> bool {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < dims[a] {
            return true;
        }
        idx[a] = 0;
    }
    false
}

impl ComplexTensor {
    pub fn new(dims: Vec<usize>, kinds: Vec<IndexKind>, data: Vec<C64>) -> Result<Self> {
        if dims.len() != kinds.len() {
            return Err(LabError::Index(format!(
                "{} extents but {} index kinds",
                dims.len(),
                kinds.len()
            )));
        }
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(LabError::Index(format!(
                "data length {} does not match extents {:?}",
                data.len(),
                dims
            )));
        }
        Ok(ComplexTensor { dims, kinds, data })
    }

    pub fn zeros(dims: Vec<usize>, kinds: Vec<IndexKind>) -> Self {
        assert_eq!(dims.len(), kinds.len());
        let len = dims.iter().product();
        ComplexTensor {
            dims,
            kinds,
            data: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn from_fn(dims: Vec<usize>, kinds: Vec<IndexKind>, f: impl Fn(&[usize]) -> C64) -> Self {
        let mut t = Self::zeros(dims, kinds);
        if t.data.is_empty() {
            return t;
        }
        let mut idx = vec![0; t.dims.len()];
        let mut k = 0;
        loop {
            t.data[k] = f(&idx);
            k += 1;
            if !bump(&mut idx, &t.dims) {
                break;
            }
        }
        t
    }

    /// Kronecker delta with one upper and one lower index of the given holomorphy.
    pub fn delta(n: usize, hol: bool) -> Self {
        let kinds = if hol {
            vec![IndexKind::HolUpper, IndexKind::HolLower]
        } else {
            vec![IndexKind::AntiUpper, IndexKind::AntiLower]
        };
        Self::from_fn(vec![n, n], kinds, |i| {
            if i[0] == i[1] {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn kinds(&self) -> &[IndexKind] {
        &self.kinds
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (a, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.dims[a]);
            off = off * self.dims[a] + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: C64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|x| *x *= s);
        t
    }

    pub fn conj(&self) -> Self {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|x| *x = x.conj());
        t
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims || self.kinds != other.kinds {
            return Err(LabError::Index("tensor shapes differ".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut t = self.clone();
        t.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(t)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut t = self.clone();
        t.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a -= b);
        Ok(t)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self)
    }

    /// Entries of a rank-2 tensor as nested rows.
    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        assert_eq!(self.rank(), 2);
        (0..self.dims[0])
            .map(|i| (0..self.dims[1]).map(|j| self.get(&[i, j])).collect())
            .collect()
    }
}

pub fn max_abs(a: &ComplexTensor) -> f64 {
    a.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sums over the index pairs `(index of a, index of b)`. The result carries the
/// unpaired indices of `a` followed by those of `b`.
pub fn contract(
    a: &ComplexTensor,
    b: &ComplexTensor,
    pairs: &[(usize, usize)],
) -> Result<ComplexTensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(LabError::Index(format!("pair ({ia},{ib}) out of range")));
        }
        if used_a[ia] || used_b[ib] {
            return Err(LabError::Index(format!(
                "index used twice in pair ({ia},{ib})"
            )));
        }
        used_a[ia] = true;
        used_b[ib] = true;
        if a.dims[ia] != b.dims[ib] {
            return Err(LabError::Index(format!(
                "extent mismatch {} vs {} in pair ({ia},{ib})",
                a.dims[ia], b.dims[ib]
            )));
        }
        if !a.kinds[ia].pairs_with(b.kinds[ib]) {
            return Err(LabError::Index(format!(
                "cannot contract {:?} with {:?}",
                a.kinds[ia], b.kinds[ib]
            )));
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&i| !used_b[i]).collect();
    let mut dims = Vec::new();
    let mut kinds = Vec::new();
    for &i in &free_a {
        dims.push(a.dims[i]);
        kinds.push(a.kinds[i]);
    }
    for &i in &free_b {
        dims.push(b.dims[i]);
        kinds.push(b.kinds[i]);
    }
    let sum_dims: Vec<usize> = pairs.iter().map(|&(ia, _)| a.dims[ia]).collect();
    let sa = strides(&a.dims);
    let sb = strides(&b.dims);
    let mut out = ComplexTensor::zeros(dims.clone(), kinds);
    let mut ridx = vec![0; dims.len()];
    let mut k = 0;
    loop {
        let mut base_a = 0;
        let mut base_b = 0;
        for (r, &i) in free_a.iter().enumerate() {
            base_a += ridx[r] * sa[i];
        }
        for (r, &i) in free_b.iter().enumerate() {
            base_b += ridx[free_a.len() + r] * sb[i];
        }
        let mut acc = C64::new(0.0, 0.0);
        let mut sidx = vec![0; pairs.len()];
        loop {
            let mut oa = base_a;
            let mut ob = base_b;
            for (s, &(ia, ib)) in pairs.iter().enumerate() {
                oa += sidx[s] * sa[ia];
                ob += sidx[s] * sb[ib];
            }
            acc += a.data[oa] * b.data[ob];
            if !bump(&mut sidx, &sum_dims) {
                break;
            }
        }
        out.data[k] = acc;
        k += 1;
        if !bump(&mut ridx, &dims) {
            break;
        }
    }
    Ok(out)
}

/// Hermitian `n x n` matrix; `entries[i*n + j]` holds `h_{i jbar}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    entries: Vec<C64>,
}

impl HermitianMatrix {
    /// Symmetrizes the input; rejects deviations above `1e-12` relative to the entry scale.
    pub fn new(n: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(LabError::Index(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let scale = entries
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let mut e = entries;
        for i in 0..n {
            for j in i..n {
                let a = e[i * n + j];
                let b = e[j * n + i].conj();
                if (a - b).norm() > 1e-12 * scale {
                    return Err(LabError::InvalidArgument(format!(
                        "matrix not Hermitian at ({i},{j}): deviation {:e}",
                        (a - b).norm()
                    )));
                }
                let m = (a + b) * 0.5;
                e[i * n + j] = m;
                e[j * n + i] = m.conj();
            }
        }
        Ok(HermitianMatrix { n, entries: e })
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = C64::new(s, 0.0);
        }
        HermitianMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Plain matrix product, row-major.
    pub fn matmul(&self, other: &HermitianMatrix) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `h(v, w) = h_{i jbar} v^i conj(w^j)`.
    pub fn pair(&self, v: &[C64], w: &[C64]) -> C64 {
        let n = self.n;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.get(i, j) * v[i] * w[j].conj();
            }
        }
        acc
    }

    /// Lower-triangular Cholesky factor `L` with `H = L L^*`.
    pub fn cholesky(&self) -> Result<Vec<C64>> {
        let n = self.n;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut l = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 1e-14 * scale) {
                return Err(LabError::SingularMetric(format!(
                    "non-positive pivot {d:e} at {j}"
                )));
            }
            let djj = d.sqrt();
            l[j * n + j] = C64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(l)
    }

    /// Tensor `h_{i jbar}` with two lower indices.
    pub fn to_tensor(&self) -> ComplexTensor {
        ComplexTensor::new(
            vec![self.n, self.n],
            vec![IndexKind::HolLower, IndexKind::AntiLower],
            self.entries.clone(),
        )
        .expect("shape is consistent")
    }
}

/// Matrix inverse `R` with `H R = I`, via Cholesky.
pub fn hermitian_inverse(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let n = h.n;
    let l = h.cholesky()?;
    // Solve L Y = I, then L^* R = Y.
    let mut y = vec![C64::new(0.0, 0.0); n * n];
    for c in 0..n {
        for i in 0..n {
            let mut s = if i == c {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            for k in 0..i {
                s -= l[i * n + k] * y[k * n + c];
            }
            y[i * n + c] = s / l[i * n + i];
        }
    }
    let mut r = vec![C64::new(0.0, 0.0); n * n];
    for c in 0..n {
        for i in (0..n).rev() {
            let mut s = y[i * n + c];
            for k in i + 1..n {
                s -= l[k * n + i].conj() * r[k * n + c];
            }
            r[i * n + c] = s / l[i * n + i];
        }
    }
    HermitianMatrix::new(n, r)
}

/// `h^{k lbar}` as a tensor with two upper indices; entry `[k][l]` is `R[l][k]`
/// for `R = H^{-1}`, so that `h^{k lbar} h_{j lbar} = delta^k_j`.
pub fn inverse_metric_tensor(h: &HermitianMatrix) -> Result<ComplexTensor> {
    let r = hermitian_inverse(h)?;
    let n = h.n;
    Ok(ComplexTensor::from_fn(
        vec![n, n],
        vec![IndexKind::HolUpper, IndexKind::AntiUpper],
        |i| r.get(i[1], i[0]),
    ))
}
