//! Truncated multivariate Taylor expansions ("jets") in the real chart
//! coordinates `x^1, y^1, ..., x^n, y^n`, with complex coefficients.
//!
//! A jet of order `k` at a point stores `f^(alpha)(p) / alpha!` for every
//! multi-index with `|alpha| <= k`. Arithmetic is exact up to truncation, so
//! closed-form metrics written over jets give derivatives to round-off.

use crate::{LabError, Result, C64};
use smallvec::SmallVec;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Highest order any jet space supports.
pub const MAX_ORDER: usize = 4;

type Coeffs = SmallVec<[C64; 10]>;

#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    monos: Vec<Vec<u8>>,
    /// `count[k]` = number of monomials of degree `<= k`.
    count: Vec<usize>,
    /// Triples `(a, b, a+b)` ordered by the degree of `a+b`.
    products: Vec<(u32, u32, u32)>,
    /// `prod_end[k]` = number of products with result degree `<= k`.
    prod_end: Vec<usize>,
    /// Per variable: `(src, dst, factor)` for `d/dx_v`.
    derivs: Vec<Vec<(u32, u32, f64)>>,
    factorial_weight: Vec<f64>,
}

fn monomials(nvars: usize, deg: usize) -> Vec<Vec<u8>> {
    // All exponent vectors of total degree `deg`, lexicographically descending.
    fn rec(nvars: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == nvars - 1 {
            cur.push(left as u8);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e as u8);
            rec(nvars, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if nvars == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(nvars, deg, &mut Vec::new(), &mut out);
    out
}

impl JetSpace {
    fn build(nvars: usize) -> JetSpace {
        let mut monos = Vec::new();
        let mut count = Vec::new();
        for d in 0..=MAX_ORDER {
            monos.extend(monomials(nvars, d));
            count.push(monos.len());
        }
        let index: HashMap<Vec<u8>, usize> = monos
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let deg = |m: &Vec<u8>| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut products = Vec::new();
        let mut prod_end = Vec::new();
        for d in 0..=MAX_ORDER {
            for (a, ma) in monos.iter().enumerate() {
                let da = deg(ma);
                if da > d {
                    break;
                }
                for (b, mb) in monos.iter().enumerate() {
                    if da + deg(mb) != d {
                        continue;
                    }
                    let sum: Vec<u8> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                    products.push((a as u32, b as u32, index[&sum] as u32));
                }
            }
            prod_end.push(products.len());
        }
        let mut derivs = vec![Vec::new(); nvars];
        for (src, m) in monos.iter().enumerate() {
            for v in 0..nvars {
                if m[v] > 0 {
                    let mut t = m.clone();
                    t[v] -= 1;
                    derivs[v].push((src as u32, index[&t] as u32, m[v] as f64));
                }
            }
        }
        let factorial_weight = monos
            .iter()
            .map(|m| {
                m.iter()
                    .map(|&e| (1..=e as u64).product::<u64>() as f64)
                    .product()
            })
            .collect();
        JetSpace {
            nvars,
            monos,
            count,
            products,
            prod_end,
            derivs,
            factorial_weight,
        }
    }

    /// Shared space for `nvars` real variables.
    pub fn get(nvars: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        guard
            .entry(nvars)
            .or_insert_with(|| Arc::new(JetSpace::build(nvars)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn count(&self, order: usize) -> usize {
        self.count[order]
    }

    pub fn monomial(&self, idx: usize) -> &[u8] {
        &self.monos[idx]
    }

    /// `alpha!` for the monomial at `idx`.
    pub fn factorial(&self, idx: usize) -> f64 {
        self.factorial_weight[idx]
    }

    pub fn index_of(&self, m: &[u8]) -> Option<usize> {
        let d: usize = m.iter().map(|&e| e as usize).sum();
        if d > MAX_ORDER {
            return None;
        }
        let lo = if d == 0 { 0 } else { self.count[d - 1] };
        (lo..self.count[d]).find(|&i| self.monos[i] == m)
    }
}

#[derive(Clone, Debug)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    c: Coeffs,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, order: usize, v: C64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c: Coeffs = SmallVec::from_elem(zero(), space.count(order));
        c[0] = v;
        Jet {
            space: space.clone(),
            order,
            c,
        }
    }

    /// The real coordinate `v` expanded about `value`.
    pub fn variable(space: &Arc<JetSpace>, order: usize, v: usize, value: f64) -> Jet {
        let mut j = Jet::constant(space, order, C64::new(value, 0.0));
        if order >= 1 {
            // degree-1 monomials are ordered e_0, e_1, ...
            let idx = space
                .index_of(&unit(space.nvars, v))
                .expect("unit monomial");
            j.c[idx] = C64::new(1.0, 0.0);
        }
        j
    }

    /// Builds a jet from Taylor coefficients indexed like the space's monomials.
    pub fn from_coeffs(space: &Arc<JetSpace>, order: usize, coeffs: Vec<C64>) -> Jet {
        assert_eq!(coeffs.len(), space.count(order));
        Jet {
            space: space.clone(),
            order,
            c: SmallVec::from_vec(coeffs),
        }
    }

    pub fn zero_like(&self) -> Jet {
        Jet::constant(&self.space, self.order, zero())
    }

    pub fn constant_like(&self, v: C64) -> Jet {
        Jet::constant(&self.space, self.order, v)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    /// Partial derivative `d^alpha f(p)` for the monomial at `idx`.
    pub fn derivative_at(&self, idx: usize) -> C64 {
        self.c[idx] * self.space.factorial(idx)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            space: self.space.clone(),
            order,
            c: SmallVec::from_slice(&self.c[..self.space.count(order)]),
        }
    }

    pub fn conj(&self) -> Jet {
        let mut j = self.clone();
        j.c.iter_mut().for_each(|z| *z = z.conj());
        j
    }

    pub fn re(&self) -> Jet {
        let mut j = self.clone();
        j.c.iter_mut().for_each(|z| *z = C64::new(z.re, 0.0));
        j
    }

    pub fn im(&self) -> Jet {
        let mut j = self.clone();
        j.c.iter_mut().for_each(|z| *z = C64::new(z.im, 0.0));
        j
    }

    pub fn scale(&self, s: C64) -> Jet {
        let mut j = self.clone();
        j.c.iter_mut().for_each(|z| *z *= s);
        j
    }

    pub fn scale_re(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.c.iter_mut().for_each(|z| *z *= s);
        j
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Real partial derivative `d/dx_v`; the order drops by one.
    pub fn d(&self, v: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let lim = self.space.count(self.order) as u32;
        let mut c: Coeffs = SmallVec::from_elem(zero(), self.space.count(order));
        for &(src, dst, f) in &self.space.derivs[v] {
            if src < lim {
                c[dst as usize] += self.c[src as usize] * f;
            }
        }
        Jet {
            space: self.space.clone(),
            order,
            c,
        }
    }

    /// Wirtinger `d/dz^k = (d/dx^k - i d/dy^k) / 2`.
    pub fn dz(&self, k: usize) -> Jet {
        let dx = self.d(2 * k);
        let dy = self.d(2 * k + 1);
        dx.combine(&dy, C64::new(0.5, 0.0), C64::new(0.0, -0.5))
    }

    /// Wirtinger `d/dzbar^k = (d/dx^k + i d/dy^k) / 2`.
    pub fn dzb(&self, k: usize) -> Jet {
        let dx = self.d(2 * k);
        let dy = self.d(2 * k + 1);
        dx.combine(&dy, C64::new(0.5, 0.0), C64::new(0.0, 0.5))
    }

    /// `a*self + b*other`, truncated to the lower order.
    pub fn combine(&self, other: &Jet, a: C64, b: C64) -> Jet {
        let order = self.order.min(other.order);
        let n = self.space.count(order);
        let c = (0..n).map(|i| a * self.c[i] + b * other.c[i]).collect();
        Jet {
            space: self.space.clone(),
            order,
            c,
        }
    }

    fn mul_jet(&self, o: &Jet) -> Jet {
        let order = self.order.min(o.order);
        let mut c: Coeffs = SmallVec::from_elem(zero(), self.space.count(order));
        for &(a, b, r) in &self.space.products[..self.space.prod_end[order]] {
            c[r as usize] += self.c[a as usize] * o.c[b as usize];
        }
        Jet {
            space: self.space.clone(),
            order,
            c,
        }
    }

    /// `sum_m taylor[m] (self - self(p))^m`, for a function with Taylor
    /// coefficients `taylor[m] = f^(m)(a)/m!` at `a = self(p)`.
    pub fn compose(&self, taylor: &[C64]) -> Jet {
        let mut r = self.clone();
        r.c[0] = zero();
        let mut out = self.constant_like(taylor[0]);
        let mut pow = r.clone();
        for (m, &t) in taylor.iter().enumerate().skip(1) {
            if m > self.order {
                break;
            }
            if t != zero() {
                for (o, p) in out.c.iter_mut().zip(pow.c.iter()) {
                    *o += t * p;
                }
            }
            if m < self.order {
                pow = pow.mul_jet(&r);
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let inv = 1.0 / a;
        let mut t = Vec::with_capacity(self.order + 1);
        let mut p = inv;
        for m in 0..=self.order {
            t.push(if m % 2 == 0 { p } else { -p });
            p *= inv;
        }
        self.compose(&t)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut t = Vec::new();
        let mut f = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                f *= m as f64;
            }
            t.push(e / f);
        }
        self.compose(&t)
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut t = vec![a.ln()];
        let inv = 1.0 / a;
        let mut p = inv;
        for m in 1..=self.order {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            t.push(p * (sign / m as f64));
            p *= inv;
        }
        self.compose(&t)
    }

    /// `self^e` on the principal branch.
    pub fn powf(&self, e: f64) -> Jet {
        let a = self.value();
        let mut t = Vec::new();
        let mut binom = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                binom *= (e - (m as f64 - 1.0)) / m as f64;
            }
            t.push(a.powf(e - m as f64) * binom);
        }
        self.compose(&t)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sin(), a.cos());
        let cyc = [s, c, -s, -c];
        let mut t = Vec::new();
        let mut f = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                f *= m as f64;
            }
            t.push(cyc[m % 4] / f);
        }
        self.compose(&t)
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        let (s, c) = (a.sin(), a.cos());
        let cyc = [c, -s, -c, s];
        let mut t = Vec::new();
        let mut f = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                f *= m as f64;
            }
            t.push(cyc[m % 4] / f);
        }
        self.compose(&t)
    }

    /// Arcsine of a real-valued jet with `|value| < 1`.
    pub fn asin(&self) -> Result<Jet> {
        let a = self.value().re;
        if a.abs() >= 1.0 {
            return Err(LabError::Domain(format!("asin at {a}")));
        }
        let w = 1.0 - a * a;
        let d = [
            a.asin(),
            w.powf(-0.5),
            a * w.powf(-1.5),
            (1.0 + 2.0 * a * a) * w.powf(-2.5),
            3.0 * a * (3.0 + 2.0 * a * a) * w.powf(-3.5),
        ];
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
        let t: Vec<C64> = (0..=self.order)
            .map(|m| C64::new(d[m] / fact[m], 0.0))
            .collect();
        Ok(self.compose(&t))
    }
}

fn unit(nvars: usize, v: usize) -> Vec<u8> {
    let mut m = vec![0u8; nvars];
    m[v] = 1;
    m
}

/// Coordinate jets `z^k = x^k + i y^k` about a point given as complex coordinates.
pub fn coordinate_jets(coords: &[C64], order: usize) -> Vec<Jet> {
    let n = coords.len();
    let space = JetSpace::get(2 * n);
    (0..n)
        .map(|k| {
            let x = Jet::variable(&space, order, 2 * k, coords[k].re);
            let y = Jet::variable(&space, order, 2 * k + 1, coords[k].im);
            x.combine(&y, C64::new(1.0, 0.0), C64::new(0.0, 1.0))
        })
        .collect()
}

/// Inverse of an `n x n` matrix of jets (row-major), Gauss-Jordan with partial
/// pivoting on the constant terms.
pub fn mat_inverse(a: &[Jet], n: usize) -> Result<Vec<Jet>> {
    assert_eq!(a.len(), n * n);
    let scale = a
        .iter()
        .map(|j| j.value().norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut m: Vec<Jet> = a.to_vec();
    let one = a[0].constant_like(C64::new(1.0, 0.0));
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                one.clone()
            } else {
                one.zero_like()
            }
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                m[i * n + col]
                    .value()
                    .norm()
                    .total_cmp(&m[j * n + col].value().norm())
            })
            .expect("nonempty range");
        if m[piv * n + col].value().norm() <= 1e-14 * scale {
            return Err(LabError::SingularMetric(format!(
                "zero pivot in column {col}"
            )));
        }
        if piv != col {
            for k in 0..n {
                m.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let r = m[col * n + col].recip();
        for k in 0..n {
            m[col * n + k] = &m[col * n + k] * &r;
            inv[col * n + k] = &inv[col * n + k] * &r;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[i * n + col].clone();
            if f.max_abs() == 0.0 {
                continue;
            }
            for k in 0..n {
                m[i * n + k] = &m[i * n + k] - &(&f * &m[col * n + k]);
                inv[i * n + k] = &inv[i * n + k] - &(&f * &inv[col * n + k]);
            }
        }
    }
    Ok(inv)
}

/// Determinant of an `n x n` matrix of jets by cofactor expansion for `n <= 3`
/// and elimination otherwise.
pub fn mat_det(a: &[Jet], n: usize) -> Jet {
    assert_eq!(a.len(), n * n);
    match n {
        1 => a[0].clone(),
        2 => &(&a[0] * &a[3]) - &(&a[1] * &a[2]),
        _ => {
            let mut acc = a[0].zero_like();
            for c in 0..n {
                let minor: Vec<Jet> = (1..n)
                    .flat_map(|i| (0..n).filter(move |&k| k != c).map(move |k| (i, k)))
                    .map(|(i, k)| a[i * n + k].clone())
                    .collect();
                let term = &a[c] * &mat_det(&minor, n - 1);
                acc = if c % 2 == 0 {
                    &acc + &term
                } else {
                    &acc - &term
                };
            }
            acc
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl std::ops::$tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, o)
            }
        }
        impl std::ops::$tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                std::ops::$tr::$m(&self, &o)
            }
        }
        impl std::ops::$tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                std::ops::$tr::$m(&self, o)
            }
        }
        impl std::ops::$tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                std::ops::$tr::$m(self, &o)
            }
        }
    };
}

binop!(Add, add, |a, b| a.combine(
    b,
    C64::new(1.0, 0.0),
    C64::new(1.0, 0.0)
));
binop!(Sub, sub, |a, b| a.combine(
    b,
    C64::new(1.0, 0.0),
    C64::new(-1.0, 0.0)
));
binop!(Mul, mul, |a, b| a.mul_jet(b));
binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl std::ops::Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_re(-1.0)
    }
}

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_re(-1.0)
    }
}

impl std::ops::Add<C64> for &Jet {
    type Output = Jet;
    fn add(self, s: C64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }
}

impl std::ops::Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, s: f64) -> Jet {
        self + C64::new(s, 0.0)
    }
}

impl std::ops::Mul<C64> for &Jet {
    type Output = Jet;
    fn mul(self, s: C64) -> Jet {
        self.scale(s)
    }
}

impl std::ops::Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale_re(s)
    }
}

impl std::ops::AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, o: &Jet) {
        *self = &*self + o;
    }
}

impl std::ops::SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, o: &Jet) {
        *self = &*self - o;
    }
}
