//! Seeded randomness and low-discrepancy point sets.

use crate::charts::{ChartPoint, DomainBox};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

pub trait SeedExt {
    fn new(seed: u64) -> Self;
}

impl SeedExt for ChaCha8Rng {
    fn new(seed: u64) -> Self {
        ChaCha8Rng::seed_from_u64(seed)
    }
}

/// Complex Gaussian vector normalized to Euclidean length one.
pub fn unit_direction(rng: &mut SeededRng, n: usize) -> Vec<C64> {
    let w: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w.into_iter().map(|z| z / norm).collect()
}

pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while k > 0 {
        x += (k % base) as f64 * f;
        k /= base;
        f *= inv;
    }
    inv = x;
    inv
}

/// Halton point `k` (1-based skipping the origin) in `[0,1)^dim`.
pub fn halton(k: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton dimension {dim} unsupported");
    (0..dim)
        .map(|d| radical_inverse(k + 1, PRIMES[d]))
        .collect()
}

/// `count` Halton points mapped into `domain`, shrunk by `margin` (fraction of
/// each side) so samples stay away from the box boundary. `offset` shifts the
/// sequence start, giving independent sets.
pub fn halton_points(
    domain: &DomainBox,
    count: usize,
    margin: f64,
    offset: u64,
) -> Vec<ChartPoint> {
    let dim = domain.dim();
    (0..count as u64)
        .map(|k| {
            let t: Vec<f64> = halton(k + offset, dim)
                .into_iter()
                .map(|s| margin + (1.0 - 2.0 * margin) * s)
                .collect();
            domain.from_unit(&t)
        })
        .collect()
}

/// `count` pseudo-random points in `domain`.
pub fn random_points(domain: &DomainBox, count: usize, seed: u64) -> Vec<ChartPoint> {
    let mut rng = SeededRng::new(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..domain.dim())
                .map(|v| uniform(&mut rng, domain.lo[v], domain.hi[v]))
                .collect();
            ChartPoint::from_real(&x)
        })
        .collect()
}

/// Pairwise summation in index order; the result does not depend on thread count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn pairwise_sum_c(v: &[C64]) -> C64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum_c(&v[..mid]) + pairwise_sum_c(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_terms() {
        let h = halton(0, 2);
        assert_eq!(h, vec![0.5, 1.0 / 3.0]);
        let h = halton(1, 2);
        assert_eq!(h, vec![0.25, 2.0 / 3.0]);
    }

    #[test]
    fn directions_are_unit_and_seeded() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        let u = unit_direction(&mut a, 3);
        assert_eq!(u, unit_direction(&mut b, 3));
        let n: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-14);
    }
}
