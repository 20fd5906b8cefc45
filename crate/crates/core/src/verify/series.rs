//! The auxiliary function `psi` of the Zhong-Yang argument and the series
//! `pi (1 + sum_k c_k C_k b^{2k})` bounding `sqrt(lambda1) D` from below.

use super::{CheckKind, CheckReport};
use crate::charts::Regime;
use crate::{LabError, Result};
use gauss_quad::legendre::GaussLegendre;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::num::NonZeroUsize;
use std::sync::{Mutex, OnceLock};

/// `x - sin x`, by its Taylor series for small `x` to avoid cancellation.
fn x_minus_sin(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return x - x.sin();
    }
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum = 0.0f64;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        sum += term;
        term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        k += 1.0;
    }
    sum
}

/// `psi(theta) = ((4/pi)(theta + cos theta sin theta) - 2 sin theta) / cos^2 theta`
/// on `(-pi/2, pi/2)`, extended by `psi(+-pi/2) = +-1`.
pub fn zhongyang_psi(theta: f64) -> Result<f64> {
    if !(theta.abs() <= FRAC_PI_2 + 1e-15) {
        return Err(LabError::Domain(format!(
            "psi is defined on [-pi/2, pi/2], got {theta}"
        )));
    }
    if theta < 0.0 {
        return Ok(-zhongyang_psi(-theta)?);
    }
    if theta <= FRAC_PI_4 {
        let c = theta.cos();
        return Ok((4.0 / PI * (theta + c * theta.sin()) - 2.0 * theta.sin()) / (c * c));
    }
    // with eps = pi/2 - theta the numerator is 4 sin^2(eps/2) - (2/pi)(2 eps - sin 2 eps)
    let eps = (FRAC_PI_2 - theta).max(0.0);
    if eps == 0.0 {
        return Ok(1.0);
    }
    let s = (0.5 * eps).sin();
    let num = 4.0 * s * s - 2.0 / PI * x_minus_sin(2.0 * eps);
    let d = eps.sin();
    Ok(num / (d * d))
}

const GL_NODES: usize = 20;
const MAX_DEPTH: usize = 18;

fn gl_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(GL_NODES).expect("nonzero")))
}

fn gl(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    gl_rule()
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// Adaptive bisection with a Gauss-Legendre panel rule.
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let l = gl(f, a, m);
    let r = gl(f, m, b);
    let diff = (l + r - whole).abs();
    // below this the panel sums disagree only by rounding
    let floor = 64.0 * f64::EPSILON * (l.abs() + r.abs());
    if depth >= MAX_DEPTH || diff <= tol || diff <= floor {
        return l + r;
    }
    adaptive(f, a, m, l, 0.5 * tol, depth + 1) + adaptive(f, m, b, r, 0.5 * tol, depth + 1)
}

pub(crate) fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let whole = gl(f, a, b);
    adaptive(f, a, b, whole, 1e-15 * whole.abs().max(1e-300), 0)
}

fn psi_unchecked(t: f64) -> f64 {
    zhongyang_psi(t.clamp(-FRAC_PI_2, FRAC_PI_2)).expect("clamped into the domain")
}

fn c_cache() -> &'static Mutex<Vec<f64>> {
    static CACHE: OnceLock<Mutex<Vec<f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(Vec::new()))
}

/// `C_k = (2/pi) int_0^{pi/2} psi^{2k}`, cached; `C_0 = 1`.
pub fn zhongyang_coefficient(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut cache = c_cache().lock().unwrap_or_else(|e| e.into_inner());
    while cache.len() < k {
        let j = (cache.len() + 1) as i32;
        let v = 2.0 / PI * integrate(&|t| psi_unchecked(t).powi(2 * j), 0.0, FRAC_PI_2);
        cache.push(v);
    }
    cache[k - 1]
}

/// Partial sum `pi (1 + sum_{k=1}^{terms} c_k C_k b^{2k})` for `0 <= b < 1`.
pub fn zhongyang_series(b: f64, terms: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&b) {
        return Err(LabError::InvalidArgument(format!(
            "b must lie in [0, 1), got {b}"
        )));
    }
    let mut sum = 1.0;
    let mut coef = 1.0;
    let mut bp = 1.0;
    for k in 1..=terms {
        let kf = k as f64;
        coef *= (4.0 * kf - 3.0) * (4.0 * kf - 1.0) / ((4.0 * kf - 2.0) * (4.0 * kf));
        bp *= b * b;
        if bp == 0.0 {
            break;
        }
        sum += coef * zhongyang_coefficient(k) * bp;
    }
    Ok(PI * sum)
}

/// `int_0^{pi/2} (1 + b psi)^{-1/2} + (1 - b psi)^{-1/2}`, the closed integral the series expands.
pub(crate) fn series_integral(b: f64) -> f64 {
    integrate(
        &|t| {
            let p = psi_unchecked(t);
            (1.0 + b * p).powf(-0.5) + (1.0 - b * p).powf(-0.5)
        },
        0.0,
        FRAC_PI_2,
    )
}

/// Values and properties of `psi` and the series.
pub fn zhongyang_series_reports() -> Result<Vec<CheckReport>> {
    let mut out = vec![
        CheckReport::series("psi-zero", zhongyang_psi(0.0)?, 0.0, 1e-12),
        CheckReport::series("psi-endpoint", zhongyang_psi(FRAC_PI_2)?, 1.0, 1e-12)
            .with("psi_near_endpoint", zhongyang_psi(FRAC_PI_2 - 1e-9)?)
            .with("psi_negative_endpoint", zhongyang_psi(-FRAC_PI_2)?),
        CheckReport::series("series-zero", zhongyang_series(0.0, 40)?, PI, 1e-14),
    ];
    let grid = 20_000;
    let mut worst = 0.0f64;
    let mut odd = 0.0f64;
    for i in 0..=grid {
        let t = -FRAC_PI_2 + PI * i as f64 / grid as f64;
        let p = zhongyang_psi(t)?;
        worst = worst.max(p.abs());
        odd = odd.max((p + zhongyang_psi(-t)?).abs());
    }
    out.push(
        CheckReport::new(
            "psi-bounded",
            "-",
            CheckKind::InequalityMargin,
            1.0 - worst,
            1e-12,
            Regime::Analytic,
        )
        .with("max_abs_psi", worst)
        .with("odd_symmetry_residual", odd)
        .samples(grid + 1),
    );
    let b = 0.9;
    let mut prev = zhongyang_series(b, 0)?;
    let mut min_step = f64::INFINITY;
    for terms in 1..=30 {
        let s = zhongyang_series(b, terms)?;
        min_step = min_step.min(s - prev);
        prev = s;
    }
    out.push(
        CheckReport::new(
            "series-monotone",
            "-",
            CheckKind::InequalityMargin,
            min_step,
            0.0,
            Regime::Analytic,
        )
        .with("b", b),
    );
    let b = 0.5;
    let closed = series_integral(b);
    out.push(
        CheckReport::series(
            "series-vs-integral",
            zhongyang_series(b, 30)?,
            closed,
            1e-10,
        )
        .with("b", b)
        .with("terms", 30.0),
    );
    Ok(out)
}
