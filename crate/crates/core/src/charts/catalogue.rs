//! Built-in geometries.

use super::{ChartPoint, DomainBox, MetricField, ScalarField};
use crate::jet::Jet;
use crate::{LabError, Result, C64};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub enum GeometryKind {
    FubiniStudy {
        n: usize,
    },
    /// `h = (scale/2) I` on the cubic lattice with the given period.
    FlatTorus {
        n: usize,
        period: f64,
        scale: f64,
    },
    Iwasawa,
    NonBalanced,
    Custom,
}

#[derive(Clone, Debug)]
pub struct GeometryEntry {
    pub name: String,
    pub kind: GeometryKind,
    pub metric: MetricField,
    pub is_balanced_expected: bool,
    pub is_kahler_expected: bool,
    pub diameter: Option<f64>,
    pub exact_lambda1: Option<f64>,
    pub eigenfunction: Option<ScalarField>,
    /// Where pointwise checks draw their samples.
    pub sample_box: DomainBox,
}

impl GeometryEntry {
    pub fn n(&self) -> usize {
        self.metric.n
    }

    /// Entry for a user metric: no spectral data, no structural expectations.
    pub fn custom(name: &str, metric: MetricField, sample_box: DomainBox) -> Self {
        GeometryEntry {
            name: name.into(),
            kind: GeometryKind::Custom,
            metric,
            is_balanced_expected: false,
            is_kahler_expected: false,
            diameter: None,
            exact_lambda1: None,
            eigenfunction: None,
            sample_box,
        }
    }

    /// The same geometry with finite-difference derivatives only.
    pub fn finite_difference_only(&self, rel_step: f64) -> Self {
        let mut e = self.clone();
        e.metric = self.metric.finite_difference_only().with_fd_step(rel_step);
        e.eigenfunction = self
            .eigenfunction
            .as_ref()
            .map(|u| u.finite_difference_only().with_fd_step(rel_step));
        e
    }

    pub fn origin(&self) -> ChartPoint {
        ChartPoint::origin(self.n())
    }
}

fn zero_like(z: &[Jet]) -> Jet {
    z[0].zero_like()
}

fn one_like(z: &[Jet]) -> Jet {
    z[0].constant_like(C64::new(1.0, 0.0))
}

fn modulus_sq(z: &[Jet]) -> Jet {
    let mut s = zero_like(z);
    for zk in z {
        s += &(zk * &zk.conj());
    }
    s
}

/// Fubini-Study metric `h_{i jbar} = delta_ij/(1+|z|^2) - zbar^i z^j/(1+|z|^2)^2`.
pub fn fubini_study(n: usize) -> Result<GeometryEntry> {
    if n == 0 {
        return Err(LabError::InvalidArgument("n must be at least 1".into()));
    }
    let metric = MetricField::from_expression(
        n,
        &format!("fubini-study:{n}"),
        DomainBox::cube(2 * n, -1e6, 1e6),
        move |z| {
            let s = &modulus_sq(z) + 1.0;
            let inv = s.recip();
            let inv2 = &inv * &inv;
            let mut h = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut e = -(&(&z[i].conj() * &z[j]) * &inv2);
                    if i == j {
                        e += &inv;
                    }
                    h.push(e);
                }
            }
            h
        },
    );
    let (diameter, lambda1, eigenfunction) = if n == 1 {
        let u = ScalarField::from_expression("(1-|z|^2)/(1+|z|^2)", |z| {
            let r2 = modulus_sq(z);
            let one = one_like(z);
            &(&one - &r2) / &(&one + &r2)
        });
        (Some(PI / 2f64.sqrt()), Some(4.0), Some(u))
    } else {
        // |Z_0|^2 / |Z|^2 minus its mean
        let mean = 1.0 / (n + 1) as f64;
        let u = ScalarField::from_expression(&format!("1/(1+|z|^2) - {mean}"), move |z| {
            let r2 = modulus_sq(z);
            &(&r2 + 1.0).recip() + (-mean)
        });
        (Some(PI / 2f64.sqrt()), Some(2.0 * (n + 1) as f64), Some(u))
    };
    Ok(GeometryEntry {
        name: format!("fubini-study:{n}"),
        kind: GeometryKind::FubiniStudy { n },
        metric,
        is_balanced_expected: true,
        is_kahler_expected: true,
        diameter,
        exact_lambda1: lambda1,
        eigenfunction,
        sample_box: DomainBox::cube(2 * n, -1.5, 1.5),
    })
}

/// Flat torus `C^n / (2 pi Z)^{2n}` with `h = I/2`.
pub fn flat_torus(n: usize) -> Result<GeometryEntry> {
    flat_torus_scaled(n, 2.0 * PI, 1.0)
}

/// Cubic torus with the given period and metric `h = (scale/2) I`.
pub fn flat_torus_scaled(n: usize, period: f64, scale: f64) -> Result<GeometryEntry> {
    if n == 0 || !(period > 0.0) || !(scale > 0.0) {
        return Err(LabError::InvalidArgument(
            "flat torus needs n >= 1 and positive period and scale".into(),
        ));
    }
    let name = if period == 2.0 * PI && scale == 1.0 {
        format!("flat-torus:{n}")
    } else {
        format!("flat-torus:{n}(period={period},scale={scale})")
    };
    let metric =
        MetricField::from_expression(n, &name, DomainBox::cube(2 * n, -1e3, 1e3), move |z| {
            let mut h = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    h.push(
                        z[0].constant_like(C64::new(if i == j { 0.5 * scale } else { 0.0 }, 0.0)),
                    );
                }
            }
            h
        });
    let k = 2.0 * PI / period;
    let u = ScalarField::from_expression(&format!("cos({k} x^1)"), move |z| (&z[0].re() * k).cos());
    Ok(GeometryEntry {
        name,
        kind: GeometryKind::FlatTorus { n, period, scale },
        metric,
        is_balanced_expected: true,
        is_kahler_expected: true,
        diameter: Some(scale.sqrt() * 0.5 * period * ((2 * n) as f64).sqrt()),
        exact_lambda1: Some(k * k / scale),
        eigenfunction: Some(u),
        sample_box: DomainBox::cube(2 * n, 0.0, period),
    })
}

/// Iwasawa threefold with `omega = i(dz1 dz1bar + dz2 dz2bar + phi phibar)`, `phi = dz3 - z1 dz2`.
pub fn iwasawa() -> GeometryEntry {
    let metric = MetricField::from_expression(3, "iwasawa", DomainBox::cube(6, -1e3, 1e3), |z| {
        let one = one_like(z);
        let zero = zero_like(z);
        let z1 = &z[0];
        vec![
            one.clone(),
            zero.clone(),
            zero.clone(),
            zero.clone(),
            &one + &(z1 * &z1.conj()),
            -z1,
            zero,
            -&z1.conj(),
            one,
        ]
    });
    GeometryEntry {
        name: "iwasawa".into(),
        kind: GeometryKind::Iwasawa,
        metric,
        is_balanced_expected: true,
        is_kahler_expected: false,
        diameter: None,
        exact_lambda1: None,
        eigenfunction: None,
        sample_box: DomainBox::cube(6, -1.0, 1.0),
    }
}

/// `h = (1/2) exp(|z^1|^2) I` on `C^2`: not balanced.
pub fn nonbalanced_example() -> GeometryEntry {
    let metric =
        MetricField::from_expression(2, "nonbalanced", DomainBox::cube(4, -1e3, 1e3), |z| {
            let f = &(&z[0] * &z[0].conj()).exp() * 0.5;
            let zero = zero_like(z);
            vec![f.clone(), zero.clone(), zero, f]
        });
    GeometryEntry {
        name: "nonbalanced".into(),
        kind: GeometryKind::NonBalanced,
        metric,
        is_balanced_expected: false,
        is_kahler_expected: false,
        diameter: None,
        exact_lambda1: None,
        eigenfunction: None,
        sample_box: DomainBox::cube(4, -1.5, 1.5),
    }
}

pub fn catalogue_names() -> Vec<&'static str> {
    vec![
        "fubini-study:<n>",
        "flat-torus:<n>",
        "iwasawa",
        "nonbalanced",
    ]
}

/// Parses a catalogue name such as `fubini-study:2`.
pub fn by_name(name: &str) -> Result<GeometryEntry> {
    let parse_n = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&n| (1..=4).contains(&n))
            .ok_or_else(|| LabError::UnknownGeometry(format!("{name}: dimension must be 1..4")))
    };
    match name.split_once(':') {
        Some(("fubini-study", n)) => fubini_study(parse_n(n)?),
        Some(("flat-torus", n)) => flat_torus(parse_n(n)?),
        None if name == "iwasawa" => Ok(iwasawa()),
        None if name == "nonbalanced" => Ok(nonbalanced_example()),
        _ => Err(LabError::UnknownGeometry(name.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::HermitianMatrix;

    fn close_matrix(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> bool {
        a.entries()
            .iter()
            .zip(b.entries())
            .all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn fubini_study_values() {
        let fs = fubini_study(1).unwrap();
        let h0 = fs.metric.eval(&ChartPoint::origin(1)).unwrap();
        assert!(close_matrix(&h0, &HermitianMatrix::identity(1), 1e-15));
        let h1 = fs
            .metric
            .eval(&ChartPoint::new(vec![C64::new(1.0, 0.0)]))
            .unwrap();
        assert!((h1.get(0, 0) - C64::new(0.25, 0.0)).norm() < 1e-15);
        let fs2 = fubini_study(2).unwrap();
        let h = fs2.metric.eval(&ChartPoint::origin(2)).unwrap();
        assert!(close_matrix(&h, &HermitianMatrix::identity(2), 1e-15));
        assert_eq!(fs.exact_lambda1, Some(4.0));
        assert!((fs.diameter.unwrap() - PI / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn torus_values() {
        let t = flat_torus(1).unwrap();
        let h = t.metric.eval(&ChartPoint::origin(1)).unwrap();
        assert!((h.get(0, 0) - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((t.diameter.unwrap() - PI * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.exact_lambda1, Some(1.0));
        let t4 = flat_torus_scaled(1, 4.0 * PI, 1.0).unwrap();
        assert!((t4.exact_lambda1.unwrap() - 0.25).abs() < 1e-15);
        let t2 = flat_torus(2).unwrap();
        assert!((t2.diameter.unwrap() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn iwasawa_and_control_at_origin() {
        let w = iwasawa();
        let h = w.metric.eval(&ChartPoint::origin(3)).unwrap();
        assert!(close_matrix(&h, &HermitianMatrix::identity(3), 0.0));
        let nb = nonbalanced_example();
        let h = nb.metric.eval(&ChartPoint::origin(2)).unwrap();
        assert!(close_matrix(&h, &HermitianMatrix::scalar(2, 0.5), 1e-15));
        let p = ChartPoint::new(vec![
            C64::new(0.3, -0.7),
            C64::new(0.2, 0.1),
            C64::new(-0.5, 0.9),
        ]);
        let h = w.metric.eval(&p).unwrap();
        assert!((h.get(1, 2) - C64::new(-0.3, 0.7)).norm() < 1e-15);
        assert!((h.get(2, 1) - C64::new(-0.3, -0.7)).norm() < 1e-15);
    }

    #[test]
    fn names() {
        assert_eq!(by_name("fubini-study:2").unwrap().n(), 2);
        assert_eq!(by_name("flat-torus:3").unwrap().n(), 3);
        assert_eq!(by_name("iwasawa").unwrap().n(), 3);
        assert!(matches!(
            by_name("klein-bottle"),
            Err(LabError::UnknownGeometry(_))
        ));
        assert!(by_name("fubini-study:0").is_err());
    }
}
