use hermlab_core::charts::Regime;
use hermlab_core::charts::{self, ChartPoint};
use hermlab_core::curvature::{chern_curvature, hsc_sb};
use hermlab_core::tensor::{
    contract, hermitian_inverse, ComplexTensor, HermitianMatrix, IndexKind,
};
use hermlab_core::verify::{zhongyang_psi, zhongyang_series, CheckKind, CheckReport};
use hermlab_core::C64;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn complex() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(), len)
}

/// `B B^* + I`, positive definite.
fn hermitian(n: usize) -> impl Strategy<Value = HermitianMatrix> {
    complex_vec(n * n).prop_map(move |b| {
        let mut h = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s: C64 = (0..n).map(|k| b[i * n + k] * b[j * n + k].conj()).sum();
                if i == j {
                    s = C64::new(s.re + 1.0, 0.0);
                }
                h[i * n + j] = s;
            }
        }
        HermitianMatrix::new(n, h).unwrap()
    })
}

fn vector(data: Vec<C64>) -> ComplexTensor {
    ComplexTensor::new(vec![data.len()], vec![IndexKind::HolUpper], data).unwrap()
}

fn covector(data: Vec<C64>) -> ComplexTensor {
    ComplexTensor::new(vec![data.len()], vec![IndexKind::HolLower], data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contraction_is_bilinear(x in complex_vec(3), y in complex_vec(3), w in complex_vec(3), a in complex(), b in complex()) {
        let lhs_vec: Vec<C64> = x.iter().zip(&y).map(|(p, q)| *p * a + *q * b).collect();
        let lhs = contract(&vector(lhs_vec), &covector(w.clone()), &[(0, 0)]).unwrap().data()[0];
        let cx = contract(&vector(x), &covector(w.clone()), &[(0, 0)]).unwrap().data()[0];
        let cy = contract(&vector(y), &covector(w), &[(0, 0)]).unwrap().data()[0];
        prop_assert!((lhs - (cx * a + cy * b)).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn contraction_rejects_unpaired_kinds(x in complex_vec(2), y in complex_vec(2)) {
        prop_assert!(contract(&covector(x), &covector(y), &[(0, 0)]).is_err());
    }

    #[test]
    fn inverse_is_an_involution(h in hermitian(3)) {
        let back = hermitian_inverse(&hermitian_inverse(&h).unwrap()).unwrap();
        let err = h.entries().iter().zip(back.entries()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * h.max_abs());
    }

    #[test]
    fn inverse_times_matrix_is_identity(h in hermitian(4)) {
        let r = hermitian_inverse(&h).unwrap();
        let p = h.matmul(&r);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((p[i * 4 + j] - C64::new(want, 0.0)).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn hsc_is_invariant_under_complex_scaling(
        z in complex_vec(3).prop_map(|v| v.into_iter().map(|c| c * 0.4).collect::<Vec<_>>()),
        w in complex_vec(3),
        c in complex(),
    ) {
        prop_assume!(w.iter().map(|x| x.norm_sqr()).sum::<f64>() > 1e-2 && c.norm() > 1e-2);
        let e = charts::iwasawa();
        let p = ChartPoint::new(z);
        let a = hsc_sb(&e.metric, &p, &w).unwrap();
        let cw: Vec<C64> = w.iter().map(|x| x * c).collect();
        let b = hsc_sb(&e.metric, &p, &cw).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn chern_curvature_has_hermitian_symmetry(z in complex_vec(2).prop_map(|v| v.into_iter().map(|c| c * 0.5).collect::<Vec<_>>())) {
        let e = charts::nonbalanced_example();
        let t = chern_curvature(&e.metric, &ChartPoint::new(z)).unwrap();
        for i in 0..2 { for j in 0..2 { for k in 0..2 { for l in 0..2 {
            let d = t.get(&[i, j, k, l]) - t.get(&[j, i, l, k]).conj();
            prop_assert!(d.norm() <= 1e-8);
        }}}}
    }

    #[test]
    fn psi_is_odd_and_bounded(theta in -FRAC_PI_2..FRAC_PI_2) {
        let a = zhongyang_psi(theta).unwrap();
        let b = zhongyang_psi(-theta).unwrap();
        prop_assert!((a + b).abs() <= 1e-12);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn series_increases_with_b(b in 0.0..0.85f64, db in 0.01..0.1f64) {
        let lo = zhongyang_series(b, 30).unwrap();
        let hi = zhongyang_series(b + db, 30).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn series_increases_with_terms(b in 0.5..0.95f64, terms in 1usize..20) {
        prop_assert!(zhongyang_series(b, terms + 1).unwrap() >= zhongyang_series(b, terms).unwrap());
    }

    #[test]
    fn report_verdict_matches_kind(value in -1.0..1.0f64, tol in 1e-8..0.5f64) {
        let id = CheckReport::new("x", "g", CheckKind::IdentityResidual, value, tol, Regime::Analytic);
        prop_assert_eq!(id.passed, value <= tol);
        let ineq = CheckReport::new("x", "g", CheckKind::InequalityMargin, value, tol, Regime::Analytic);
        prop_assert_eq!(ineq.passed, value >= -tol);
    }
}
