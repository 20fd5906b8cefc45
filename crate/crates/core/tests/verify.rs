use hermlab_core::charts::ScalarField;
use hermlab_core::charts::{self, GeometryEntry};
use hermlab_core::hodge::Quadrature;
use hermlab_core::verify::{
    check_arcsin_gradient, check_bochner, check_hessian_trace, check_integral_identity,
    check_laplacian_trace, check_liyau_identities, check_q_and_rigidity, eigenpair, liyau_bound,
    run_suite, sample_points, zhongyang_psi, zhongyang_series, CheckReport, CheckStatus, Suite,
    SuiteInputs, Tolerances, VerifyConfig,
};
use std::f64::consts::{E, FRAC_PI_2, PI};

fn suite(e: &GeometryEntry, s: Suite) -> Vec<CheckReport> {
    let cfg = VerifyConfig {
        points: 60,
        ..VerifyConfig::default()
    };
    run_suite(
        SuiteInputs {
            entry: e,
            config: &cfg,
            spectral: None,
            extrema: None,
        },
        s,
    )
    .unwrap()
}

fn find<'a>(rs: &'a [CheckReport], name: &str) -> &'a CheckReport {
    rs.iter()
        .find(|r| r.name == name)
        .unwrap_or_else(|| panic!("no report {name}"))
}

#[test]
fn every_check_passes_on_balanced_catalogue() {
    for e in [
        charts::fubini_study(1).unwrap(),
        charts::flat_torus(1).unwrap(),
        charts::flat_torus(2).unwrap(),
        charts::iwasawa(),
    ] {
        for r in suite(&e, Suite::All) {
            assert!(
                r.passed,
                "{} {}: {} (tol {})",
                e.name, r.name, r.value, r.tolerance
            );
        }
    }
}

#[test]
fn identity_residuals_are_analytic_precision() {
    let names = [
        "laplacian-trace",
        "hessian-trace",
        "bochner",
        "log-gradient-trace",
        "log-gradient-bochner",
        "integral-identity",
        "holomorphic-ricci-traces",
    ];
    for e in [
        charts::fubini_study(1).unwrap(),
        charts::flat_torus(1).unwrap(),
    ] {
        let rs = suite(&e, Suite::Identities);
        for nm in names {
            let r = find(&rs, nm);
            assert_eq!(r.status, CheckStatus::Pass, "{} {nm}", e.name);
            assert!(r.value <= 1e-6, "{} {nm} {}", e.name, r.value);
            let refine = find(&rs, &format!("refinement:{nm}"));
            assert!(
                refine.passed,
                "{} refinement of {nm}: {}",
                e.name, refine.value
            );
        }
    }
}

#[test]
fn fubini_study_bound_panel() {
    let fs = charts::fubini_study(1).unwrap();
    let rs = suite(&fs, Suite::Bounds);
    let lich = find(&rs, "lichnerowicz");
    assert!(lich.value.abs() <= 1e-6);
    assert!((lich.details["d_sqrt_k"] - PI).abs() <= 1e-12);
    assert!((find(&rs, "hsc-bound").value - 2.0).abs() <= 1e-6);
    assert!((find(&rs, "zhong-yang").value - 2.0).abs() <= 1e-6);
    assert_eq!(find(&rs, "li-yau").status, CheckStatus::NotApplicable);
}

#[test]
fn torus_zhong_yang_margin_is_one_half() {
    let rs = suite(&charts::flat_torus(1).unwrap(), Suite::Bounds);
    assert!((find(&rs, "zhong-yang-nonneg").value - 0.5).abs() <= 1e-10);
    assert_eq!(find(&rs, "lichnerowicz").status, CheckStatus::NotApplicable);
}

#[test]
fn nonbalanced_control_is_flagged() {
    let rs = suite(&charts::nonbalanced_example(), Suite::All);
    let b = find(&rs, "balanced");
    // negative control: the margin is residual - 0.1
    assert_eq!(b.status, CheckStatus::Pass);
    assert!(b.details["balanced_residual"] >= 0.1);
    assert!(rs.iter().any(|r| r.status == CheckStatus::NotApplicable));
    assert_eq!(find(&rs, "sb-curvature-routes").status, CheckStatus::Pass);
}

#[test]
fn gradient_quantities_on_fubini_study() {
    let fs = charts::fubini_study(1).unwrap();
    let u = fs.eigenfunction.clone().unwrap();
    let pts = sample_points(&fs, 100, 1);
    let tol = Tolerances::uniform(1e-8);
    let r = check_q_and_rigidity(&fs, &u, 4.0, 2.0, fs.diameter, &pts, &tol).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.details["q_spread"] <= 1e-8);
    assert!(r.details["q_minus_half_k"] <= 1e-8);
    assert!(r.details["gradient_ratio"] <= 1e-8);
}

#[test]
fn arcsin_gradient_margins() {
    let tol = Tolerances::uniform(1e-10);
    let fs = charts::fubini_study(1).unwrap();
    let pts = sample_points(&fs, 100, 2);
    let rs = check_arcsin_gradient(
        &fs,
        fs.eigenfunction.as_ref().unwrap(),
        4.0,
        (-1.0, 1.0),
        2.0,
        &pts,
        &tol,
    )
    .unwrap();
    let bound = find(&rs, "arcsin-gradient-bound");
    assert!(bound.value >= 0.0);
    assert!((bound.value - 1.0).abs() <= 1e-8, "{}", bound.value);
    assert!(find(&rs, "arcsin-trace").value <= 1e-7);
    let t = charts::flat_torus(1).unwrap();
    let pts = sample_points(&t, 100, 2);
    let rs = check_arcsin_gradient(
        &t,
        t.eigenfunction.as_ref().unwrap(),
        1.0,
        (-1.0, 1.0),
        0.0,
        &pts,
        &tol,
    )
    .unwrap();
    let bound = find(&rs, "arcsin-gradient-bound");
    assert!(bound.value >= -1e-10, "{}", bound.value);
    assert!(bound.value.abs() <= 1e-10);
}

#[test]
fn pointwise_identities_with_constant_function() {
    let tol = Tolerances::uniform(1e-12);
    let c = ScalarField::constant(1.0);
    for e in [
        charts::fubini_study(1).unwrap(),
        charts::flat_torus(1).unwrap(),
    ] {
        let pts = sample_points(&e, 20, 0);
        assert_eq!(
            check_laplacian_trace(&e, &c, &pts, &tol).unwrap().value,
            0.0
        );
        assert_eq!(
            check_hessian_trace(&e, &c, None, &pts, &tol).unwrap().value,
            0.0
        );
        assert_eq!(check_bochner(&e, &c, 4.0, &pts, &tol).unwrap().value, 0.0);
    }
}

#[test]
fn liyau_identities_at_shift_two() {
    let fs = charts::fubini_study(1).unwrap();
    let rs = check_liyau_identities(
        &fs,
        fs.eigenfunction.as_ref().unwrap(),
        4.0,
        2.0,
        &sample_points(&fs, 50, 0),
        &Tolerances::uniform(1e-6),
    )
    .unwrap();
    assert!(rs.iter().all(|r| r.passed && r.value <= 1e-7), "{rs:?}");
    assert!(check_liyau_identities(
        &fs,
        fs.eigenfunction.as_ref().unwrap(),
        4.0,
        1.0,
        &[],
        &Tolerances::default()
    )
    .is_err());
}

#[test]
fn iwasawa_trace_identity_with_non_eigenfunction() {
    let w = charts::iwasawa();
    let u = ScalarField::from_expression("Re z1", |z| z[0].re());
    let r = check_hessian_trace(
        &w,
        &u,
        None,
        &sample_points(&w, 40, 0),
        &Tolerances::default(),
    )
    .unwrap();
    assert!(r.passed && r.value <= 1e-6, "{r:?}");
}

#[test]
fn integral_identity_on_torus_and_sphere() {
    let t = charts::flat_torus(1).unwrap();
    let q = Quadrature::for_entry(&t, 16).unwrap();
    let r = check_integral_identity(
        &q,
        &t,
        t.eigenfunction.as_ref().unwrap(),
        1.0,
        &Tolerances::default(),
    )
    .unwrap();
    assert!(r.value <= 1e-8, "{}", r.value);
    let fs = charts::fubini_study(1).unwrap();
    let pair = eigenpair(&fs).unwrap();
    let coarse = check_integral_identity(
        &Quadrature::for_entry(&fs, 6).unwrap(),
        &fs,
        &pair.u,
        4.0,
        &Tolerances::default(),
    )
    .unwrap()
    .value;
    let fine = check_integral_identity(
        &Quadrature::for_entry(&fs, 12).unwrap(),
        &fs,
        &pair.u,
        4.0,
        &Tolerances::default(),
    )
    .unwrap()
    .value;
    assert!(fine <= 1e-5 && fine <= coarse / 2.0, "{coarse} -> {fine}");
}

#[test]
fn zhong_yang_function_values() {
    assert_eq!(zhongyang_psi(0.0).unwrap(), 0.0);
    assert!((zhongyang_psi(FRAC_PI_2).unwrap() - 1.0).abs() <= 1e-12);
    assert!((zhongyang_psi(-FRAC_PI_2).unwrap() + 1.0).abs() <= 1e-12);
    for terms in [0, 1, 5, 30] {
        assert!((zhongyang_series(0.0, terms).unwrap() - PI).abs() <= 1e-14);
    }
    assert!(zhongyang_series(1.0, 3).is_err());
    assert!(zhongyang_psi(2.0).is_err());
}

#[test]
fn liyau_evaluator() {
    let b = liyau_bound(3, 0.0, 1.0).unwrap();
    assert_eq!(b.closed_form, Some(2.0 / (7.0 * E * E)));
    assert!((b.bound - 0.038667).abs() < 1e-6);
    assert!((b.bound - b.closed_form.unwrap()).abs() <= 4.0 * f64::EPSILON * b.bound);
    assert!(liyau_bound(3, 1.0, 1.0).unwrap().bound < b.bound);
    assert!(liyau_bound(2, 0.0, 1.0).is_err());
    for n in 3..8 {
        for d in [0.5, 1.0, 3.0] {
            let b = liyau_bound(n, 0.0, d).unwrap();
            let want = 2.0 / ((3 * n - 2) as f64 * E * E * d * d);
            assert!((b.bound - want).abs() <= 4.0 * f64::EPSILON * want);
        }
    }
}
