use hermlab_core::charts::{self, ChartPoint, GeometryEntry};
use hermlab_core::connections::LocalMetric;
use hermlab_core::curvature::{
    curvature_bundle, curvature_extrema, eval11, first_chern_ricci, holomorphic_ricci,
    holomorphic_ricci_identity, hsc_sb, sb_curvature_direct, sb_curvature_from_relation,
    theta_trace, Sampler,
};
use hermlab_core::sampling::{random_points, unit_direction, SeedExt, SeededRng};
use hermlab_core::tensor::ComplexTensor;
use hermlab_core::verify::{check_ricci_relations, sample_points, Tolerances};
use hermlab_core::C64;

fn diff(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
    a.sub(b).unwrap().max_abs()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn fubini_study_golden_values() {
    let fs = charts::fubini_study(1).unwrap();
    let mut rng = SeededRng::new(4);
    for p in random_points(&fs.sample_box, 25, 9) {
        let h = fs.metric.eval(&p).unwrap();
        let ric = first_chern_ricci(&fs.metric, &p).unwrap();
        assert!(
            (ric.get(&[0, 0]) - h.get(0, 0) * 2.0).norm() <= 1e-8,
            "{:?}",
            p.coords
        );
        for _ in 0..4 {
            let w = unit_direction(&mut rng, 1);
            assert!((hsc_sb(&fs.metric, &p, &w).unwrap() - 2.0).abs() <= 1e-8);
        }
    }
    let b = curvature_bundle(&fs.metric, &ChartPoint::origin(1)).unwrap();
    assert!((b.theta.get(&[0, 0, 0, 0]) - c(2.0)).norm() < 1e-12);
    assert!((b.r_sb.get(&[0, 0, 0, 0]) - c(2.0)).norm() < 1e-12);
    for r in &b.ric_sb {
        assert!((r.get(&[0, 0]) - c(2.0)).norm() < 1e-12);
    }
}

#[test]
fn fubini_study_surface_of_dimension_two() {
    let fs = charts::fubini_study(2).unwrap();
    let o = ChartPoint::origin(2);
    let ric = first_chern_ricci(&fs.metric, &o).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 3.0 } else { 0.0 };
            assert!((ric.get(&[i, j]) - c(want)).norm() < 1e-12);
        }
    }
    let w = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
    assert!((holomorphic_ricci(&fs.metric, &o, &w).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn flat_tori_have_no_curvature() {
    for n in 1..=3 {
        let t = charts::flat_torus(n).unwrap();
        for p in random_points(&t.sample_box, 5, n as u64) {
            let b = curvature_bundle(&t.metric, &p).unwrap();
            assert!(b.theta.max_abs() <= 1e-10);
            assert!(b.theta_ric1.max_abs() <= 1e-10);
            assert!(b.r_sb.max_abs() <= 1e-10);
            assert!(b.t_circ_tbar.max_abs() <= 1e-10);
            assert!(b.ric_sb.iter().all(|r| r.max_abs() <= 1e-10));
        }
    }
}

#[test]
fn iwasawa_chern_curvature_component_at_origin() {
    let w = charts::iwasawa();
    let o = ChartPoint::origin(3);
    let lm = LocalMetric::new(&w.metric, &o, 2).unwrap();
    // the second-derivative term alone is -1; the quadratic term cancels it
    assert!((-lm.hj(1, 1).dz(0).dzb(0).value() - c(-1.0)).norm() < 1e-14);
    let b = curvature_bundle(&w.metric, &o).unwrap();
    assert!(b.theta.get(&[0, 0, 1, 1]).norm() < 1e-12);
    for p in random_points(&w.sample_box, 10, 6) {
        assert!(curvature_bundle(&w.metric, &p).unwrap().theta.max_abs() < 1e-12);
    }
}

#[test]
fn curvature_routes_agree_on_iwasawa() {
    let w = charts::iwasawa();
    let mut rng = SeededRng::new(50);
    for p in random_points(&w.sample_box, 50, 2024) {
        let direct = sb_curvature_direct(&w.metric, &p).unwrap();
        let relation = sb_curvature_from_relation(&w.metric, &p).unwrap();
        assert!(diff(&direct, &relation) <= 1e-6, "{:?}", p.coords);
        let b = curvature_bundle(&w.metric, &p).unwrap();
        assert!(diff(&b.ric_sb[0], &b.theta_ric1) <= 1e-6);
        assert!(diff(&b.ric_sb[2], &b.ric_sb[3]) <= 1e-6);
        let dir = unit_direction(&mut rng, 3);
        assert!(holomorphic_ricci_identity(&w.metric, &p, &dir).unwrap() <= 1e-6);
    }
    let pts = sample_points(&w, 50, 0);
    for r in check_ricci_relations(&w, &pts, 8, 0, &Tolerances::default()).unwrap() {
        assert!(r.passed, "{} = {}", r.name, r.value);
    }
}

#[test]
fn chern_trace_matches_log_determinant() {
    let all: Vec<GeometryEntry> = vec![
        charts::fubini_study(1).unwrap(),
        charts::fubini_study(2).unwrap(),
        charts::flat_torus(2).unwrap(),
        charts::iwasawa(),
        charts::nonbalanced_example(),
    ];
    for e in all {
        for p in random_points(&e.sample_box, 10, 17) {
            let lm = LocalMetric::new(&e.metric, &p, 2).unwrap();
            let b = curvature_bundle(&e.metric, &p).unwrap();
            let tr = theta_trace(&lm, &b.theta);
            assert!(diff(&tr, &b.theta_ric1) <= 1e-6, "{}", e.name);
        }
    }
}

#[test]
fn kahler_sb_curvature_equals_chern() {
    for e in [
        charts::fubini_study(1).unwrap(),
        charts::fubini_study(2).unwrap(),
    ] {
        for p in random_points(&e.sample_box, 10, 5) {
            let b = curvature_bundle(&e.metric, &p).unwrap();
            assert!(diff(&b.r_sb, &b.theta) <= 1e-8);
            assert!(
                diff(
                    &sb_curvature_from_relation(&e.metric, &p).unwrap(),
                    &b.theta
                ) <= 1e-8
            );
        }
    }
}

#[test]
fn extrema_on_catalogue() {
    let cases = [
        (charts::fubini_study(1).unwrap(), 2.0, Some(2.0)),
        (charts::fubini_study(2).unwrap(), 3.0, None),
        (charts::flat_torus(1).unwrap(), 0.0, Some(0.0)),
    ];
    for (e, ric, hsc) in cases {
        let s = Sampler {
            points: sample_points(&e, 40, 0),
            directions: 8,
        };
        let x = curvature_extrema(&e.metric, &s, 0).unwrap();
        assert!(
            (x.min_hol_ricci - ric).abs() <= 1e-6,
            "{} {}",
            e.name,
            x.min_hol_ricci
        );
        if let Some(k) = hsc {
            assert!((x.min_hsc - k).abs() <= 1e-6, "{} {}", e.name, x.min_hsc);
        }
        let again = holomorphic_ricci(
            &e.metric,
            &x.argmin_hol_ricci.point,
            &x.argmin_hol_ricci.direction,
        )
        .unwrap();
        assert!((again - x.min_hol_ricci).abs() <= 1e-10);
        assert!(x.sampled_min_hol_ricci >= x.min_hol_ricci - 1e-10);
    }
}

#[test]
fn extrema_are_seed_deterministic() {
    let e = charts::iwasawa();
    let s = Sampler {
        points: sample_points(&e, 20, 3),
        directions: 8,
    };
    let a = curvature_extrema(&e.metric, &s, 3).unwrap();
    let b = curvature_extrema(&e.metric, &s, 3).unwrap();
    assert_eq!(a.min_hol_ricci.to_bits(), b.min_hol_ricci.to_bits());
    assert_eq!(a.min_hsc.to_bits(), b.min_hsc.to_bits());
}

#[test]
fn ricci_fourth_trace_gives_holomorphic_ricci() {
    let w = charts::iwasawa();
    let p = ChartPoint::new(vec![
        C64::new(0.3, -0.2),
        C64::new(0.1, 0.4),
        C64::new(-0.5, 0.2),
    ]);
    let dir = [C64::new(0.5, 0.1), C64::new(-0.3, 0.2), C64::new(0.0, 0.7)];
    let b = curvature_bundle(&w.metric, &p).unwrap();
    let v = holomorphic_ricci(&w.metric, &p, &dir).unwrap();
    assert!((eval11(&b.ric_sb[3], &dir).re - v).abs() < 1e-12);
}
