//! One PASS/FAIL line per acceptance criterion; run with `--nocapture` to see them.

use hermlab_core::charts::{self, GeometryEntry};
use hermlab_core::curvature::{
    curvature_bundle, curvature_extrema, first_chern_ricci, hsc_sb, sb_curvature_direct,
    sb_curvature_from_relation, Sampler,
};
use hermlab_core::hodge::balanced_residual;
use hermlab_core::sampling::{random_points, unit_direction, SeedExt, SeededRng};
use hermlab_core::spectral::sphere_fs_spectrum;
use hermlab_core::verify::{
    check_arcsin_gradient, check_q_and_rigidity, liyau_bound, run_suite, sample_points,
    zhongyang_psi, zhongyang_series, CheckReport, Suite, SuiteInputs, Tolerances, VerifyConfig,
};
use std::f64::consts::{FRAC_PI_2, PI};
use std::process::Command;
use std::time::Instant;

struct Verdict {
    id: usize,
    title: &'static str,
    ok: bool,
    detail: String,
}

fn verdict(id: usize, title: &'static str, ok: bool, detail: String) -> Verdict {
    Verdict {
        id,
        title,
        ok,
        detail,
    }
}

fn suite(e: &GeometryEntry, s: Suite) -> Vec<CheckReport> {
    let cfg = VerifyConfig::default();
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

fn mesh_eigenvalue() -> Verdict {
    let fs = charts::fubini_study(1).unwrap();
    let t0 = Instant::now();
    let l5 = sphere_fs_spectrum(&fs, 5).unwrap().lambda1;
    let l6 = sphere_fs_spectrum(&fs, 6).unwrap().lambda1;
    let secs = t0.elapsed().as_secs_f64();
    let ok = (3.92..=4.08).contains(&l5) && (l6 - 4.0).abs() < (l5 - 4.0).abs() && secs < 60.0;
    verdict(
        1,
        "mesh eigenvalue of the projective line",
        ok,
        format!("level 5: {l5:.10}, level 6: {l6:.10}, {secs:.1} s"),
    )
}

fn lichnerowicz_equality(fs_bounds: &[CheckReport]) -> Verdict {
    let r = find(fs_bounds, "lichnerowicz");
    let dk = r.details["d_sqrt_k"];
    let ok = r.value.abs() <= 1e-6 && (dk - PI).abs() <= 1e-12;
    verdict(
        2,
        "Lichnerowicz equality case",
        ok,
        format!("margin {:.3e}, D sqrt(K) - pi {:.3e}", r.value, dk - PI),
    )
}

fn golden_curvature() -> Verdict {
    let fs = charts::fubini_study(1).unwrap();
    let mut rng = SeededRng::new(3);
    let mut ric_err: f64 = 0.0;
    let mut hsc_err: f64 = 0.0;
    for p in random_points(&fs.sample_box, 50, 3) {
        let h = fs.metric.eval(&p).unwrap().get(0, 0);
        ric_err =
            ric_err.max((first_chern_ricci(&fs.metric, &p).unwrap().get(&[0, 0]) - h * 2.0).norm());
        let w = unit_direction(&mut rng, 1);
        hsc_err = hsc_err.max((hsc_sb(&fs.metric, &p, &w).unwrap() - 2.0).abs());
    }
    let mut flat: f64 = 0.0;
    for n in 1..=2 {
        let t = charts::flat_torus(n).unwrap();
        for p in random_points(&t.sample_box, 20, 3) {
            let b = curvature_bundle(&t.metric, &p).unwrap();
            let all = [&b.theta, &b.theta_ric1, &b.r_sb, &b.t_circ_tbar]
                .into_iter()
                .chain(b.ric_sb.iter());
            flat = all.map(|x| x.max_abs()).fold(flat, f64::max);
        }
    }
    let ok = ric_err <= 1e-8 && hsc_err <= 1e-8 && flat <= 1e-10;
    verdict(
        3,
        "curvature golden values",
        ok,
        format!("first Chern Ricci {ric_err:.2e}, HSC {hsc_err:.2e}, tori {flat:.2e}"),
    )
}

fn route_equivalence() -> Verdict {
    let w = charts::iwasawa();
    let (mut routes, mut r1, mut r34): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for p in random_points(&w.sample_box, 50, 50) {
        let d = sb_curvature_direct(&w.metric, &p).unwrap();
        let rel = sb_curvature_from_relation(&w.metric, &p).unwrap();
        routes = routes.max(d.sub(&rel).unwrap().max_abs());
        let b = curvature_bundle(&w.metric, &p).unwrap();
        r1 = r1.max(b.ric_sb[0].sub(&b.theta_ric1).unwrap().max_abs());
        r34 = r34.max(b.ric_sb[2].sub(&b.ric_sb[3]).unwrap().max_abs());
    }
    let ok = routes <= 1e-6 && r1 <= 1e-6 && r34 <= 1e-6;
    verdict(
        4,
        "SB curvature routes on Iwasawa",
        ok,
        format!("routes {routes:.2e}, first trace {r1:.2e}, third vs fourth {r34:.2e}"),
    )
}

const IDENTITIES: [&str; 7] = [
    "laplacian-trace",
    "hessian-trace",
    "bochner",
    "log-gradient-trace",
    "log-gradient-bochner",
    "integral-identity",
    "holomorphic-ricci-traces",
];

fn identity_suite(fs: &[CheckReport], torus: &[CheckReport]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut failed = Vec::new();
    for (g, rs) in [("fs", fs), ("torus", torus)] {
        for nm in IDENTITIES {
            let r = find(rs, nm);
            let refine = find(rs, &format!("refinement:{nm}"));
            worst = worst.max(r.value);
            worst_ratio = worst_ratio.max(refine.value);
            if !(r.passed && r.value <= 1e-6 && refine.passed) {
                failed.push(format!("{g}:{nm}"));
            }
        }
    }
    verdict(
        5,
        "identity residual suite",
        failed.is_empty(),
        format!("max residual {worst:.2e}, max refinement ratio {worst_ratio:.3} {failed:?}"),
    )
}

fn gradient_quantities(fs: &GeometryEntry, k: f64) -> Verdict {
    let pts = sample_points(fs, 200, 0);
    let r = check_q_and_rigidity(
        fs,
        fs.eigenfunction.as_ref().unwrap(),
        4.0,
        k,
        fs.diameter,
        &pts,
        &Tolerances::uniform(1e-8),
    )
    .unwrap();
    let (spread, off, ratio) = (
        r.details["q_spread"],
        r.details["q_minus_half_k"],
        r.details["gradient_ratio"],
    );
    let ok = spread <= 1e-8 && off <= 1e-8 && ratio <= 1e-8;
    verdict(
        6,
        "gradient quantities on the projective line",
        ok,
        format!("Q spread {spread:.2e}, |Q - K/2| {off:.2e}, gradient ratio {ratio:.2e}"),
    )
}

fn zhong_yang_machinery(fs: &GeometryEntry, k_fs: f64) -> Verdict {
    let p0 = zhongyang_psi(0.0).unwrap();
    let p1 = zhongyang_psi(FRAC_PI_2).unwrap();
    let s0 = zhongyang_series(0.0, 30).unwrap();
    let tol = Tolerances::uniform(1e-10);
    let margin = |e: &GeometryEntry, lambda: f64, ric: f64| {
        let rs = check_arcsin_gradient(
            e,
            e.eigenfunction.as_ref().unwrap(),
            lambda,
            (-1.0, 1.0),
            ric,
            &sample_points(e, 200, 0),
            &tol,
        )
        .unwrap();
        find(&rs, "arcsin-gradient-bound").value
    };
    let m_fs = margin(fs, 4.0, k_fs);
    let m_t = margin(&charts::flat_torus(1).unwrap(), 1.0, 0.0);
    let ok = p0.abs() <= 1e-12
        && (p1 - 1.0).abs() <= 1e-12
        && (s0 - PI).abs() <= 1e-14
        && m_fs >= 0.0
        && m_t >= -1e-10;
    verdict(
        7,
        "Zhong-Yang machinery",
        ok,
        format!("psi(0) {p0:.1e}, psi(pi/2) - 1 {:.1e}, series(0) - pi {:.1e}, margins fs {m_fs:.6}, torus {m_t:.2e}", p1 - 1.0, s0 - PI),
    )
}

fn bound_panel(fs_bounds: &[CheckReport]) -> Verdict {
    let torus = suite(&charts::flat_torus(1).unwrap(), Suite::Bounds);
    let zy = find(&torus, "zhong-yang-nonneg").value;
    let hsc = find(fs_bounds, "hsc-bound");
    let mesh = hsc.details["margin_mesh"];
    let mut liyau: f64 = 0.0;
    for n in 3..=6 {
        for d in [0.5, 1.0, 2.0] {
            let b = liyau_bound(n, 0.0, d).unwrap();
            let c = b.closed_form.unwrap();
            liyau = liyau.max((b.bound - c).abs() / c);
        }
    }
    let ok = (zy - 0.5).abs() <= 1e-10
        && (mesh - 2.0).abs() <= 0.04
        && (hsc.value - 2.0).abs() <= 1e-6
        && liyau <= 4.0 * f64::EPSILON;
    verdict(
        8,
        "bound panel",
        ok,
        format!("torus Zhong-Yang {zy:.12}, HSC bound mesh {mesh:.8} exact {:.12}, Li-Yau relative gap {liyau:.1e}", hsc.value),
    )
}

fn balanced_detection() -> Verdict {
    let res = |e: &GeometryEntry| {
        balanced_residual(&e.metric, &sample_points(e, 200, 0))
            .unwrap()
            .max()
    };
    let good = [
        charts::fubini_study(1).unwrap(),
        charts::flat_torus(1).unwrap(),
        charts::iwasawa(),
    ]
    .iter()
    .map(res)
    .fold(0.0, f64::max);
    let bad = res(&charts::nonbalanced_example());
    verdict(
        9,
        "balanced detection",
        good <= 1e-5 && bad >= 0.1,
        format!("balanced catalogue {good:.2e}, control {bad:.3}"),
    )
}

fn determinism() -> Verdict {
    let run = |g: &str| {
        Command::new(env!("CARGO_BIN_EXE_hermlab"))
            .args(["check", "all", "--geometry", g, "--grid", "100"])
            .output()
            .unwrap()
            .stdout
    };
    let mut same = true;
    for g in ["fubini-study:1", "flat-torus:2", "nonbalanced"] {
        let a = run(g);
        same &= !a.is_empty() && a == run(g);
    }
    verdict(
        10,
        "deterministic check output",
        same,
        "fubini-study:1, flat-torus:2, nonbalanced".into(),
    )
}

#[test]
fn acceptance_criteria() {
    let fs = charts::fubini_study(1).unwrap();
    let fs_all = suite(&fs, Suite::All);
    let torus_all = suite(&charts::flat_torus(1).unwrap(), Suite::Identities);
    let k = curvature_extrema(
        &fs.metric,
        &Sampler {
            points: sample_points(&fs, 200, 0),
            directions: 8,
        },
        0,
    )
    .unwrap()
    .min_hol_ricci;
    let verdicts = vec![
        mesh_eigenvalue(),
        lichnerowicz_equality(&fs_all),
        golden_curvature(),
        route_equivalence(),
        identity_suite(&fs_all, &torus_all),
        gradient_quantities(&fs, k),
        zhong_yang_machinery(&fs, k),
        bound_panel(&fs_all),
        balanced_detection(),
        determinism(),
    ];
    for v in &verdicts {
        println!(
            "{} criterion {:>2} {}: {}",
            if v.ok { "PASS" } else { "FAIL" },
            v.id,
            v.title,
            v.detail
        );
    }
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.ok).map(|v| v.id).collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
