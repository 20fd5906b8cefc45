use hermlab_cli::metric_file::write_metric_file;
use hermlab_core::charts::{self, DomainBox};
use serde_json::Value;
use std::path::Path;
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn hermlab(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_hermlab"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json_of(r: &Run) -> Value {
    serde_json::from_str(&r.stdout)
        .unwrap_or_else(|e| panic!("bad json ({e}): {}\n{}", r.stdout, r.stderr))
}

fn check<'a>(doc: &'a Value, name: &str) -> &'a Value {
    doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn write_sampled(dir: &Path, file: &str, geometry: &str, half_width: f64, grid: usize) -> String {
    let e = charts::by_name(geometry).unwrap();
    let d = 2 * e.n();
    let domain = DomainBox::new(vec![-half_width; d], vec![half_width; d]).unwrap();
    let text = write_metric_file(&e, &domain, &vec![grid; d]).unwrap();
    let path = dir.join(file);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn report_fubini_study_origin() {
    let r = hermlab(&[
        "report",
        "--geometry",
        "fubini-study:1",
        "--points",
        "origin",
        "--grid",
        "40",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    assert_eq!(doc["schema_version"], 1);
    let p = &doc["curvature"]["points"][0];
    assert_eq!(p["ric_sb4"], serde_json::json!([[2.0]]));
    assert_eq!(p["metric"], serde_json::json!([[1.0]]));
    assert_eq!(p["chern_ricci"], serde_json::json!([[2.0]]));
    assert!(
        (doc["curvature"]["extrema"]["min_hol_ricci"]
            .as_f64()
            .unwrap()
            - 2.0)
            .abs()
            < 1e-8
    );
    assert_eq!(doc["geometry"]["balanced"], true);
    assert!(doc["geometry"]["warning"].is_null());
}

#[test]
fn report_torus_has_zero_curvature() {
    let r = hermlab(&[
        "report",
        "--geometry",
        "flat-torus:2",
        "--points",
        "4",
        "--grid",
        "20",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    let pts = doc["curvature"]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 4);
    for p in pts {
        for key in [
            "chern_curvature",
            "sb_curvature",
            "chern_ricci",
            "ric_sb1",
            "ric_sb2",
            "ric_sb3",
            "ric_sb4",
            "t_circ_tbar",
        ] {
            let flat = p[key].to_string();
            assert!(flat.chars().all(|c| "[]0.,-".contains(c)), "{key}: {flat}");
        }
    }
}

#[test]
fn report_explicit_points_and_domain_errors() {
    let r = hermlab(&[
        "report",
        "--geometry",
        "iwasawa",
        "--points",
        "0.1,0.2,0,0,0.3,0;0,0,0,0,0,0",
        "--grid",
        "10",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    assert_eq!(
        doc["curvature"]["points"][0]["coords"],
        serde_json::json!([0.1, 0.2, 0.0, 0.0, 0.3, 0.0])
    );
    assert_eq!(
        doc["curvature"]["points"][1]["chern_torsion"][2][0][1],
        -1.0
    );
    assert_eq!(
        hermlab(&[
            "report",
            "--geometry",
            "fubini-study:1",
            "--points",
            "1,2,3"
        ])
        .code,
        2
    );
    assert_eq!(
        hermlab(&[
            "report",
            "--geometry",
            "fubini-study:1",
            "--points",
            "2e6,0"
        ])
        .code,
        2
    );
}

#[test]
fn nonbalanced_geometry_carries_a_warning() {
    let r = hermlab(&[
        "check",
        "identities",
        "--geometry",
        "nonbalanced",
        "--grid",
        "30",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    assert_eq!(doc["geometry"]["balanced"], false);
    assert!(doc["geometry"]["warning"]
        .as_str()
        .unwrap()
        .contains("not balanced"));
    assert!(doc["geometry"]["balanced_residual"].as_f64().unwrap() >= 0.1);
    assert!(r.stderr.contains("warning"));
    assert_eq!(check(&doc, "laplacian-trace")["status"], "not-applicable");
    assert_eq!(check(&doc, "sb-curvature-routes")["status"], "pass");
}

#[test]
fn torus_identities_pass() {
    let r = hermlab(&[
        "check",
        "identities",
        "--geometry",
        "flat-torus:1",
        "--grid",
        "40",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    assert!(doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
    assert!(doc["spectrum"].is_null());
}

#[test]
fn fubini_study_bounds_flag_equality() {
    let r = hermlab(&[
        "check",
        "bounds",
        "--geometry",
        "fubini-study:1",
        "--grid",
        "40",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    let lich = check(&doc, "lichnerowicz");
    assert!(lich["value"].as_f64().unwrap().abs() <= 1e-6);
    assert!(lich["notes"]
        .as_array()
        .unwrap()
        .iter()
        .any(|n| n == "equality"));
    assert!((check(&doc, "hsc-bound")["value"].as_f64().unwrap() - 2.0).abs() <= 1e-6);
    assert!((doc["spectrum"]["lambda1"].as_f64().unwrap() - 4.0).abs() < 0.08);
}

#[test]
fn iwasawa_bounds_are_not_applicable() {
    let r = hermlab(&["check", "bounds", "--geometry", "iwasawa", "--grid", "20"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    for name in ["lichnerowicz", "zhong-yang", "hsc-bound"] {
        assert_eq!(check(&doc, name)["status"], "not-applicable");
    }
}

#[test]
fn impossible_tolerance_fails_with_exit_one() {
    let r = hermlab(&[
        "check",
        "identities",
        "--geometry",
        "fubini-study:1",
        "--grid",
        "20",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(r.code, 1, "{}", r.stderr);
    assert!(json_of(&r)["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["status"] == "fail"));
    assert!(r.stderr.contains("FAIL"));
}

#[test]
fn spectra() {
    let r = hermlab(&[
        "spectrum",
        "--geometry",
        "fubini-study:1",
        "--subdivisions",
        "5",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let s = &json_of(&r)["spectrum"];
    let l = s["lambda1"].as_f64().unwrap();
    assert!((3.92..=4.08).contains(&l), "{l}");
    assert_eq!(s["method"], "mesh-cotangent");
    assert_eq!(s["exact_lambda1"], 4.0);
    let r = hermlab(&["spectrum", "--geometry", "flat-torus:1"]);
    let s = &json_of(&r)["spectrum"];
    assert_eq!(s["lambda1"], 1.0);
    assert_eq!(s["method"], "fourier-exact");
    assert_eq!(hermlab(&["spectrum", "--geometry", "iwasawa"]).code, 4);
}

#[test]
fn spectrum_csv_and_mesh_export() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("sphere.csv");
    let r = hermlab(&[
        "spectrum",
        "--geometry",
        "fubini-study:1",
        "--subdivisions",
        "3",
        "--format",
        "csv",
        "--mesh-out",
        mesh.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(
        lines.next(),
        Some("lambda1,exact_lambda1,diameter,method,resolution,residual")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "4");
    assert_eq!(row[3], "mesh-cotangent");
    assert_eq!(row[4], "3");
    let verts = std::fs::read_to_string(&mesh).unwrap();
    assert!(verts.starts_with("index,x,y,z,u\n"));
    assert_eq!(verts.lines().count(), 1 + 642);
    let faces = std::fs::read_to_string(dir.path().join("sphere_faces.csv")).unwrap();
    assert!(faces.starts_with("a,b,c\n"));
    assert_eq!(faces.lines().count(), 1 + 1280);
}

#[test]
fn plot_export_columns() {
    let r = hermlab(&[
        "report",
        "--geometry",
        "fubini-study:1",
        "--points",
        "5",
        "--format",
        "csv",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("x1,y1,u,grad_sq,q,p,bochner_residual"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        assert!((row[4] - 1.0).abs() < 1e-12, "q = {}", row[4]);
        assert!(row[6] < 1e-10);
    }
}

#[test]
fn text_format_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let r = hermlab(&[
        "report",
        "--geometry",
        "flat-torus:1",
        "--grid",
        "10",
        "--format",
        "text",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("schema_version: 1"));
    assert!(text.contains("name: flat-torus:1"));
}

#[test]
fn list_geometries() {
    let r = hermlab(&["list-geometries"]);
    assert_eq!(r.code, 0);
    for name in [
        "fubini-study:<n>",
        "flat-torus:<n>",
        "iwasawa",
        "nonbalanced",
    ] {
        assert!(r.stdout.contains(name), "{}", r.stdout);
    }
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(hermlab(&["report", "--geometry", "klein-bottle"]).code, 2);
    assert_eq!(hermlab(&["report", "--geometry", "fubini-study:0"]).code, 2);
    assert_eq!(
        hermlab(&["check", "--geometry", "iwasawa", "--grid", "0"]).code,
        2
    );
    assert_eq!(
        hermlab(&["check", "--geometry", "iwasawa", "--tol", "-1"]).code,
        2
    );
    assert_eq!(hermlab(&["report"]).code, 2);
}

#[test]
fn check_all_is_deterministic() {
    let args = [
        "check",
        "all",
        "--geometry",
        "flat-torus:2",
        "--grid",
        "30",
        "--seed",
        "7",
    ];
    let a = hermlab(&args);
    let b = hermlab(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn torus_metric_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sampled(dir.path(), "torus.herm", "flat-torus:1", 3.0, 12);
    let r = hermlab(&[
        "report",
        "--metric-file",
        &path,
        "--points",
        "origin",
        "--grid",
        "20",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let doc = json_of(&r);
    assert_eq!(doc["config"]["source"], "metric-file");
    assert!(doc["geometry"]["name"]
        .as_str()
        .unwrap()
        .starts_with("metric-file:"));
    let p = &doc["curvature"]["points"][0];
    assert!((p["metric"][0][0].as_f64().unwrap() - 0.5).abs() < 1e-14);
    assert!(p["chern_curvature"][0][0][0][0].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(hermlab(&["spectrum", "--metric-file", &path]).code, 4);
}

fn sampled_fs_ricci_error(dir: &Path, grid: usize) -> f64 {
    let path = write_sampled(dir, &format!("fs{grid}.herm"), "fubini-study:1", 2.0, grid);
    let r = hermlab(&[
        "report",
        "--metric-file",
        &path,
        "--points",
        "origin",
        "--grid",
        "10",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    (json_of(&r)["curvature"]["points"][0]["chern_ricci"][0][0]
        .as_f64()
        .unwrap()
        - 2.0)
        .abs()
}

#[test]
fn sampled_fubini_study_converges() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = sampled_fs_ricci_error(dir.path(), 32);
    let fine = sampled_fs_ricci_error(dir.path(), 64);
    // cubic splines lose two orders in the second derivative
    assert!(fine <= 1e-2, "{fine}");
    assert!(coarse / fine >= 3.5, "{coarse} -> {fine}");
}

#[test]
fn malformed_metric_files() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    };
    let rows = |r: &str| vec![r; 16].join("\n");
    let bad_header = write(
        "a.herm",
        &format!(
            "herm-metric v9; n=1; domain=-1,1;-1,1; grid=4,4\n{}",
            rows("1 0")
        ),
    );
    assert_eq!(hermlab(&["report", "--metric-file", &bad_header]).code, 2);
    let wrong_n = write(
        "b.herm",
        &format!(
            "herm-metric v1; n=2; domain=-1,1;-1,1; grid=4,4\n{}",
            rows("1 0")
        ),
    );
    assert_eq!(hermlab(&["report", "--metric-file", &wrong_n]).code, 2);
    let short = write(
        "c.herm",
        &format!(
            "herm-metric v1; n=1; domain=-1,1;-1,1; grid=4,4\n{}",
            vec!["1 0"; 15].join("\n")
        ),
    );
    assert_eq!(hermlab(&["report", "--metric-file", &short]).code, 2);
    let singular = write(
        "d.herm",
        &format!(
            "herm-metric v1; n=1; domain=-1,1;-1,1; grid=4,4\n{}\n-1 0",
            vec!["1 0"; 15].join("\n")
        ),
    );
    let r = hermlab(&["report", "--metric-file", &singular]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    assert_eq!(
        hermlab(&["report", "--metric-file", "/nonexistent/metric.herm"]).code,
        2
    );
}
