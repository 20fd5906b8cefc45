//! Command-line front end: geometry selection, reports, check suites, spectra and plot export.

pub mod args;
pub mod metric_file;
pub mod output;

use args::{Cli, Command, Common, Format, SuiteArg};
use hermlab_core::charts::{by_name, catalogue_names, ChartPoint, GeometryEntry};
use hermlab_core::connections::{chern_from, sb_from, torsion_with, LocalMetric};
use hermlab_core::curvature::{
    curvature_bundle, curvature_extrema, min_relative_eigen, CurvatureExtrema, Sampler,
};
use hermlab_core::hodge::balanced_residual;
use hermlab_core::spectral::{spectrum, SpectralResult};
use hermlab_core::verify::{
    eigenpair, plot_rows, run_suite, sample_points, CheckReport, CheckStatus, Suite, SuiteInputs,
    Tolerances, VerifyConfig,
};
use hermlab_core::{LabError, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;

/// Balanced residuals at or below this (or the tolerance, if larger) count as balanced.
const BALANCED_FLOOR: f64 = 1e-5;

pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::SingularMetric(_) => EXIT_SINGULAR,
        LabError::Unsupported(_) => EXIT_UNSUPPORTED,
        _ => EXIT_CONFIG,
    }
}

/// Everything that determines the output. Two runs with equal configs write identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub suite: Option<SuiteArg>,
    /// Catalogue name or metric-file path.
    pub geometry: String,
    pub source: String,
    pub points: String,
    pub grid: usize,
    pub directions: usize,
    pub subdivisions: usize,
    pub quadrature: Option<usize>,
    pub seed: u64,
    pub tol: f64,
    pub fd_tol: f64,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub mesh_out: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(LabError::InvalidArgument(format!(
            "--{name} must be a positive number, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn new(command: &str, suite: Option<SuiteArg>, c: &Common) -> Result<Self> {
        let defaults = Tolerances::default();
        let (geometry, source) = match (&c.geometry, &c.metric_file) {
            (Some(g), None) => (g.clone(), "catalogue"),
            (None, Some(p)) => (p.display().to_string(), "metric-file"),
            _ => {
                return Err(LabError::InvalidArgument(
                    "give exactly one of --geometry and --metric-file".into(),
                ))
            }
        };
        if c.grid == 0 || c.grid > 100_000 {
            return Err(LabError::InvalidArgument(format!(
                "--grid must lie in 1..=100000, got {}",
                c.grid
            )));
        }
        if c.directions == 0 {
            return Err(LabError::InvalidArgument(
                "--directions must be positive".into(),
            ));
        }
        if c.quadrature == Some(0) {
            return Err(LabError::InvalidArgument(
                "--quadrature must be positive".into(),
            ));
        }
        Ok(RunConfig {
            command: command.into(),
            suite,
            geometry,
            source: source.into(),
            points: c.points.clone(),
            grid: c.grid,
            directions: c.directions,
            subdivisions: c.subdivisions,
            quadrature: c.quadrature,
            seed: c.seed,
            tol: positive("tol", c.tol.unwrap_or(defaults.analytic))?,
            fd_tol: positive("fd-tol", c.fd_tol.unwrap_or(defaults.finite_difference))?,
            format: c.format,
            out: c.out.clone(),
            mesh_out: c.mesh_out.clone(),
        })
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            analytic: self.tol,
            finite_difference: self.fd_tol,
        }
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            points: self.grid,
            seed: self.seed,
            quadrature: self.quadrature,
            directions: self.directions,
            tol: self.tolerances(),
            subdivisions: self.subdivisions,
        }
    }

    pub fn load_geometry(&self) -> Result<GeometryEntry> {
        match self.source.as_str() {
            "metric-file" => metric_file::load_metric_file(Path::new(&self.geometry)),
            _ => by_name(&self.geometry),
        }
    }
}

/// Rendered output, stderr summary lines and exit code of one command.
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub summary: Vec<String>,
    pub code: i32,
}

/// `origin`, a point count, or `;`-separated lists of real coordinates.
pub fn parse_points(spec: &str, entry: &GeometryEntry, seed: u64) -> Result<Vec<ChartPoint>> {
    let spec = spec.trim();
    if spec == "origin" {
        return Ok(vec![entry.origin()]);
    }
    if let Ok(count) = spec.parse::<usize>() {
        if count == 0 {
            return Err(LabError::InvalidArgument(
                "--points count must be positive".into(),
            ));
        }
        return Ok(sample_points(entry, count, seed));
    }
    let dim = 2 * entry.n();
    spec.split(';')
        .map(|p| {
            let x = p
                .split(',')
                .map(|t| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| LabError::InvalidArgument(format!("bad point {p:?}")))?;
            if x.len() != dim {
                return Err(LabError::InvalidArgument(format!(
                    "point {p:?} has {} coordinates, expected {dim}",
                    x.len()
                )));
            }
            Ok(ChartPoint::from_real(&x))
        })
        .collect()
}

fn balanced_threshold(entry: &GeometryEntry, tol: &Tolerances) -> f64 {
    tol.for_regime(entry.metric.regime()).max(BALANCED_FLOOR)
}

fn geometry_block(cfg: &RunConfig, entry: &GeometryEntry, residual: f64) -> Value {
    let threshold = balanced_threshold(entry, &cfg.tolerances());
    let balanced = residual <= threshold;
    let warning = (!balanced).then(|| {
        format!("metric is not balanced (residual {residual:e} > {threshold:e}); checks that assume a balanced metric are not applicable")
    });
    json!({
        "name": entry.name,
        "n": entry.n(),
        "source": cfg.source,
        "regime": entry.metric.regime().label(),
        "balanced_residual": residual,
        "balanced": balanced,
        "kahler_expected": entry.is_kahler_expected,
        "warning": warning,
    })
}

fn spectrum_block(entry: &GeometryEntry, s: &SpectralResult) -> Value {
    json!({
        "lambda1": s.lambda1,
        "exact_lambda1": entry.exact_lambda1,
        "diameter": s.diameter,
        "method": s.method.label(),
        "resolution": s.resolution,
        "residual": s.residual,
        "iterations": s.iterations,
        "mesh_vertices": s.mesh.as_ref().map(|m| m.vertices.len()),
    })
}

fn extrema_block(e: &CurvatureExtrema) -> Value {
    serde_json::to_value(e).expect("serializable")
}

fn document(
    cfg: &RunConfig,
    geometry: Value,
    curvature: Value,
    spectrum: Value,
    checks: &[CheckReport],
) -> Value {
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "geometry": geometry,
        "curvature": curvature,
        "spectrum": spectrum,
        "checks": checks,
    });
    output::normalize(&mut v);
    v
}

fn render(cfg: &RunConfig, doc: &Value) -> String {
    match cfg.format {
        Format::Text => output::text(doc),
        _ => output::json(doc),
    }
}

fn plot_export(entry: &GeometryEntry, points: &[ChartPoint]) -> Result<String> {
    let pair = eigenpair(entry).ok_or_else(|| {
        LabError::Unsupported(format!("{}: no eigenfunction to export", entry.name))
    })?;
    Ok(output::plot_csv(
        entry.n(),
        &plot_rows(entry, &pair, points)?,
    ))
}

fn extrema(cfg: &RunConfig, entry: &GeometryEntry, pts: &[ChartPoint]) -> Result<CurvatureExtrema> {
    curvature_extrema(
        &entry.metric,
        &Sampler {
            points: pts.to_vec(),
            directions: cfg.directions,
        },
        cfg.seed,
    )
}

fn point_block(entry: &GeometryEntry, p: &ChartPoint) -> Result<Value> {
    let m = &entry.metric;
    let lm = LocalMetric::new(m, p, 2)?;
    let h = lm.matrix();
    let chern = chern_from(&lm);
    let sb = sb_from(&lm);
    let b = curvature_bundle(m, p)?;
    let mut o = Map::new();
    o.insert("coords".into(), json!(p.real()));
    o.insert("regime".into(), json!(b.regime.label()));
    output::insert_tensor(&mut o, "metric", &h.to_tensor());
    output::insert_tensor(&mut o, "chern_gamma", &chern.gamma_hol);
    output::insert_tensor(&mut o, "chern_torsion", &torsion_with(&chern, &h).t);
    output::insert_tensor(&mut o, "sb_gamma_hol", &sb.gamma_hol);
    output::insert_tensor(&mut o, "sb_gamma_mixed", &sb.gamma_mixed);
    output::insert_tensor(&mut o, "sb_torsion", &torsion_with(&sb, &h).t);
    output::insert_tensor(&mut o, "chern_curvature", &b.theta);
    output::insert_tensor(&mut o, "chern_ricci", &b.theta_ric1);
    output::insert_tensor(&mut o, "sb_curvature", &b.r_sb);
    for (k, r) in b.ric_sb.iter().enumerate() {
        output::insert_tensor(&mut o, &format!("ric_sb{}", k + 1), r);
    }
    output::insert_tensor(&mut o, "t_circ_tbar", &b.t_circ_tbar);
    o.insert(
        "min_hol_ricci".into(),
        json!(min_relative_eigen(&b.ric_sb[3], &h)?.0),
    );
    Ok(Value::Object(o))
}

pub fn cmd_report(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.load_geometry()?;
    let points = parse_points(&cfg.points, &entry, cfg.seed)?;
    if let Some(p) = points.iter().find(|p| !entry.metric.domain.contains(p)) {
        return Err(LabError::Domain(format!(
            "point {:?} lies outside the chart",
            p.real()
        )));
    }
    if cfg.format == Format::Csv {
        let body = plot_export(&entry, &points)?;
        return Ok(Outcome {
            body,
            summary: vec![format!("report {}: {} plot rows", entry.name, points.len())],
            code: EXIT_PASS,
        });
    }
    let samples = sample_points(&entry, cfg.grid, cfg.seed);
    let br = balanced_residual(&entry.metric, &samples)?.max();
    let ext = extrema(cfg, &entry, &samples)?;
    let blocks = points
        .iter()
        .map(|p| point_block(&entry, p))
        .collect::<Result<Vec<_>>>()?;
    let curvature = json!({ "points": blocks, "extrema": extrema_block(&ext) });
    let geometry = geometry_block(cfg, &entry, br);
    let mut summary = vec![format!(
        "report {}: {} point(s), min holomorphic Ricci {:.6e}, min HSC {:.6e}, balanced residual {br:.3e}",
        entry.name,
        points.len(),
        ext.min_hol_ricci,
        ext.min_hsc
    )];
    if let Some(w) = geometry["warning"].as_str() {
        summary.push(format!("warning: {w}"));
    }
    let doc = document(cfg, geometry, curvature, Value::Null, &[]);
    Ok(Outcome {
        body: render(cfg, &doc),
        summary,
        code: EXIT_PASS,
    })
}

fn summary_line(r: &CheckReport) -> String {
    let status = match r.status {
        CheckStatus::Pass => "PASS",
        CheckStatus::Fail => "FAIL",
        CheckStatus::NotApplicable => "N/A ",
    };
    format!(
        "{status} {:<36} value={:<24} tol={}",
        r.name,
        output::num(r.value),
        output::num(r.tolerance)
    )
}

pub fn cmd_check(cfg: &RunConfig, suite: SuiteArg) -> Result<Outcome> {
    let entry = cfg.load_geometry()?;
    let samples = sample_points(&entry, cfg.grid, cfg.seed);
    if cfg.format == Format::Csv {
        let body = plot_export(&entry, &samples)?;
        return Ok(Outcome {
            body,
            summary: vec![format!("check {}: {} plot rows", entry.name, samples.len())],
            code: EXIT_PASS,
        });
    }
    let ext = extrema(cfg, &entry, &samples)?;
    let spec = match suite {
        SuiteArg::Identities => None,
        _ => match spectrum(&entry, cfg.subdivisions) {
            Ok(s) => Some(s),
            Err(LabError::Unsupported(_)) => None,
            Err(e) => return Err(e),
        },
    };
    let vcfg = cfg.verify_config();
    let which = match suite {
        SuiteArg::Identities => Suite::Identities,
        SuiteArg::Bounds => Suite::Bounds,
        SuiteArg::All => Suite::All,
    };
    let reports = run_suite(
        SuiteInputs {
            entry: &entry,
            config: &vcfg,
            spectral: spec.as_ref(),
            extrema: Some(&ext),
        },
        which,
    )?;
    let br = reports
        .iter()
        .find(|r| r.name == "balanced")
        .and_then(|r| r.details.get("balanced_residual").copied())
        .map(Ok)
        .unwrap_or_else(|| balanced_residual(&entry.metric, &samples).map(|b| b.max()))?;
    let geometry = geometry_block(cfg, &entry, br);
    let mut summary: Vec<String> = reports.iter().map(summary_line).collect();
    let count = |s: CheckStatus| reports.iter().filter(|r| r.status == s).count();
    let failed = count(CheckStatus::Fail);
    summary.push(format!(
        "{}: {} passed, {failed} failed, {} not applicable",
        entry.name,
        count(CheckStatus::Pass),
        count(CheckStatus::NotApplicable)
    ));
    if let Some(w) = geometry["warning"].as_str() {
        summary.push(format!("warning: {w}"));
    }
    let curvature = json!({ "extrema": extrema_block(&ext) });
    let spectrum = spec
        .as_ref()
        .map(|s| spectrum_block(&entry, s))
        .unwrap_or(Value::Null);
    let doc = document(cfg, geometry, curvature, spectrum, &reports);
    Ok(Outcome {
        body: render(cfg, &doc),
        summary,
        code: if failed > 0 { EXIT_FAIL } else { EXIT_PASS },
    })
}

fn faces_path(p: &Path) -> PathBuf {
    let stem = p
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into());
    p.with_file_name(format!("{stem}_faces.csv"))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body)
        .map_err(|e| LabError::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let entry = cfg.load_geometry()?;
    let s = spectrum(&entry, cfg.subdivisions)?;
    let mut summary = vec![format!(
        "spectrum {}: lambda1 {} ({}, resolution {}), diameter {}, residual {:.3e}",
        entry.name,
        output::num(s.lambda1),
        s.method.label(),
        s.resolution,
        output::num(s.diameter),
        s.residual
    )];
    if let Some(path) = &cfg.mesh_out {
        match (&s.mesh, &s.mesh_eigenvector) {
            (Some(mesh), Some(v)) => {
                write_file(path, &mesh.vertices_csv(Some(v)))?;
                write_file(&faces_path(path), &mesh.faces_csv())?;
                summary.push(format!(
                    "mesh written to {} and {}",
                    path.display(),
                    faces_path(path).display()
                ));
            }
            _ => summary.push(format!(
                "{} spectra have no mesh; --mesh-out ignored",
                s.method.label()
            )),
        }
    }
    if cfg.format == Format::Csv {
        let body = format!(
            "lambda1,exact_lambda1,diameter,method,resolution,residual\n{},{},{},{},{},{}\n",
            output::num(s.lambda1),
            entry.exact_lambda1.map(output::num).unwrap_or_default(),
            output::num(s.diameter),
            s.method.label(),
            s.resolution,
            output::num(s.residual)
        );
        return Ok(Outcome {
            body,
            summary,
            code: EXIT_PASS,
        });
    }
    let samples = sample_points(&entry, cfg.grid, cfg.seed);
    let br = balanced_residual(&entry.metric, &samples)?.max();
    let doc = document(
        cfg,
        geometry_block(cfg, &entry, br),
        Value::Null,
        spectrum_block(&entry, &s),
        &[],
    );
    Ok(Outcome {
        body: render(cfg, &doc),
        summary,
        code: EXIT_PASS,
    })
}

pub fn cmd_list() -> Outcome {
    let mut body = String::new();
    for name in catalogue_names() {
        body.push_str(name);
        body.push('\n');
    }
    Outcome {
        body,
        summary: Vec::new(),
        code: EXIT_PASS,
    }
}

pub fn execute(cli: &Cli) -> Result<(Outcome, Option<PathBuf>)> {
    let (cfg, out) = match &cli.command {
        Command::ListGeometries => return Ok((cmd_list(), None)),
        Command::Report(c) => {
            let cfg = RunConfig::new("report", None, c)?;
            (cmd_report(&cfg)?, cfg.out)
        }
        Command::Check { suite, common } => {
            let cfg = RunConfig::new("check", Some(*suite), common)?;
            (cmd_check(&cfg, *suite)?, cfg.out)
        }
        Command::Spectrum(c) => {
            let cfg = RunConfig::new("spectrum", None, c)?;
            (cmd_spectrum(&cfg)?, cfg.out)
        }
    };
    Ok((cfg, out))
}

/// Runs the command, writes the output and the stderr summary, and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok((o, out)) => {
            let written = match &out {
                Some(path) => write_file(path, &o.body),
                None => {
                    print!("{}", o.body);
                    Ok(())
                }
            };
            for line in &o.summary {
                eprintln!("{line}");
            }
            match written {
                Ok(()) => o.code,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
