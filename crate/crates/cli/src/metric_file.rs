//! Grid-sampled metric files.
//!
//! ```text
//! herm-metric v1; n=1; domain=-2,2;-2,2; grid=64,64
//! 1.0 0.0
//! ...
//! ```
//!
//! The header gives the complex dimension, one `lo,hi` pair per real axis
//! `(x^1, y^1, x^2, ...)` and the node count per axis. Each following line is one
//! grid node (row-major, last axis fastest) holding the upper triangle of
//! `h_{i jbar}` row by row as `re im` pairs. Blank lines and `#` comments are skipped.

use hermlab_core::charts::spline::spline_metric;
use hermlab_core::charts::{ChartPoint, DomainBox, GeometryEntry};
use hermlab_core::tensor::HermitianMatrix;
use hermlab_core::{LabError, Result, C64};
use std::path::Path;

/// Relative tolerance on the imaginary part of diagonal entries.
const HERMITIAN_TOL: f64 = 1e-12;
/// Fraction of each axis dropped at both ends when sampling, where natural splines are least accurate.
const SAMPLE_INSET: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricHeader {
    pub n: usize,
    pub domain: DomainBox,
    pub grid: Vec<usize>,
}

fn bad(msg: impl Into<String>) -> LabError {
    LabError::MetricFile(msg.into())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(format!("{what}: not a finite number: {s:?}")))
}

pub fn parse_header(line: &str) -> Result<MetricHeader> {
    let mut parts = line.split(';').map(str::trim);
    if parts.next() != Some("herm-metric v1") {
        return Err(bad("header must start with `herm-metric v1`"));
    }
    // `domain` uses `;` between axes as well, so bare pieces continue the previous key.
    let mut fields: Vec<(String, String)> = Vec::new();
    for p in parts.filter(|p| !p.is_empty()) {
        match p.split_once('=') {
            Some((k, v)) => fields.push((k.trim().to_string(), v.trim().to_string())),
            None => match fields.last_mut() {
                Some((_, v)) => {
                    v.push(';');
                    v.push_str(p);
                }
                None => return Err(bad(format!("unexpected header field {p:?}"))),
            },
        }
    }
    let get = |key: &str| -> Result<&str> {
        let mut hits = fields.iter().filter(|(k, _)| k == key);
        match (hits.next(), hits.next()) {
            (Some((_, v)), None) => Ok(v.as_str()),
            (None, _) => Err(bad(format!("header is missing `{key}=`"))),
            _ => Err(bad(format!("header repeats `{key}=`"))),
        }
    };
    if let Some((k, _)) = fields
        .iter()
        .find(|(k, _)| !["n", "domain", "grid"].contains(&k.as_str()))
    {
        return Err(bad(format!("unknown header field `{k}`")));
    }
    let n: usize = get("n")?
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| bad("n must be a positive integer"))?;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for axis in get("domain")?.split(';') {
        let (a, b) = axis
            .split_once(',')
            .ok_or_else(|| bad(format!("domain axis {axis:?} is not `lo,hi`")))?;
        lo.push(parse_f64(a, "domain")?);
        hi.push(parse_f64(b, "domain")?);
    }
    if lo.len() != 2 * n {
        return Err(bad(format!(
            "domain has {} axes, n={n} needs {}",
            lo.len(),
            2 * n
        )));
    }
    let domain = DomainBox::new(lo, hi).map_err(|e| bad(e.to_string()))?;
    let grid = get("grid")?
        .split(',')
        .map(|g| {
            g.trim()
                .parse::<usize>()
                .ok()
                .filter(|&g| g >= 4)
                .ok_or_else(|| bad(format!("grid size {g:?} must be an integer >= 4")))
        })
        .collect::<Result<Vec<_>>>()?;
    if grid.len() != 2 * n {
        return Err(bad(format!(
            "grid has {} sizes, n={n} needs {}",
            grid.len(),
            2 * n
        )));
    }
    Ok(MetricHeader { n, domain, grid })
}

/// Parses one node row into a Hermitian matrix.
fn parse_row(line: &str, n: usize, row: usize) -> Result<HermitianMatrix> {
    let vals = line
        .split_whitespace()
        .map(|t| parse_f64(t, &format!("row {row}")))
        .collect::<Result<Vec<_>>>()?;
    let want = n * (n + 1);
    if vals.len() != want {
        return Err(bad(format!(
            "row {row} has {} numbers, n={n} needs {want}",
            vals.len()
        )));
    }
    let mut h = vec![C64::new(0.0, 0.0); n * n];
    let mut it = vals.chunks(2).map(|c| C64::new(c[0], c[1]));
    for i in 0..n {
        for j in i..n {
            let z = it.next().expect("length checked");
            if i == j {
                if z.im.abs() > HERMITIAN_TOL * z.re.abs().max(1.0) {
                    return Err(bad(format!(
                        "row {row}: diagonal entry h[{i}][{i}] has imaginary part {}",
                        z.im
                    )));
                }
                h[i * n + i] = C64::new(z.re, 0.0);
            } else {
                h[i * n + j] = z;
                h[j * n + i] = z.conj();
            }
        }
    }
    let m = HermitianMatrix::new(n, h).map_err(|e| bad(format!("row {row}: {e}")))?;
    m.cholesky().map_err(|_| {
        LabError::SingularMetric(format!("row {row}: sample is not positive definite"))
    })?;
    Ok(m)
}

pub fn parse_metric(text: &str, label: &str) -> Result<GeometryEntry> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = parse_header(lines.next().ok_or_else(|| bad("empty file"))?)?;
    let expected: usize = header.grid.iter().product();
    let mut samples = Vec::with_capacity(expected);
    for (row, line) in lines.enumerate() {
        samples.push(parse_row(line, header.n, row)?);
    }
    if samples.len() != expected {
        return Err(bad(format!(
            "{} rows, grid needs {expected}",
            samples.len()
        )));
    }
    let metric = spline_metric(
        header.n,
        label,
        header.domain.clone(),
        &header.grid,
        &samples,
    )?;
    let d = &header.domain;
    let (lo, hi): (Vec<f64>, Vec<f64>) =
        d.lo.iter()
            .zip(&d.hi)
            .map(|(&a, &b)| {
                let w = SAMPLE_INSET * (b - a);
                (a + w, b - w)
            })
            .unzip();
    Ok(GeometryEntry::custom(
        label,
        metric,
        DomainBox::new(lo, hi)?,
    ))
}

pub fn load_metric_file(path: &Path) -> Result<GeometryEntry> {
    let text =
        std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    parse_metric(&text, &format!("metric-file:{}", path.display()))
}

/// Writes a metric file sampling `entry` on `domain` at `grid` nodes.
pub fn write_metric_file(
    entry: &GeometryEntry,
    domain: &DomainBox,
    grid: &[usize],
) -> Result<String> {
    let n = entry.n();
    let axes: Vec<String> = domain
        .lo
        .iter()
        .zip(&domain.hi)
        .map(|(a, b)| format!("{a},{b}"))
        .collect();
    let sizes: Vec<String> = grid.iter().map(|g| g.to_string()).collect();
    let mut out = format!(
        "herm-metric v1; n={n}; domain={}; grid={}\n",
        axes.join(";"),
        sizes.join(",")
    );
    let total: usize = grid.iter().product();
    for idx in 0..total {
        let mut rem = idx;
        let mut x = vec![0.0; grid.len()];
        for a in (0..grid.len()).rev() {
            let k = rem % grid[a];
            rem /= grid[a];
            x[a] = domain.lo[a] + (domain.hi[a] - domain.lo[a]) * k as f64 / (grid[a] - 1) as f64;
        }
        let h = entry.metric.eval(&ChartPoint::from_real(&x))?;
        let mut row = Vec::new();
        for i in 0..n {
            for j in i..n {
                let z = h.get(i, j);
                row.push(format!("{:e} {:e}", z.re, z.im));
            }
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}
