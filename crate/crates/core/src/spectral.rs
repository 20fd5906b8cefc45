//! First eigenvalues of the Laplace-de Rham operator on functions for the
//! built-in compact geometries.
//!
//! Flat tori use their exact Fourier spectrum. The Fubini-Study projective line
//! is the round sphere of radius `1/sqrt 2`; its spectrum is computed on a
//! geodesic icosphere with the cotangent Laplacian and a lumped mass matrix.

use crate::charts::{GeometryEntry, GeometryKind, ScalarField};
use crate::hodge::scalar_laplacian;
use crate::sampling::{halton_points, SeedExt, SeededRng};
use crate::{LabError, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    FourierExact,
    MeshCotangent,
}

impl SpectralMethod {
    pub fn label(&self) -> &'static str {
        match self {
            SpectralMethod::FourierExact => "fourier-exact",
            SpectralMethod::MeshCotangent => "mesh-cotangent",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub lambda1: f64,
    /// Closed-form eigenfunction on the chart, normalized to max 1.
    pub eigenfunction: Option<ScalarField>,
    pub diameter: f64,
    pub method: SpectralMethod,
    /// Subdivision level for meshes, 0 for Fourier.
    pub resolution: usize,
    /// `max |L u - lambda M u| / max |M u|` on the mesh, or the pointwise
    /// relative residual of the closed-form eigenfunction.
    pub residual: f64,
    pub mesh: Option<Mesh>,
    /// Mesh eigenvector, one value per vertex, normalized to max 1.
    pub mesh_eigenvector: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Analytic diameter of a built-in geometry.
pub fn diameter(entry: &GeometryEntry) -> Result<f64> {
    match entry.kind {
        GeometryKind::FubiniStudy { n: 1 } | GeometryKind::FlatTorus { .. } => entry
            .diameter
            .ok_or_else(|| LabError::Unsupported(format!("{}: no diameter", entry.name))),
        _ => Err(LabError::Unsupported(format!(
            "{}: no analytic diameter",
            entry.name
        ))),
    }
}

pub fn analytic_eigenfunction(entry: &GeometryEntry) -> Result<ScalarField> {
    entry.eigenfunction.clone().ok_or_else(|| {
        LabError::Unsupported(format!("{}: no eigenfunction registered", entry.name))
    })
}

/// `max |Delta_d u - lambda u| / max |u|` over the given points.
pub fn eigenfunction_residual(
    entry: &GeometryEntry,
    lambda: f64,
    points: &[crate::charts::ChartPoint],
) -> Result<f64> {
    let u = analytic_eigenfunction(entry)?;
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| {
            let lu = scalar_laplacian(&entry.metric, &u, p)?;
            let v = u.value(p).re;
            Ok(((lu - lambda * v).abs(), v.abs()))
        })
        .collect::<Result<_>>()?;
    let umax = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let err = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok(if umax > 0.0 { err / umax } else { err })
}

pub fn torus_spectrum(entry: &GeometryEntry) -> Result<SpectralResult> {
    let GeometryKind::FlatTorus { period, scale, .. } = entry.kind else {
        return Err(LabError::Unsupported(format!(
            "{}: not a flat torus",
            entry.name
        )));
    };
    // Dual lattice of the cubic lattice is (2 pi / period) Z^{2n}; the real metric is scale * Euclidean.
    let k = 2.0 * PI / period;
    let lambda1 = k * k / scale;
    let points = halton_points(&entry.sample_box, 64, 0.0, 0);
    let residual = eigenfunction_residual(entry, lambda1, &points)?;
    Ok(SpectralResult {
        lambda1,
        eigenfunction: entry.eigenfunction.clone(),
        diameter: diameter(entry)?,
        method: SpectralMethod::FourierExact,
        resolution: 0,
        residual,
        mesh: None,
        mesh_eigenvector: None,
        iterations: 0,
    })
}

/// Triangulated surface in R^3.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Geodesic icosphere: the icosahedron subdivided `level` times, projected to the sphere.
    pub fn icosphere(level: usize, radius: f64) -> Mesh {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<[f64; 3]> = vec![
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let project = |v: [f64; 3]| {
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / r * radius, v[1] / r * radius, v[2] / r * radius]
        };
        for v in vertices.iter_mut() {
            *v = project(*v);
        }
        for _ in 0..level {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut next = Vec::with_capacity(faces.len() * 4);
            for f in &faces {
                let mut m = [0usize; 3];
                for e in 0..3 {
                    let (a, b) = (f[e], f[(e + 1) % 3]);
                    let key = (a.min(b), a.max(b));
                    m[e] = *mid.entry(key).or_insert_with(|| {
                        let (p, q) = (vertices[a], vertices[b]);
                        vertices.push(project([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                        vertices.len() - 1
                    });
                }
                next.push([f[0], m[0], m[2]]);
                next.push([f[1], m[1], m[0]]);
                next.push([f[2], m[2], m[1]]);
                next.push(m);
            }
            faces = next;
        }
        Mesh { vertices, faces }
    }

    pub fn vertices_csv(&self, values: Option<&[f64]>) -> String {
        let mut s = String::from(if values.is_some() {
            "index,x,y,z,u\n"
        } else {
            "index,x,y,z\n"
        });
        for (k, v) in self.vertices.iter().enumerate() {
            match values {
                Some(u) => s.push_str(&format!(
                    "{k},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    v[0], v[1], v[2], u[k]
                )),
                None => s.push_str(&format!("{k},{:.16e},{:.16e},{:.16e}\n", v[0], v[1], v[2])),
            }
        }
        s
    }

    pub fn faces_csv(&self) -> String {
        let mut s = String::from("a,b,c\n");
        for f in &self.faces {
            s.push_str(&format!("{},{},{}\n", f[0], f[1], f[2]));
        }
        s
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Symmetric sparse matrix in compressed rows.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries; the order of `triplets` fixes the rounding.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_start = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_start[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        CsrMatrix {
            n,
            row_start,
            cols,
            vals,
        }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for k in self.row_start[i]..self.row_start[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_start[i]..self.row_start[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }
}

/// Cotangent stiffness matrix and barycentric lumped mass.
pub fn cotangent_laplacian(mesh: &Mesh) -> (CsrMatrix, Vec<f64>) {
    let nv = mesh.vertices.len();
    let per_face: Vec<([(usize, usize, f64); 9], [f64; 3])> = mesh
        .faces
        .par_iter()
        .map(|f| {
            let p = [
                mesh.vertices[f[0]],
                mesh.vertices[f[1]],
                mesh.vertices[f[2]],
            ];
            let area = 0.5
                * dot(
                    cross(sub(p[1], p[0]), sub(p[2], p[0])),
                    cross(sub(p[1], p[0]), sub(p[2], p[0])),
                )
                .sqrt();
            let mut t = [(0, 0, 0.0); 9];
            let mut diag = [0.0; 3];
            for c in 0..3 {
                // Angle at corner c weighs the opposite edge (a, b).
                let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                let (u, v) = (sub(p[a], p[c]), sub(p[b], p[c]));
                let cot = dot(u, v) / dot(cross(u, v), cross(u, v)).sqrt();
                let w = 0.5 * cot;
                t[3 * c] = (f[a], f[b], -w);
                t[3 * c + 1] = (f[b], f[a], -w);
                diag[a] += w;
                diag[b] += w;
            }
            for c in 0..3 {
                t[3 * c + 2] = (f[c], f[c], diag[c]);
            }
            (t, [area / 3.0; 3])
        })
        .collect();
    let mut triplets = Vec::with_capacity(9 * per_face.len());
    let mut mass = vec![0.0; nv];
    for (f, (t, m)) in mesh.faces.iter().zip(&per_face) {
        triplets.extend_from_slice(t);
        for c in 0..3 {
            mass[f[c]] += m[c];
        }
    }
    (CsrMatrix::from_triplets(nv, triplets), mass)
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    crate::sampling::pairwise_sum(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>())
}

/// Removes the mass-weighted mean so `1^T M x = 0`.
fn deflate_constant(x: &mut [f64], mass: &[f64]) {
    let c = dotv(x, mass) / mass.iter().sum::<f64>();
    x.iter_mut().for_each(|v| *v -= c);
}

/// Jacobi-preconditioned conjugate gradients for `A x = b` with `b` orthogonal
/// to the kernel of a positive semidefinite `A`. Returns the iteration count.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = a.n;
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut ax = vec![0.0; n];
    a.mul(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dotv(&r, &z);
    let bnorm = dotv(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if dotv(&r, &r).sqrt() <= rel_tol * bnorm {
            return Ok(it);
        }
        a.mul(&p, &mut ap);
        let alpha = rz / dotv(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        z = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
        let rz_new = dotv(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(LabError::Resolution(format!(
        "conjugate gradients did not converge in {max_iter} iterations"
    )))
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Smallest nonzero eigenpair of `L x = lambda M x` (`L` singular with constant
/// kernel, `M` diagonal) by inverse iteration on the mass-orthogonal complement of constants.
pub fn smallest_nonzero_eigenpair(l: &CsrMatrix, mass: &[f64], seed: u64) -> Result<EigenPair> {
    let n = l.n;
    let mut rng = SeededRng::new(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    deflate_constant(&mut x, mass);
    let mut lx = vec![0.0; n];
    let rayleigh = |x: &[f64], lx: &mut [f64]| {
        l.mul(x, lx);
        dotv(x, lx) / x.iter().zip(mass).map(|(v, m)| v * v * m).sum::<f64>()
    };
    let mut lambda = rayleigh(&x, &mut lx);
    for it in 1..=200 {
        let rhs: Vec<f64> = x.iter().zip(mass).map(|(v, m)| v * m).collect();
        let mut y = x.clone();
        y.iter_mut().for_each(|v| *v /= lambda.max(1e-12));
        conjugate_gradient(l, &rhs, &mut y, 1e-12, 20 * n)?;
        deflate_constant(&mut y, mass);
        let norm = y
            .iter()
            .zip(mass)
            .map(|(v, m)| v * v * m)
            .sum::<f64>()
            .sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        x = y;
        let next = rayleigh(&x, &mut lx);
        let change = (next - lambda).abs();
        lambda = next;
        if change < 1e-10 {
            return Ok(EigenPair {
                value: lambda,
                vector: x,
                iterations: it,
            });
        }
    }
    Err(LabError::Resolution(
        "inverse iteration did not converge".into(),
    ))
}

/// Radius of the round sphere isometric to the Fubini-Study projective line.
pub const FS_SPHERE_RADIUS: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub fn sphere_fs_spectrum(entry: &GeometryEntry, subdivisions: usize) -> Result<SpectralResult> {
    if entry.kind != (GeometryKind::FubiniStudy { n: 1 }) {
        return Err(LabError::Unsupported(format!(
            "{}: mesh spectrum needs fubini-study:1",
            entry.name
        )));
    }
    if subdivisions < 3 {
        return Err(LabError::Resolution(format!(
            "subdivisions must be at least 3, got {subdivisions}"
        )));
    }
    if subdivisions > 8 {
        return Err(LabError::Resolution(format!(
            "subdivisions above 8 are not supported, got {subdivisions}"
        )));
    }
    let mesh = Mesh::icosphere(subdivisions, FS_SPHERE_RADIUS);
    let (l, mass) = cotangent_laplacian(&mesh);
    let pair = smallest_nonzero_eigenpair(&l, &mass, 1)?;
    let mut v = pair.vector.clone();
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let s = if hi >= -lo { 1.0 / hi } else { 1.0 / lo };
    v.iter_mut().for_each(|x| *x *= s);
    let mut lv = vec![0.0; v.len()];
    l.mul(&v, &mut lv);
    let mv: Vec<f64> = v.iter().zip(&mass).map(|(a, m)| a * m).collect();
    let err = lv
        .iter()
        .zip(&mv)
        .map(|(a, b)| (a - pair.value * b).abs())
        .fold(0.0, f64::max);
    let scale = mv.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(SpectralResult {
        lambda1: pair.value,
        eigenfunction: entry.eigenfunction.clone(),
        diameter: diameter(entry)?,
        method: SpectralMethod::MeshCotangent,
        resolution: subdivisions,
        residual: err / scale,
        mesh: Some(mesh),
        mesh_eigenvector: Some(v),
        iterations: pair.iterations,
    })
}

pub const DEFAULT_SUBDIVISIONS: usize = 5;

/// Spectrum of a built-in geometry: Fourier for tori, mesh for the projective line.
pub fn spectrum(entry: &GeometryEntry, subdivisions: usize) -> Result<SpectralResult> {
    match entry.kind {
        GeometryKind::FlatTorus { .. } => torus_spectrum(entry),
        GeometryKind::FubiniStudy { n: 1 } => sphere_fs_spectrum(entry, subdivisions),
        _ => Err(LabError::Unsupported(format!(
            "{}: no spectral support",
            entry.name
        ))),
    }
}

/// Rayleigh quotients of the three coordinate functions on a mesh.
pub fn coordinate_rayleigh_quotients(mesh: &Mesh) -> [f64; 3] {
    let (l, mass) = cotangent_laplacian(mesh);
    let mut out = [0.0; 3];
    for (a, o) in out.iter_mut().enumerate() {
        let x: Vec<f64> = mesh.vertices.iter().map(|v| v[a]).collect();
        let mut lx = vec![0.0; x.len()];
        l.mul(&x, &mut lx);
        *o = dotv(&x, &lx) / x.iter().zip(&mass).map(|(v, m)| v * v * m).sum::<f64>();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{flat_torus, flat_torus_scaled, fubini_study, iwasawa};
    use crate::sampling::random_points;

    #[test]
    fn torus_values() {
        let t1 = torus_spectrum(&flat_torus(1).unwrap()).unwrap();
        assert_eq!(t1.lambda1, 1.0);
        assert!((t1.diameter - PI * 2f64.sqrt()).abs() < 1e-15);
        assert!(t1.residual < 1e-10, "{}", t1.residual);
        let t2 = torus_spectrum(&flat_torus(2).unwrap()).unwrap();
        assert_eq!(t2.lambda1, 1.0);
        assert!((t2.diameter - 2.0 * PI).abs() < 1e-14);
        let big = torus_spectrum(&flat_torus_scaled(1, 4.0 * PI, 1.0).unwrap()).unwrap();
        assert!((big.lambda1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn analytic_eigenfunctions() {
        let fs = fubini_study(1).unwrap();
        let u = analytic_eigenfunction(&fs).unwrap();
        let j = u.jet(&fs.origin(), 1).unwrap();
        assert!(
            (j.value().re - 1.0).abs() < 1e-15
                && j.coeffs()[1].norm() < 1e-15
                && j.coeffs()[2].norm() < 1e-15
        );
        let pts = random_points(&fs.sample_box, 50, 3);
        assert!(eigenfunction_residual(&fs, 4.0, &pts).unwrap() < 1e-8);
        let t = flat_torus(1).unwrap();
        assert!(
            eigenfunction_residual(&t, 1.0, &random_points(&t.sample_box, 50, 3)).unwrap() < 1e-10
        );
        assert!(analytic_eigenfunction(&iwasawa()).is_err());
        assert!((diameter(&fs).unwrap() - PI / 2f64.sqrt()).abs() == 0.0);
        assert!(diameter(&iwasawa()).is_err());
    }

    #[test]
    fn icosphere_counts_and_area() {
        let m = Mesh::icosphere(3, 1.0);
        assert_eq!(m.vertices.len(), 10 * 64 + 2);
        assert_eq!(m.faces.len(), 20 * 64);
        let (_, mass) = cotangent_laplacian(&m);
        let area: f64 = mass.iter().sum();
        assert!((area - 4.0 * PI).abs() < 0.02 * 4.0 * PI);
    }

    #[test]
    fn laplacian_kills_constants() {
        let m = Mesh::icosphere(2, 1.0);
        let (l, _) = cotangent_laplacian(&m);
        let one = vec![1.0; l.n];
        let mut y = vec![0.0; l.n];
        l.mul(&one, &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn coordinate_functions_share_quotient() {
        let q = coordinate_rayleigh_quotients(&Mesh::icosphere(4, FS_SPHERE_RADIUS));
        assert!(
            (q[0] - q[1]).abs() < 1e-6 && (q[1] - q[2]).abs() < 1e-6,
            "{q:?}"
        );
        assert!((q[0] - 4.0).abs() < 0.1);
    }

    #[test]
    fn sphere_level_errors() {
        let fs = fubini_study(1).unwrap();
        assert!(matches!(
            sphere_fs_spectrum(&fs, 2),
            Err(LabError::Resolution(_))
        ));
        assert!(matches!(
            spectrum(&iwasawa(), 5),
            Err(LabError::Unsupported(_))
        ));
    }

    #[test]
    fn sphere_spectrum_converges() {
        let fs = fubini_study(1).unwrap();
        let r: Vec<SpectralResult> = [3, 4, 5]
            .iter()
            .map(|&s| sphere_fs_spectrum(&fs, s).unwrap())
            .collect();
        for x in &r {
            assert!(x.residual < 1e-4, "{}", x.residual);
        }
        let e: Vec<f64> = r.iter().map(|x| (x.lambda1 - 4.0).abs()).collect();
        assert!(e[2] < e[1] && e[1] < e[0], "{e:?}");
        assert!(e[2] <= 0.08, "{}", r[2].lambda1);
        assert_eq!(r[2].diameter, PI / 2f64.sqrt());
    }
}
