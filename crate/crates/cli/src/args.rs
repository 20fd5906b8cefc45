use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "hermlab",
    version,
    about = "Curvature, spectra and eigenvalue-bound checks for Hermitian metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Connection, torsion and curvature tensors at chosen points, curvature extrema and balanced residuals.
    Report(Common),
    /// Run a verification suite; exits 1 if any check fails.
    Check {
        #[arg(value_enum, default_value = "all")]
        suite: SuiteArg,
        #[command(flatten)]
        common: Common,
    },
    /// First eigenvalue, diameter and eigen-residual of a built-in compact geometry.
    Spectrum(Common),
    /// Names accepted by --geometry.
    ListGeometries,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteArg {
    Identities,
    Bounds,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Catalogue geometry, e.g. fubini-study:1, flat-torus:2, iwasawa, nonbalanced.
    #[arg(
        long,
        conflicts_with = "metric_file",
        required_unless_present = "metric_file"
    )]
    pub geometry: Option<String>,
    /// Grid-sampled metric file (see README).
    #[arg(long)]
    pub metric_file: Option<PathBuf>,
    /// Report points: `origin`, a count of quasi-random points, or `x1,y1,...;x1,y1,...`.
    #[arg(long, default_value = "origin")]
    pub points: String,
    /// Quasi-random sample points for checks, extrema and balanced residuals.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    /// Random unit directions per sample point for curvature extrema.
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    /// Icosphere subdivision level for mesh spectra.
    #[arg(long, default_value_t = 5)]
    pub subdivisions: usize,
    /// Quadrature resolution for integral checks; defaults per geometry.
    #[arg(long)]
    pub quadrature: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for checks with analytic derivatives.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tolerance for checks that use finite differences.
    #[arg(long)]
    pub fd_tol: Option<f64>,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Vertices CSV of the spectral mesh with the eigenvector; faces go to `<stem>_faces.csv`.
    #[arg(long)]
    pub mesh_out: Option<PathBuf>,
}
