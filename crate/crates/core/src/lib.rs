//! Numerical Hermitian geometry on coordinate charts.
//!
//! Metrics are evaluated through truncated Taylor jets (exact derivatives for
//! closed-form metrics) or finite differences. On top of that sit the Chern and
//! Strominger-Bismut connections and curvatures, form operators and quadrature,
//! first eigenvalues of the built-in compact examples, and the identity and
//! bound checks in [`verify`].

pub mod charts;
pub mod connections;
pub mod curvature;
pub mod error;
pub mod hodge;
pub mod jet;
pub mod sampling;
pub mod spectral;
pub mod tensor;
pub mod verify;

pub use error::{LabError, Result};
pub use num_complex::Complex64 as C64;

/// The imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);
