//! Bochner–Riesz means `S_λ^δ = (1 − Δ/λ²)₊^δ` on flat cones `C(S¹_σ)`.
//!
//! The kernel is evaluated two independent ways:
//!
//! * [`cone_kernel`]: a sum of Euclidean Bochner–Riesz kernels over the
//!   geometric images of the source point, plus a diffraction integral over
//!   `s ∈ [0, ∞)` weighted by `A_σ`.
//! * [`spectral_oracle`]: a brute-force angular mode sum of radial Bessel
//!   integrals.
//!
//! On top of the kernel sit discretized operators ([`cone_operator`]),
//! sampled bound checks ([`bounds_lab`]) and the special functions and
//! quadrature engine everything is built from.

// Argument checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds_lab;
pub mod cone_geom;
pub mod cone_kernel;
pub mod cone_operator;
pub mod error;
pub mod euclid;
pub mod quadrature;
pub mod specfun;
pub mod spectral_oracle;

pub use cone_geom::{ConeParams, ConePoint};
pub use cone_kernel::{kernel, ConeKernelConfig, KernelBreakdown};
pub use error::{Error, Result};
pub use euclid::BrParams;
pub use quadrature::QuadratureConfig;

/// Critical Bochner–Riesz index in two dimensions,
/// `max{0, 2|1/2 − 1/p| − 1/2}`.
pub fn critical_index(p: f64) -> f64 {
    let inv = if p.is_infinite() { 0.0 } else { 1.0 / p };
    (2.0 * (0.5 - inv).abs() - 0.5).max(0.0)
}
