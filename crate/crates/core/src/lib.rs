//! Numerical toolkit for open discrete ring Q-mappings that are
//! quasiconformal in the mean.
//!
//! The crate computes the chordal distortion estimate
//!
//! ```text
//!     h(f(x), f(x₀)) ≤ ω_{n−1} / (c_n · Δ · I(x₀, |x−x₀|, ε₀)^{n−1})
//! ```
//!
//! for a single dilatation field Q, its uniform version for the whole class
//! of mappings with ∫ Φ(Q) dm/(1+|x|²)ⁿ ≤ M, and every intermediate
//! inequality between them, so that each step can be checked numerically
//! against explicit mappings.
//!
//! Module map:
//! - [`geometry`]: extended points, chordal metric, sphere/ball constants.
//! - [`gauge`]: convex gauges Φ, their left inverse and the divergence test.
//! - [`field`]: dilatation fields, spherical means and radial integrals.
//! - [`bounds`]: constants c_n, λ_n, β_n and the distortion/modulus bounds.
//! - [`gallery`]: example mappings, finite-difference dilatation and the
//!   verification harness.

// `!(x > 0.0)` is the NaN-rejecting form used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod field;
pub mod gallery;
pub mod gauge;
pub mod geometry;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
pub use field::{Domain, GridField, QField, SphericalQuadratureSpec};
pub use gauge::{ConvexGauge, DivergenceVerdict, Verdict};
pub use geometry::{chordal_distance, dimension_constants, DimensionConstants, ExtendedPoint};
