//! Numerical toolkit for wind Riemannian structures.
//!
//! A wind Riemannian structure is the field of hypersurfaces `Σ = S_R + W`
//! obtained by displacing the unit sphere of a Riemannian metric `g_R` by a
//! vector field `W` of arbitrary strength. This crate evaluates the conic
//! Finsler metric `F` and the Lorentz-Finsler metric `F_l` built from such
//! Zermelo data, lifts everything to the associated SSTK spacetime to
//! integrate geodesics, solves Zermelo navigation by shooting, computes wind
//! balls on grids, and checks/classifies constant flag curvature models.
//!
//! Module map:
//!
//! - [`geometry`]: chart-based tensor calculus (Christoffel symbols,
//!   curvature, Lie derivatives, Killing/homothety diagnostics).
//! - [`wrs`]: regions, `h`, `F`, `F_l`, indicatrices, wind curves.
//! - [`sstk`]: the spacetime metric, causal characters, null geodesics.
//! - [`geodesics`]: geodesics by case, flag curvature by geodesic
//!   deviation, Zermelo navigation.
//! - [`reachability`]: forward/backward wind balls and completeness probes.
//! - [`models`]: catalog of concrete Zermelo data.
//! - [`classify`]: constant flag curvature verdicts.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod curve;
pub mod error;
pub mod exec;
pub mod geodesics;
pub mod geometry;
pub mod models;
pub mod ode;
pub mod reachability;
pub mod sstk;
pub mod wrs;

pub use curve::SampledCurve;
pub use error::{Result, WindError};
pub use exec::Execution;
pub use geometry::{ChartedSpace, VectorField};
pub use wrs::{Speed, WindData};

/// Crate version, embedded in every serialized report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
