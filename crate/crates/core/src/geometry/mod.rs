//! Chart-based tensor calculus on the Riemannian substrate `g_R`.
//!
//! Derivatives are analytic whenever the chart or field supplies them and
//! central finite differences otherwise (steps [`FD_STEP_FIRST`] and
//! [`FD_STEP_SECOND`]). All functions are pure.

mod fields;
mod space;
mod tensors;

pub use fields::{
    constant_curvature_check, covariant_derivative, geodesic_field_residual, homothety_classify,
    killing_identity_residual, lie_derivative_metric, CurvatureCheck, HomothetyClass, HomothetyReport, RANDOM_PLANES,
};
pub(crate) use space::unit_map;
pub use space::{ChartedSpace, ModelSpace, PointFrame, VectorField, FD_STEP_FIRST, FD_STEP_SECOND};
pub(crate) use tensors::invert;
pub use tensors::{christoffel, curvature, sectional, Christoffel, Curvature};
