//! Numerical laboratory for Ricci flow and cross curvature flow on
//! left-invariant metrics of the homogeneous 3-geometries Nil, Sol,
//! SL̃(2,ℝ) and Isõm(E²).
//!
//! Every left-invariant metric is kept diagonal in a Milnor frame, so each
//! flow reduces to a 3-dimensional ODE. On top of the integrator sit a
//! singularity classifier, a numerical Cheeger–Gromov style rescaled-limit
//! check, soliton certificates and the lattice quotient collapse analysis.

pub mod curvature;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod group;
pub mod linalg;
pub mod rescale;
pub mod singularity;
pub mod soliton;

pub use error::{Error, Result};
pub use flow::FlowKind;
pub use geometry::{ChartPoint, DiagonalMetric, GeometryKind};
