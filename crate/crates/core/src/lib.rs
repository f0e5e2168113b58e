//! Evolving surface finite elements for anisotropic mean curvature flow.
//!
//! The solver evolves positions, normals and normal velocity of a closed
//! surface under `β(ν)V = −H_γ` with linearly implicit BDF time stepping.
//! All numerics are generic over [`Scalar`]; the `f64` aliases below are the
//! intended entry points.

pub mod anisotropy;
pub mod assembly;
pub mod coefficients;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod integrator;
pub mod linalg;
pub mod mesh;
pub mod scalar;
pub mod solver;
pub mod sparse;

pub use error::{FlowError, Result};
pub use scalar::Scalar;

pub type Density = anisotropy::AnisotropyDensity<f64>;
pub type Kinetic = anisotropy::KineticCoefficient<f64>;
pub type Mesh = mesh::SurfaceMesh<f64>;
pub type Field = mesh::FEFunction<f64>;
pub type Matrix = sparse::SparseMatrix<f64>;
pub type State = integrator::FlowState<f64>;
pub type Problem = integrator::FlowProblem<f64>;
pub type Point = linalg::Vec3<f64>;
