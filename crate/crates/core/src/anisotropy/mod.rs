//! One-homogeneous anisotropy densities, kinetic coefficients and the dual
//! density.

pub mod density;
pub mod dual;
pub mod kinetic;
pub mod verify;

pub use density::{hexagonal_rotations, AnisotropyDensity, CustomDensity, DensityKind};
pub use dual::{dual_evaluate, DualEvaluator, GeodesicGrid};
pub use kinetic::{check_guard, KineticCoefficient, GUARD_MAX, GUARD_MIN};
pub use verify::{sample_unit_directions, verify_density, verify_density_seeded, VerificationReport};
