//! Experiment harness for anisotropic mean curvature flow: single runs,
//! convergence studies against the shrinking ellipsoid, Wulff shapes and
//! the stabilization comparison.

pub mod config;
pub mod error;
pub mod norms;
pub mod output;
pub mod run;
pub mod study;
pub mod wulff;

pub use config::RunConfig;
pub use error::{HarnessError, Result};
