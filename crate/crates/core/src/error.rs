use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the flow engine.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type the
/// failing computation ran in.
#[derive(Debug, Error)]
pub enum FlowError {
    #[error("direction vector has zero length")]
    ZeroDirection,

    #[error("non-finite value while evaluating at direction {direction:?}")]
    NonFinite { direction: [f64; 3] },

    #[error("normal length {norm} left the guard region [1/2, 2]{}", element_suffix(*element))]
    OutOfGuardRegion { norm: f64, element: Option<usize> },

    #[error("unsupported polynomial degree {0} (expected 1 or 2)")]
    UnsupportedDegree(usize),

    #[error("quadrature exactness {requested} is below the minimum {minimum} for degree {degree}")]
    InsufficientQuadrature { degree: usize, requested: usize, minimum: usize },

    #[error("level-set projection did not converge for node {node} (residual {residual:e})")]
    ProjectionDiverged { node: usize, residual: f64 },

    #[error("level set is not star-shaped around the origin near node {node}")]
    NotStarShaped { node: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("surface is not closed: edge ({0}, {1}) is not shared by exactly two consistently oriented faces")]
    NotClosed(usize, usize),

    #[error("element {element} is degenerate (metric determinant {det:e})")]
    DegenerateElement { element: usize, det: f64 },

    #[error("averaged normal at node {node} vanishes")]
    ZeroNormal { node: usize },

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("negative curvature detected in conjugate gradients (pᵀSp = {curvature:e})")]
    IndefiniteDetected { curvature: f64 },

    #[error("unsupported multistep order {0} (expected 1..=5)")]
    UnsupportedOrder(usize),

    #[error("history holds {available} states, {required} required")]
    IncompleteHistory { available: usize, required: usize },

    #[error("point is off the level set (|d| = {residual:e})")]
    OffSurface { residual: f64 },

    #[error("time {time} is at or past the blow-up time of the exact solution")]
    PastBlowup { time: f64 },

    #[error("metric determinant ratio {ratio:e} on element {element} fell below the degeneration threshold")]
    MeshDegenerated { element: usize, ratio: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step {step} at t = {time}: {source}")]
    StepFailed {
        step: usize,
        time: f64,
        #[source]
        source: Box<FlowError>,
    },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn element_suffix(element: Option<usize>) -> String {
    element.map(|e| format!(" on element {e}")).unwrap_or_default()
}

impl FlowError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FlowError::Io { path: path.into(), source }
    }

    /// Attaches an element id to guard-region violations.
    pub(crate) fn on_element(self, element: usize) -> Self {
        match self {
            FlowError::OutOfGuardRegion { norm, element: None } => {
                FlowError::OutOfGuardRegion { norm, element: Some(element) }
            }
            other => other,
        }
    }
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;
