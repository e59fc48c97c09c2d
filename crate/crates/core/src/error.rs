use thiserror::Error;

#[derive(Debug, Error)]
pub enum MwgError {
    #[error("malformed mesh document: {0}")]
    MalformedMesh(String),
    #[error("dangling id: {0}")]
    DanglingId(String),
    #[error("face {face} is not planar (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    NonPlanarFace {
        face: usize,
        deviation: f64,
        tolerance: f64,
    },
    #[error("mesh has no cells")]
    EmptyMesh,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cell {0} is not hexahedral and no tetrahedral subdivision was provided")]
    UnsupportedCell(usize),
    #[error("quadrature exact to degree {have} is insufficient, degree {need} required")]
    InsufficientQuadrature { have: usize, need: usize },
    #[error("singular local mass matrix on {0}")]
    SingularMass(String),
    #[error("operator was built for a different mesh or degree: {0}")]
    Mismatch(String),
    #[error("unknown solution {0:?}")]
    UnknownSolution(String),
    #[error("linear system is singular to working precision: {0}")]
    SingularSystem(String),
    #[error("solver did not reach tolerance {tol:.1e}: relative residual {residual:.3e}")]
    NotConverged { tol: f64, residual: f64 },
    #[error("missing neighbor trace on interior face {0}")]
    MissingTrace(usize),
    #[error("non-positive error value {0:e} in order computation")]
    NonPositiveError(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = MwgError> = std::result::Result<T, E>;
