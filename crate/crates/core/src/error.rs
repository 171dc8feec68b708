use thiserror::Error;

/// Every failure mode of the library; variants mirror the checks they guard.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KirchhoffError {
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("edge {edge} has non-positive conductance {value}")]
    NonpositiveConductance { edge: String, value: f64 },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("graph mismatch: {0}")]
    GraphMismatch(String),
    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),
    #[error("field is not minimal energy-dominant (min |b_e| = {min_abs})")]
    NotEnergyDominant { min_abs: f64 },
    #[error("cycle Gram matrix is singular")]
    SingularGram,
    #[error("vertex {0} is not a boundary vertex")]
    NotBoundaryVertex(String),
    #[error("boundary set is empty")]
    EmptyBoundary,
    #[error("incompatible Neumann data (defect {defect:e})")]
    IncompatibleData { defect: f64 },
    #[error("unsupported right-hand side: {0}")]
    UnsupportedRhs(String),
    #[error("invalid velocity field: {0}")]
    FieldInvalid(String),
    #[error("function is not in the domain (max Kirchhoff residual {residual:e})")]
    NotInDomain { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("map is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },
    #[error("edge end {0} is not covered by any scattering rule")]
    UncoveredVertex(String),
    #[error("initial data mismatch (residual {residual:e})")]
    InitialMismatch { residual: f64 },
    #[error("not a catalogued case: {0}")]
    NotInCatalog(String),
    #[error("level {level} exceeds the maximum {max}")]
    LevelTooLarge { level: usize, max: usize },
    #[error("level {level} cannot resolve word of length {word_len}")]
    LevelInsufficient { level: usize, word_len: usize },
    #[error("profile is not periodic (|V(1) - V(0)| = {gap:e})")]
    ProfileNotPeriodic { gap: f64 },
    #[error("io error at {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, KirchhoffError>;
