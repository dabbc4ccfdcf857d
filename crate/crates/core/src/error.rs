use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported cell configuration: {0}")]
    UnsupportedCell(String),

    #[error("invalid map family: {0}")]
    InvalidMap(String),

    #[error("degenerate metric at node {node}, y = {y}: |dPsi/dy| = {value:e}")]
    DegenerateMetric { node: usize, y: f64, value: f64 },

    #[error("boundary condition does not match mesh tags: {0}")]
    BcMismatch(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("solution bound guard tripped at t = {t}: max |u| = {value:e} exceeds {bound:e}")]
    BlowUpGuard { t: f64, value: f64, bound: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("Newton correction diverged at t = {t}: {detail}")]
    NewtonDiverged { t: f64, detail: String },

    #[error("Newton did not converge after {iterations} iterations: residual = {residual:e}")]
    NewtonStalled { iterations: usize, residual: f64 },

    #[error("eigenvalue iteration stagnated after {iterations} iterations")]
    IterationStagnation { iterations: usize },

    #[error("resolvent shift {shift} too close to the spectrum")]
    ShiftNearSpectrum { shift: String },

    #[error("mesh ladder too short: need at least {need} levels, got {got}")]
    LadderTooShort { need: usize, got: usize },

    #[error("invalid fit window: {0}")]
    InvalidWindow(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
