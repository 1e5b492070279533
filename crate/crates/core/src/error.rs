use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("operation not defined for this quadric kind: {0}")]
    Kind(String),
    #[error("tangency equation has no solution: {0}")]
    NoSolution(String),
    #[error("degenerate frame (condition number {condition:.3e} exceeds {limit:.1e})")]
    DegenerateFrame { condition: f64, limit: f64 },
    #[error("surfaces are not isometric (first form mismatch {mismatch:.3e} at node {node})")]
    NotIsometric { mismatch: f64, node: usize },
    #[error("not an immersion at node {node} (|x_u × x_v| = {norm:.3e})")]
    Immersion { node: usize, norm: f64 },
    #[error("grid too coarse: connection reconstruction error {error:.3e} exceeds {limit:.1e}")]
    GridTooCoarse { error: f64, limit: f64 },
    #[error("bending is not real: {0}")]
    Validity(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("spectral parameter z = 0 makes the Riccati equation degenerate")]
    SpectralZero,
    #[error("Riccati solution blew up at node ({i}, {j})")]
    Blowup { i: usize, j: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
