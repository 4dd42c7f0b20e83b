use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("labeling error: {0}")]
    Labeling(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("preparation-angle search failed; best residual {best_residual:.3e}")]
    Solver { best_residual: f64 },

    #[error("path {path} does not exist in a {n_paths}-path mode space")]
    InvalidPath { path: usize, n_paths: usize },

    #[error("photon norm {norm:.12} after a lossy train; cannot map to qubits")]
    LossyTrain { norm: f64 },

    #[error("optical train differs from the gate circuit by {deviation:.3e}")]
    Equivalence { deviation: f64 },

    #[error("reconstruction error: {0}")]
    Reconstruction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
