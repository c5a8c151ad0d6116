use std::path::PathBuf;

use thiserror::Error;

use crate::polyharmonic::KernelFamily;

/// Errors raised while building or running a Kansa collocation problem.
#[derive(Debug, Error)]
pub enum KansaError {
    #[error("invalid kernel: {family} does not admit exponent k={k}")]
    InvalidKernel { family: KernelFamily, k: u32 },

    #[error("tensor grid needs at least 3 nodes per side, got {0}")]
    GridTooSmall(usize),

    #[error("boundary point ({x}, {y}) is covered by neither the Dirichlet nor the Neumann portion")]
    UncoveredBoundaryPoint { x: f64, y: f64 },

    #[error("Neumann point ({x}, {y}) has no outward normal")]
    MissingNormal { x: f64, y: f64 },

    #[error("invalid collocation set: {0}")]
    InvalidCollocationSet(String),

    #[error("size mismatch: expected {expected}, got {actual} ({what})")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("failed to parse config: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, KansaError>;
