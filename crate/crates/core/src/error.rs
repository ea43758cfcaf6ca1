use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("Gaussian weight must be positive and finite, got r = {0}")]
    InvalidWeight(f64),
    #[error("incompatible spaces: weights r = {left} and r = {right}")]
    WeightMismatch { left: f64, right: f64 },
    #[error("non-finite coefficient at index {index}")]
    NonFinite { index: usize },
    #[error("duplicate kernel node {0}")]
    DuplicateNode(String),
    #[error("{nodes} kernel nodes exceed truncation dimension {dim}")]
    TooManyNodes { nodes: usize, dim: usize },
    #[error("operator size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("series for {symbol} not converged at |z| = {radius}: tail bound {tail:e}")]
    SeriesNotConverged { symbol: String, radius: f64, tail: f64 },
    #[error("product norm not convergent within {depth} coefficients: {detail}")]
    NormNotConvergent { depth: usize, detail: String },
    #[error("non-finite sample at quadrature node {node}")]
    NonFiniteSample { node: String },
    #[error("empty exactness window at N = {degree}; increase N")]
    EmptyWindow { degree: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("inconclusive diagnostic: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, FockError>;
