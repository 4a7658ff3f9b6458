use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("tortoise inversion did not converge for r_* = {rstar} (residual {residual:e} after {iterations} iterations)")]
    NoConvergence {
        rstar: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("interior grid reaches r = {r:.6} below the floor {floor:.6}")]
    RadiusFloor { r: f64, floor: f64 },

    #[error("incompatible data: {0}")]
    Incompatible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight exponent p = {p} outside the hierarchy range [{lo}, {hi}] for k = {k}")]
    HierarchyRange { p: f64, k: u32, lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("degenerate normalization: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
