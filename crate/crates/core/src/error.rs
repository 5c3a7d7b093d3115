use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chain length {0} is odd; only even chain lengths are supported")]
    OddLength(usize),
    #[error("chain length {0} outside supported range 4..=30")]
    LengthOutOfRange(usize),
    #[error("n_up = {n_up} out of range for {sites} sites")]
    FillingOutOfRange { sites: usize, n_up: usize },
    #[error("mask {mask:#b} is not a member of the sector ({sites} sites, {n_up} up)")]
    NotInSector { mask: u64, sites: usize, n_up: usize },
    #[error("basis index {index} out of range (dim {dim})")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("vector length {got} does not match basis dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {dim} exceeds dense guard {limit}")]
    DenseGuard { dim: usize, limit: usize },
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e}, energy {energy})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        energy: f64,
    },
    #[error("near-degenerate ground state at lambda = {lambda} (gap {gap:.3e})")]
    Degenerate { lambda: f64, energy: f64, gap: f64 },
    #[error("gauge undefined: overlap with reference is {overlap:.3e}")]
    GaugeUndefined { overlap: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
