use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("edge ({0}, {1}) is not present")]
    EdgeNotPresent(usize, usize),
    #[error("edge id {0} out of range")]
    EdgeIdOutOfRange(usize),

    #[error("shifted Laplacian system is singular (network disconnected)")]
    SingularSystem,
    #[error("network is disconnected")]
    Disconnected,
    #[error("not a valid flow: {0}")]
    NotAFlow(String),

    #[error("budget {budget} is not below the edge connectivity {connectivity}")]
    BudgetTooLarge { budget: usize, connectivity: usize },
    #[error("instance too large for exhaustive enumeration: {cuts} cuts exceed cap {cap}")]
    TooLarge { cuts: u128, cap: u128 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("instance too small: {0}")]
    TooSmall(String),
    #[error("gave up after {0} resampling attempts")]
    ResampleLimit(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
}
