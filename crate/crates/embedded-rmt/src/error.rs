use thiserror::Error;

/// Errors surfaced by the library. Kill outcomes of operator strings are
/// values (`None`), not errors; everything here is a genuine precondition
/// violation or a resource guard firing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("multinomial parts sum {got} exceeds n = {n}")]
    MultinomialOverflow { n: u64, got: u64 },

    #[error("hahn identity requires 2k <= m, got m = {m}, k = {k}")]
    HahnDomain { m: u64, k: u64 },

    #[error("basis size {size} exceeds cap {cap}")]
    BasisTooLarge { size: u128, cap: u128 },

    #[error("matrix dimension {dim} exceeds cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("operation estimate {needed} exceeds budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("pairing count must be even and at most {max}, got {got}")]
    PairingOrder { got: usize, max: usize },

    #[error("cycle decomposition does not come from a leading-order pairing: {0}")]
    CrossingCycle(String),

    #[error("eigendecomposition failed to converge for dimension {0}")]
    EigenFailure(usize),

    #[error("loop system infeasible: {0}")]
    InfeasibleLoopSystem(String),

    #[error("unsupported moment order {0} (supported: 2, 3, 4)")]
    UnsupportedOrder(u32),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
