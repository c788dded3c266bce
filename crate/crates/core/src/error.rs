use thiserror::Error;

/// Errors raised by the library. Every variant maps to a stable kind string
/// used by the command-line front-end for its machine-readable error output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transition matrix is not primitive up to exponent {0}")]
    NotPrimitive(usize),

    #[error("word {0} is not admissible")]
    InadmissibleWord(String),

    #[error("graph too large: {0}")]
    GraphTooLarge(String),

    #[error("enumeration exceeded the budget of {0} items")]
    BudgetExceeded(u64),

    #[error("potential window {window} exceeds measure order {order}")]
    WindowMismatch { window: usize, order: usize },

    #[error("alpha {0:?} lies outside L_Phi")]
    Infeasible(Vec<f64>),

    #[error("dual witness misses the level by {gap:.3e} (tolerance {tol:.1e})")]
    DualPrimalGap { gap: f64, tol: f64 },

    #[error("no sampled target value lies in L_Phi")]
    EmptyIntersection,

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPrimitive(_) => "NotPrimitive",
            Error::InadmissibleWord(_) => "InadmissibleWord",
            Error::GraphTooLarge(_) => "GraphTooLarge",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::WindowMismatch { .. } => "WindowMismatch",
            Error::Infeasible(_) => "Infeasible",
            Error::DualPrimalGap { .. } => "DualPrimalGap",
            Error::EmptyIntersection => "EmptyIntersection",
            Error::UnknownCatalogEntry(_) => "UnknownCatalogEntry",
            Error::InvalidModel(_) => "InvalidModel",
            Error::Unsupported(_) => "Unsupported",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
