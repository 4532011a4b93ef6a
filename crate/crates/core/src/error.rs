use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("value outside range: {0}")]
    Range(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("operator not applicable: {0}")]
    NotApplicable(String),
    #[error("unknown query atom {0}")]
    UnknownQuery(String),
    #[error("evidence is inconsistent (all-zero posterior)")]
    InconsistentEvidence,
    #[error("table of {cells} cells exceeds the cell budget of {budget}")]
    CellBudget { cells: usize, budget: usize },
    #[error("program error: {0}")]
    Program(String),
    #[error("{facts} ground probabilistic facts exceed the enumeration cap of {cap}")]
    EnumerationCap { facts: usize, cap: usize },
    #[error("interrupted")]
    Interrupted,
}
