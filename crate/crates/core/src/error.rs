use thiserror::Error;

pub type Result<T, E = RepairError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepairError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid metric: {0}")]
    Metric(String),

    #[error("locked cell `{cell}` was moved")]
    LockedCellMoved { cell: String },

    #[error("oracle budget exceeded: enumeration needs {required} assignments, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    /// The request is well-formed but outside what the chosen solver supports.
    #[error("refused: {0}")]
    Refused(String),

    /// A solver invariant broke. Seeing this means a bug, not bad input.
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl RepairError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        RepairError::Input(msg.into())
    }

    pub(crate) fn metric(msg: impl Into<String>) -> Self {
        RepairError::Metric(msg.into())
    }
}
