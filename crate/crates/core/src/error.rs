use thiserror::Error;

/// Errors raised by estimators, models and the simulation machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DrsError {
    #[error("table is empty: x11 + x10 + x01 must be positive")]
    EmptyTable,

    #[error("negative count {value} in cell {cell}")]
    NegativeCount { cell: &'static str, value: i64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dependence fraction alpha = 1 has no M_tb counterpart (phi diverges)")]
    DegenerateDependence,

    #[error("value {value} outside (0, 1): {context}")]
    OutOfRange { value: f64, context: String },

    #[error("population size {n} for stratum {stratum} is below the observed count {x0}")]
    InfeasibleN { stratum: char, n: f64, x0: u64 },

    #[error("division by zero: {0} is zero")]
    DivisionByZero(String),

    #[error("estimator infeasible: {0}")]
    Infeasible(String),

    #[error("applicability condition violated: {0}")]
    ConditionViolated(String),

    #[error("optimizer did not converge within {iterations} iterations")]
    DidNotConverge { iterations: usize },

    #[error("all {count} replicates failed for {method}")]
    AllReplicatesFailed { method: String, count: usize },

    #[error("all {count} bootstrap resamples failed for {method}")]
    AllResamplesFailed { method: String, count: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl DrsError {
    /// True for errors that mean "this estimator does not apply to these
    /// data" rather than a malformed call.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            DrsError::Infeasible(_)
                | DrsError::ConditionViolated(_)
                | DrsError::DivisionByZero(_)
                | DrsError::InfeasibleN { .. }
                | DrsError::DidNotConverge { .. }
                | DrsError::AllReplicatesFailed { .. }
                | DrsError::AllResamplesFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, DrsError>;
