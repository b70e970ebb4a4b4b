use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A demand that cannot be met, with the cut that blocks it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasibility {
    pub pair: (usize, usize),
    pub required: i64,
    pub achieved: i64,
    /// Source side of a minimum cut witnessing the shortfall.
    pub cut_side: Vec<usize>,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pair ({}, {}) needs {} but the best achievable is {} (cut side {:?})",
            self.pair.0, self.pair.1, self.required, self.achieved, self.cut_side
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("edge {0} would be a self-loop")]
    SelfLoop(usize),
    #[error("edge {0} has negative cost")]
    NegativeCost(usize),
    #[error("edge {0} has zero capacity; delete it instead of splitting")]
    ZeroCapacity(usize),
    #[error("infeasible instance: {0}")]
    Infeasible(Infeasibility),
    #[error("infeasible LP: generated row {row} cannot be satisfied")]
    InfeasibleLp { row: usize },
    #[error("wrong regime: {0}")]
    WrongRegime(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("size guard exceeded: {0}")]
    TooLarge(String),
    #[error("iteration cap of {0} exceeded")]
    IterationCap(usize),
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("iterative rounding stalled: largest undecided value {max_value} is below one half")]
    NoHalfEdge { max_value: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}
