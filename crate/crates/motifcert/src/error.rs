use thiserror::Error;

/// Errors raised across the library. Positions are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unbalanced brackets at position {0}")]
    UnbalancedBrackets(usize),
    #[error("invalid character {1:?} at position {0}")]
    InvalidCharacter(usize, char),
    #[error("hairpin closed by ({0}, {1}) has fewer than 3 unpaired bases")]
    InvalidHairpin(usize, usize),
    #[error("invalid pair set: {0}")]
    InvalidPairs(String),
    #[error("parse error on line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("missing parameter section `{0}`")]
    MissingSection(String),
    #[error("position {0} is out of range")]
    OutOfRange(usize),
    #[error("no nucleotide assigned at position {0}")]
    MissingPosition(usize),
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("forced pair ({0}, {1}) is not a canonical pair for this sequence")]
    Infeasible(usize, usize),
    #[error("constraint is inconsistent: {0}")]
    InvalidConstraint(String),
    #[error("loop id {0} does not exist in the host structure")]
    InvalidLoopId(usize),
    #[error("loop set is not contiguous")]
    NotContiguous,
    #[error("motifs belong to different host structures")]
    DifferentHost,
    #[error("malformed motif shape: {0}")]
    MalformedShape(String),
    #[error("node {0} is not a boundary leaf of the motif tree")]
    NotBoundary(usize),
    #[error("enumeration size {0} exceeds the budget")]
    BudgetExceeded(u128),
    #[error("backtracking join over the constraints failed")]
    JoinFailed,
    #[error("enumeration size {0} exceeds the brute-force cap")]
    TooLarge(u128),
    #[error("conflicting verdicts for motif {0}")]
    VerdictConflict(String),
    #[error("incompatible databases: {0}")]
    Incompatible(String),
    #[error("malformed record: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
