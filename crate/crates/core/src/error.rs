use thiserror::Error;

/// Every failure the engine can report. The variant names double as the
/// machine-readable error class printed by the command-line front end.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("polynomial is not homogeneous: found degrees {0} and {1}")]
    NonHomogeneous(u32, u32),
    #[error("polynomial is zero")]
    ZeroPolynomial,
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("integer overflow while {0}")]
    Overflow(&'static str),
    #[error("prime generation failed: {0}")]
    PrimeGeneration(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("tail of the Euler series does not cancel: {0}")]
    TailNotCancelled(String),
    #[error("saturation did not stabilize within {0} levels")]
    NoStabilization(usize),
    #[error("invalid ideal E: {0}")]
    InvalidE(String),
    #[error("negative defect series at degree {0}")]
    NegativeDef(i64),
    #[error("strong freeness contradicted: {0}")]
    NotStronglyFreeEvidence(String),
    #[error("missing geometric input: {0}")]
    MissingGeometry(String),
    #[error("uncertified ranks feed this check: {0}")]
    UncertifiedRanks(String),
    #[error("condition {condition} failed at {witness}")]
    ConditionFailed { condition: String, witness: String },
    #[error("hypothesis {0} failed: {1}")]
    HypothesisFailed(String, String),
    #[error("empty set of local roots")]
    EmptyRz,
    #[error("table too short: {0}")]
    TableTooShort(String),
}

impl Error {
    pub fn class(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "Syntax",
            Error::NonHomogeneous(..) => "NonHomogeneous",
            Error::ZeroPolynomial => "ZeroPolynomial",
            Error::Unsupported(_) => "Unsupported",
            Error::Overflow(_) => "Overflow",
            Error::PrimeGeneration(_) => "PrimeGeneration",
            Error::Inconsistent(_) => "Inconsistent",
            Error::TailNotCancelled(_) => "TailNotCancelled",
            Error::NoStabilization(_) => "NoStabilization",
            Error::InvalidE(_) => "InvalidE",
            Error::NegativeDef(_) => "NegativeDef",
            Error::NotStronglyFreeEvidence(_) => "NotStronglyFreeEvidence",
            Error::MissingGeometry(_) => "MissingGeometry",
            Error::UncertifiedRanks(_) => "UncertifiedRanks",
            Error::ConditionFailed { .. } => "ConditionFailed",
            Error::HypothesisFailed(..) => "HypothesisFailed",
            Error::EmptyRz => "EmptyRz",
            Error::TableTooShort(_) => "TableTooShort",
        }
    }

    /// Input or configuration problems, as opposed to failures of a computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::NonHomogeneous(..)
                | Error::ZeroPolynomial
                | Error::Unsupported(_)
                | Error::PrimeGeneration(_)
                | Error::MissingGeometry(_)
                | Error::EmptyRz
                | Error::InvalidE(_)
                | Error::TableTooShort(_)
        )
    }

    pub fn is_hypothesis(&self) -> bool {
        matches!(
            self,
            Error::ConditionFailed { .. }
                | Error::HypothesisFailed(..)
                | Error::NotStronglyFreeEvidence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
