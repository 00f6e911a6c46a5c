use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report. Variant names follow the error
/// vocabulary used in reports (`NON_INVERTIBLE_ORDER`, `SPLIT_PRIME_IN_S`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("NON_INVERTIBLE_ORDER: p={p} divides the group order {order}")]
    NonInvertibleOrder { p: u64, order: u64 },
    #[error("UNREALIZABLE_CHARACTER: order {order} cannot be realized with p={p}")]
    UnrealizableCharacter { order: u64, p: u64 },
    #[error("ODD_CHARACTER: {0}")]
    OddCharacter(String),
    #[error("NOT_A_GROUP: {0}")]
    NotAGroup(String),
    #[error("BAD_RESIDUE: {a} is not a unit modulo {f}")]
    BadResidue { a: i64, f: u64 },
    #[error("DEGENERATE_RESIDUE: a = +-1 mod {f}")]
    DegenerateResidue { f: u64 },
    #[error("BAD_LEVEL_PRIME: {q} ({reason})")]
    BadLevelPrime { q: u64, reason: String },
    #[error("LEVEL_MISMATCH: {0}")]
    LevelMismatch(String),
    #[error("BOUND_EXCEEDED: {what} = {value} exceeds cap {cap}")]
    BoundExceeded { what: String, value: u64, cap: u64 },
    #[error("DEPENDENT_INPUT: {0}")]
    DependentInput(String),
    #[error("RANK_MISMATCH: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("UNSUPPORTED: {0}")]
    Unsupported(String),
    #[error("EVEN_CHARACTER: L(0, psi) vanishes for even psi")]
    EvenCharacter,
    #[error("PRECISION_UNREACHED: {0}")]
    PrecisionUnreached(String),
    #[error("SPLIT_PRIME_IN_S: {q} splits completely")]
    SplitPrimeInS { q: u64 },
    #[error("REGULATOR_MISMATCH: {0}")]
    RegulatorMismatch(String),
    #[error("NOT_RATIONAL: {0}")]
    NotRational(String),
    #[error("ODD_INDUCED_CHARACTER: {0}")]
    OddInducedCharacter(String),
    #[error("RAMIFIED_P: {p} ramifies")]
    RamifiedP { p: u64 },
    #[error("NO_DEGREE_ONE_PLACE above {p}")]
    NoDegreeOnePlace { p: u64 },
    #[error("H_L_FAILURE: {0}")]
    HLFailure(String),
    #[error("PRECISION_TOO_LOW: {0}")]
    PrecisionTooLow(String),
    #[error("NOT_G_FIXED: {0}")]
    NotGFixed(String),
    #[error("DESCENT_FAILURE: {0}")]
    DescentFailure(String),
    #[error("P_EQUALS_TWO")]
    PEqualsTwo,
    #[error("CHI_ODD")]
    ChiOdd,
    #[error("INVALID_CONFIG: {0}")]
    InvalidConfig(String),
    #[error("CORRUPT_RECORD: {0}")]
    CorruptRecord(String),
    #[error("IO: {0}")]
    Io(String),
}

impl Error {
    /// Short machine name used in report records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonInvertibleOrder { .. } => "NON_INVERTIBLE_ORDER",
            Error::UnrealizableCharacter { .. } => "UNREALIZABLE_CHARACTER",
            Error::OddCharacter(_) => "ODD_CHARACTER",
            Error::NotAGroup(_) => "NOT_A_GROUP",
            Error::BadResidue { .. } => "BAD_RESIDUE",
            Error::DegenerateResidue { .. } => "DEGENERATE_RESIDUE",
            Error::BadLevelPrime { .. } => "BAD_LEVEL_PRIME",
            Error::LevelMismatch(_) => "LEVEL_MISMATCH",
            Error::BoundExceeded { .. } => "BOUND_EXCEEDED",
            Error::DependentInput(_) => "DEPENDENT_INPUT",
            Error::RankMismatch { .. } => "RANK_MISMATCH",
            Error::Unsupported(_) => "UNSUPPORTED",
            Error::EvenCharacter => "EVEN_CHARACTER",
            Error::PrecisionUnreached(_) => "PRECISION_UNREACHED",
            Error::SplitPrimeInS { .. } => "SPLIT_PRIME_IN_S",
            Error::RegulatorMismatch(_) => "REGULATOR_MISMATCH",
            Error::NotRational(_) => "NOT_RATIONAL",
            Error::OddInducedCharacter(_) => "ODD_INDUCED_CHARACTER",
            Error::RamifiedP { .. } => "RAMIFIED_P",
            Error::NoDegreeOnePlace { .. } => "NO_DEGREE_ONE_PLACE",
            Error::HLFailure(_) => "H_L_FAILURE",
            Error::PrecisionTooLow(_) => "PRECISION_TOO_LOW",
            Error::NotGFixed(_) => "NOT_G_FIXED",
            Error::DescentFailure(_) => "DESCENT_FAILURE",
            Error::PEqualsTwo => "P_EQUALS_TWO",
            Error::ChiOdd => "CHI_ODD",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::CorruptRecord(_) => "CORRUPT_RECORD",
            Error::Io(_) => "IO",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
