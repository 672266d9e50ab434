use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{field} = {value} is not a power of two")]
    NonPowerOfTwo { field: &'static str, value: usize },
    #[error("binomial coefficient C({n}, {k}) overflows 128 bits")]
    Overflow { n: usize, k: usize },
    #[error("overhead tax is negative: EType II {etype2} bits < Type I {type1} bits")]
    NegativeTax { etype2: u64, type1: u64 },
    #[error("invalid coefficient at ({row}, {col})")]
    InvalidCoefficient { row: usize, col: usize },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("invalid PMI: {0}")]
    InvalidPmi(String),
    #[error("bit string codec: {0}")]
    Codec(String),
    #[error("unknown channel profile kind `{0}`")]
    UnknownKind(String),
    #[error("realization carries no cluster state")]
    MissingState,
    #[error("baseline spectral efficiency {0} is zero")]
    BaselineZero(f64),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("models do not share one reservoir")]
    ReservoirMismatch,
    #[error("reservoir spectrum is degenerate")]
    DegenerateSpectrum,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
