use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error(transparent)]
    Bell(#[from] BellError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("state is not normalized: squared norm {norm_sqr}")]
    Unnormalized { norm_sqr: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(f64),
}

/// A configuration problem, tagged with the dotted path of the offending field.
#[derive(Debug, Error, PartialEq)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PostprocessError {
    #[error("key is empty")]
    EmptyKey,
    #[error("key lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sample fraction {0} outside (0, 1)")]
    SampleFraction(f64),
    #[error("no extractable key: length {len} does not exceed bound {bound} + margin {margin}")]
    NoExtractableKey { len: usize, bound: usize, margin: usize },
    #[error("subset index {index} out of range for key of length {len}")]
    SubsetIndex { index: usize, len: usize },
    #[error("stage cannot move backwards from {from} to {to}")]
    StageOrder { from: String, to: String },
    #[error("invalid block schedule: {0}")]
    Schedule(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum BellError {
    #[error("no counts recorded for setting pair ({alice}, {bob})")]
    EmptySettingPair { alice: f64, bob: f64 },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("correlation {0} outside [-1, 1]")]
    Correlation(f64),
    #[error("no two setting pairs share a setting; marginals cannot be compared")]
    NoSharedSetting,
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("sequence `{name}` has length {got}, expected {expected}")]
    LengthMismatch {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("error slot {slot} outside 1..={len}")]
    SlotOutOfRange { slot: usize, len: usize },
    #[error("invalid symbol {symbol:?} in `{name}`")]
    Symbol { name: &'static str, symbol: char },
    #[error("replay needs at least one slot")]
    Empty,
}
