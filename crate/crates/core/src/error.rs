use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("insufficient transport volume: total demand {demand} exceeds buses x trips x capacity = {volume}")]
    InsufficientVolume { demand: i64, volume: i64 },
    #[error("capacity must be at least 1, got {0}")]
    InvalidCapacity(i64),
    #[error("value {value} does not fit in {width} bits")]
    BitOutOfRange { value: i64, width: usize },
    #[error("product upper bound must be positive")]
    NonPositiveBound,
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed plan: {0}")]
    MalformedPlan(String),
    #[error("MPS line {line}: {msg}")]
    Mps { line: usize, msg: String },
    #[error("instance file, {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("plan file line {line}: {msg}")]
    PlanFile { line: usize, msg: String },
    #[error("search space too large for exhaustive enumeration: {0}")]
    SearchSpaceTooLarge(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
