use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("full box has zero area")]
    ZeroFullArea,

    #[error("non-positive size: {0}")]
    NonPositiveSize(&'static str),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid loss input: {0}")]
    InvalidLossInput(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cost matrix has {got} entries, expected {rows}x{cols}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        got: usize,
    },

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("no ground truth available for evaluation")]
    NoGroundTruth,

    #[error("miss-rate curve is empty")]
    EmptyCurve,

    #[error("occlusion filtering requested but instance {0} has no visible box")]
    MissingVisibleBox(usize),

    #[error("could not place instance {instance} at crowd level {crowd_level} after {attempts} attempts")]
    PlacementFailure {
        instance: usize,
        crowd_level: f64,
        attempts: usize,
    },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("duplicate image id {id:?} on line {line}")]
    DuplicateImageId { id: String, line: usize },

    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` is neither `Clone` nor `PartialEq`; keep its rendering.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(IoError(e.to_string()))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
