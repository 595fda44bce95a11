use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt data: {0}")]
    CorruptData(String),
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("pixel ({x}, {y}) is too close to the image border")]
    OutOfBounds { x: i64, y: i64 },
    #[error("corner set is empty")]
    EmptyCornerSet,
    #[error("degenerate ROI: {0}")]
    DegenerateRoi(String),
    #[error("target ({x}, {y}) lies outside the {width}x{height} frame")]
    TargetOutOfBounds {
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("heatmap is empty")]
    EmptyHeatmap,
    #[error("missing heatmap file: {0}")]
    MissingHeatmapFile(PathBuf),
    #[error("heatmap channel count mismatch: expected {expected}, found {found}")]
    ChannelCountMismatch { expected: usize, found: usize },
    #[error("no pole positions supplied for the reference feature")]
    NoPoles,
    #[error("histogram bin count mismatch: {left} vs {right}")]
    BinMismatch { left: usize, right: usize },
    #[error("both fusion weights are zero")]
    ZeroWeights,
    #[error("result set is empty")]
    EmptyResults,
    #[error("reports use different thresholds")]
    ThetaMismatch,
    #[error("sample id mismatch: {0}")]
    IdMismatch(String),
    #[error("infeasible cell spec: {0}")]
    SpecInfeasible(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}

/// Coarse failure classes, used for process exit codes and C error codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::Io(_) | Error::Image(_) => ErrorKind::Data,
            Error::ZeroWeights => ErrorKind::Internal,
            _ => ErrorKind::Data,
        }
    }
}
