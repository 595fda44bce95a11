//! Pole localization in cell images.
//!
//! Corners from FAST-9 ranked by Harris response locate the spindle region,
//! heatmap regression predicts the poles inside it, and a histogram-similarity
//! fusion with nearby corners refines each prediction.

pub mod config;
pub mod corner;
pub mod correct;
pub mod error;
pub mod eval;
pub mod imagecore;
pub mod overlay;
pub mod pipeline;
pub mod regress;
pub mod roi;
pub mod synthgen;

pub use config::PipelineConfig;
pub use corner::{detect_top_n, CornerPoint, CornerSet};
pub use error::{Error, ErrorKind, Result};
pub use imagecore::{GrayImage, Point2};
pub use roi::{estimate_roi, Roi, RoiParams};
