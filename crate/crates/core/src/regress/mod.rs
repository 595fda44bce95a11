//! Heatmap targets, decoding, and the predictor interface.

mod heatmap;
pub mod hmap;
mod predictor;

pub use heatmap::{
    decode_argmax, decode_heatmap, mse_loss, render_gaussian, Heatmap, PolePrediction,
    DEFAULT_SIGMA, DEFAULT_STRIDE,
};
pub(crate) use predictor::disk_coverage;
pub use predictor::{
    decode_channels, predict, predict_poles, FilePredictor, HeatmapPredictor, PredictorConfig,
    PredictorKind, TemplatePredictor,
};
