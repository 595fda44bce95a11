//! Pipeline configuration, read from TOML.
//!
//! ```toml
//! [corner]
//! n = 512
//! threshold = 20
//!
//! [roi]
//! tau = 0.15
//! delta_a = 1
//! delta_b = 1
//! lambda = 0.75
//!
//! [predictor]
//! kind = "template"   # or "file", with heatmap_dir = "..."
//! num_poles = 4
//! sigma = 2.0
//! stride = 4
//! template_radius = 2.5
//! score_floor = 0.5
//!
//! [correction]
//! delta = 8.0
//! patch_half_size = 7
//! bins = 16
//! min_confidence = 0.1
//! pairing = "self_weighted"
//!
//! [eval]
//! thetas = [0.005, 0.01]
//! ```
//!
//! Every key is optional; missing keys take the defaults shown.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corner::DEFAULT_THRESHOLD;
use crate::correct::CorrectionParams;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_THETAS;
use crate::regress::PredictorConfig;
use crate::roi::RoiParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CornerConfig {
    /// Number of corners kept after ranking.
    pub n: usize,
    /// FAST intensity threshold.
    pub threshold: u8,
}

impl Default for CornerConfig {
    fn default() -> Self {
        Self {
            n: 512,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub thetas: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thetas: DEFAULT_THETAS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub corner: CornerConfig,
    pub roi: RoiParams,
    pub predictor: PredictorConfig,
    pub correction: CorrectionParams,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::InvalidConfig(format!(
                "config file {} not found",
                path.display()
            )));
        }
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.corner.n == 0 {
            return Err(Error::InvalidConfig("corner.n must be >= 1".into()));
        }
        if self.corner.threshold == 0 {
            return Err(Error::InvalidConfig(
                "corner.threshold must be in [1, 255]".into(),
            ));
        }
        self.roi.validate()?;
        self.predictor.validate()?;
        self.correction.validate()?;
        if self.eval.thetas.is_empty() || self.eval.thetas.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(Error::InvalidConfig(
                "eval.thetas must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }
}
