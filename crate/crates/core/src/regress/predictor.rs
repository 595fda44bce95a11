use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::heatmap::{decode_heatmap, Heatmap, PolePrediction, DEFAULT_SIGMA, DEFAULT_STRIDE};
use super::hmap::read_hmap;
use crate::error::{Error, Result};
use crate::imagecore::{GrayImage, Point2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    /// Normalized cross-correlation against a bright-disk template.
    Template,
    /// Heatmaps produced elsewhere, read from `<heatmap_dir>/<stem>.hmap`.
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub kind: PredictorKind,
    pub num_poles: usize,
    /// Gaussian width in heatmap cells.
    pub sigma: f64,
    pub stride: u32,
    /// Disk radius of the template, in pixels.
    pub template_radius: f64,
    /// Peaks scoring below this are reported as low confidence.
    pub score_floor: f64,
    pub heatmap_dir: Option<PathBuf>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            kind: PredictorKind::Template,
            num_poles: 4,
            sigma: DEFAULT_SIGMA,
            stride: DEFAULT_STRIDE,
            template_radius: 2.5,
            score_floor: 0.5,
            heatmap_dir: None,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_poles == 0 {
            return Err(Error::InvalidConfig(
                "predictor.num_poles must be >= 1".into(),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig("predictor.sigma must be > 0".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("predictor.stride must be >= 1".into()));
        }
        if !(self.template_radius > 0.0 && self.template_radius < 64.0) {
            return Err(Error::InvalidConfig(
                "predictor.template_radius must be in (0, 64)".into(),
            ));
        }
        if self.kind == PredictorKind::File && self.heatmap_dir.is_none() {
            return Err(Error::InvalidConfig(
                "predictor.heatmap_dir is required for the file predictor".into(),
            ));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn HeatmapPredictor>> {
        self.validate()?;
        Ok(match self.kind {
            PredictorKind::Template => Box::new(TemplatePredictor::new(self)),
            PredictorKind::File => Box::new(FilePredictor {
                dir: self.heatmap_dir.clone().unwrap_or_default(),
                num_poles: self.num_poles,
            }),
        })
    }
}

/// Anything that turns an ROI crop into one heatmap per pole.
pub trait HeatmapPredictor: Send + Sync {
    /// `image_stem` names the source image; predictors backed by files use it
    /// to locate their data.
    fn predict(&self, crop: &GrayImage, image_stem: Option<&str>) -> Result<Vec<Heatmap>>;

    /// Whether channel order carries pole identity. When it does not, decoded
    /// poles are put in left-to-right order.
    fn channels_are_ordered(&self) -> bool;
}

/// Runs the predictor described by `cfg` on an ROI crop.
pub fn predict(
    crop: &GrayImage,
    cfg: &PredictorConfig,
    image_stem: Option<&str>,
) -> Result<Vec<Heatmap>> {
    cfg.build()?.predict(crop, image_stem)
}

/// Decodes every channel and clamps positions to the crop.
pub fn decode_channels(
    channels: &[Heatmap],
    crop_dims: (u32, u32),
    ordered: bool,
) -> Result<Vec<PolePrediction>> {
    let (w, h) = crop_dims;
    let mut preds = channels
        .iter()
        .enumerate()
        .map(|(i, hm)| {
            let mut p = decode_heatmap(hm)?;
            p.position = Point2::new(
                p.position.x.clamp(0.0, w as f64 - 1.0),
                p.position.y.clamp(0.0, h as f64 - 1.0),
            );
            p.pole_index = i;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    if !ordered {
        preds.sort_by(|a, b| {
            a.position
                .x
                .total_cmp(&b.position.x)
                .then(a.position.y.total_cmp(&b.position.y))
        });
        for (i, p) in preds.iter_mut().enumerate() {
            p.pole_index = i;
        }
    }
    Ok(preds)
}

/// Predict and decode in one step.
pub fn predict_poles(
    predictor: &dyn HeatmapPredictor,
    crop: &GrayImage,
    num_poles: usize,
    image_stem: Option<&str>,
) -> Result<Vec<PolePrediction>> {
    let channels = predictor.predict(crop, image_stem)?;
    if channels.len() != num_poles {
        return Err(Error::ChannelCountMismatch {
            expected: num_poles,
            found: channels.len(),
        });
    }
    decode_channels(&channels, crop.dims(), predictor.channels_are_ordered())
}

pub struct FilePredictor {
    pub dir: PathBuf,
    pub num_poles: usize,
}

impl HeatmapPredictor for FilePredictor {
    fn predict(&self, _crop: &GrayImage, image_stem: Option<&str>) -> Result<Vec<Heatmap>> {
        let stem = image_stem.ok_or_else(|| {
            Error::InvalidArgument("file predictor needs the source image name".into())
        })?;
        let channels = read_hmap(self.dir.join(format!("{stem}.hmap")))?;
        if channels.len() != self.num_poles {
            return Err(Error::ChannelCountMismatch {
                expected: self.num_poles,
                found: channels.len(),
            });
        }
        Ok(channels)
    }

    fn channels_are_ordered(&self) -> bool {
        true
    }
}

/// Baseline predictor: zero-mean NCC with an anti-aliased bright disk,
/// average-pooled to the heatmap stride, then greedy peak extraction.
pub struct TemplatePredictor {
    half: i64,
    /// Zero-mean template, row-major.
    kernel: Vec<f64>,
    kernel_norm: f64,
    num_poles: usize,
    stride: u32,
    suppression_cells: f64,
}

impl TemplatePredictor {
    pub fn new(cfg: &PredictorConfig) -> Self {
        let half = cfg.template_radius.ceil() as i64 + 3;
        let side = (2 * half + 1) as usize;
        let mut raw = Vec::with_capacity(side * side);
        for dy in -half..=half {
            for dx in -half..=half {
                raw.push(disk_coverage(dx as f64, dy as f64, cfg.template_radius));
            }
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let kernel: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let kernel_norm = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            half,
            kernel,
            kernel_norm,
            num_poles: cfg.num_poles,
            stride: cfg.stride,
            suppression_cells: 2.0 * cfg.sigma,
        }
    }

    /// NCC score at every crop pixel, replicate-border sampling.
    pub fn score_map(&self, crop: &GrayImage) -> Vec<f64> {
        let (w, h) = (crop.width() as i64, crop.height() as i64);
        let n = self.kernel.len() as f64;
        let mut out = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                let (mut sum, mut sum2, mut cross) = (0.0, 0.0, 0.0);
                let mut k = 0;
                for dy in -self.half..=self.half {
                    for dx in -self.half..=self.half {
                        let v = crop.get_clamped(x + dx, y + dy) as f64;
                        sum += v;
                        sum2 += v * v;
                        cross += v * self.kernel[k];
                        k += 1;
                    }
                }
                let var = sum2 - sum * sum / n;
                let score = if var > 1e-9 {
                    cross / (var.sqrt() * self.kernel_norm)
                } else {
                    0.0
                };
                out.push(score);
            }
        }
        out
    }

    fn pooled(&self, crop: &GrayImage) -> Result<Heatmap> {
        let (w, h) = crop.dims();
        let scores = dilate(
            &self.score_map(crop),
            w as usize,
            h as usize,
            (self.stride / 2) as usize,
        );
        let s = self.stride;
        let (cw, ch) = (w.div_ceil(s), h.div_ceil(s));
        let mut values = Vec::with_capacity((cw * ch) as usize);
        for v in 0..ch {
            for u in 0..cw {
                let (x0, x1) = (u * s, ((u + 1) * s).min(w));
                let (y0, y1) = (v * s, ((v + 1) * s).min(h));
                let mut acc = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        acc += scores[(y * w + x) as usize];
                    }
                }
                values.push((acc / ((x1 - x0) * (y1 - y0)) as f64) as f32);
            }
        }
        Heatmap::new(cw, ch, s, values)
    }
}

/// Separable max filter with a square window of the given radius.
fn dilate(map: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return map.to_vec();
    }
    let mut rows = vec![0.0; map.len()];
    for y in 0..h {
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(w - 1));
            rows[y * w + x] = map[y * w + x0..=y * w + x1]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut out = vec![0.0; map.len()];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(h - 1));
        for x in 0..w {
            out[y * w + x] = (y0..=y1)
                .map(|yy| rows[yy * w + x])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    out
}

impl HeatmapPredictor for TemplatePredictor {
    fn predict(&self, crop: &GrayImage, _image_stem: Option<&str>) -> Result<Vec<Heatmap>> {
        let shared = self.pooled(crop)?;
        let floor = shared
            .values()
            .iter()
            .copied()
            .fold(f32::INFINITY, f32::min);
        let mut current = shared;
        let mut out = Vec::with_capacity(self.num_poles);
        for _ in 0..self.num_poles {
            out.push(current.clone());
            let (pu, pv) = current.argmax().ok_or(Error::EmptyHeatmap)?;
            let r = self.suppression_cells;
            for v in 0..current.height() {
                for u in 0..current.width() {
                    let d = (u as f64 - pu as f64).hypot(v as f64 - pv as f64);
                    if d <= r {
                        current.set(u, v, floor);
                    }
                }
            }
        }
        Ok(out)
    }

    fn channels_are_ordered(&self) -> bool {
        false
    }
}

/// Fraction of the pixel square at `(cx, cy)` covered by a disk of `radius`
/// centered at the origin, 4x4 supersampled.
pub(crate) fn disk_coverage(cx: f64, cy: f64, radius: f64) -> f64 {
    let mut inside = 0;
    for j in 0..4 {
        for i in 0..4 {
            let x = cx - 0.375 + 0.25 * i as f64;
            let y = cy - 0.375 + 0.25 * j as f64;
            if x * x + y * y <= radius * radius {
                inside += 1;
            }
        }
    }
    inside as f64 / 16.0
}
