use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::Point2;

pub const DEFAULT_STRIDE: u32 = 4;
pub const DEFAULT_SIGMA: f64 = 2.0;

/// Dense score map at `stride` pixels per cell.
///
/// Cell `(u, v)` is centered on pixel coordinate
/// `((u + 0.5) * stride - 0.5, (v + 0.5) * stride - 0.5)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    width: u32,
    height: u32,
    stride: u32,
    values: Vec<f32>,
}

impl Heatmap {
    pub fn new(width: u32, height: u32, stride: u32, values: Vec<f32>) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidArgument("heatmap stride must be >= 1".into()));
        }
        if values.len() != width as usize * height as usize {
            return Err(Error::DimMismatch(format!(
                "{width}x{height} heatmap needs {} values, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::CorruptData(
                "heatmap contains non-finite values".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            stride,
            values,
        })
    }

    pub fn zeros(width: u32, height: u32, stride: u32) -> Result<Self> {
        Self::new(
            width,
            height,
            stride,
            vec![0.0; width as usize * height as usize],
        )
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> f32 {
        self.values[v as usize * self.width as usize + u as usize]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, value: f32) {
        let w = self.width as usize;
        self.values[v as usize * w + u as usize] = value;
    }

    /// Continuous cell coordinate of a pixel position.
    pub fn pixel_to_cell(&self, p: Point2) -> (f64, f64) {
        let s = self.stride as f64;
        ((p.x + 0.5) / s - 0.5, (p.y + 0.5) / s - 0.5)
    }

    /// Pixel position of a continuous cell coordinate.
    pub fn cell_to_pixel(&self, u: f64, v: f64) -> Point2 {
        let s = self.stride as f64;
        Point2::new((u + 0.5) * s - 0.5, (v + 0.5) * s - 0.5)
    }

    /// First maximum in row-major order.
    pub fn argmax(&self) -> Option<(u32, u32)> {
        let mut best: Option<(usize, f32)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| {
            (
                (i % self.width as usize) as u32,
                (i / self.width as usize) as u32,
            )
        })
    }
}

/// Decoded keypoint in ROI pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolePrediction {
    pub position: Point2,
    pub score: f64,
    pub pole_index: usize,
}

/// Gaussian target of width `sigma` cells centered on `target` (ROI pixels),
/// sized `ceil(W / stride) x ceil(H / stride)`.
pub fn render_gaussian(
    target: Point2,
    dims: (u32, u32),
    stride: u32,
    sigma: f64,
) -> Result<Heatmap> {
    let (w, h) = dims;
    if !(target.x >= 0.0 && target.y >= 0.0 && target.x < w as f64 && target.y < h as f64) {
        return Err(Error::TargetOutOfBounds {
            x: target.x,
            y: target.y,
            width: w,
            height: h,
        });
    }
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma must be > 0, got {sigma}"
        )));
    }
    let mut hm = Heatmap::zeros(w.div_ceil(stride), h.div_ceil(stride), stride)?;
    let (cu, cv) = hm.pixel_to_cell(target);
    let denom = 2.0 * sigma * sigma;
    for v in 0..hm.height {
        for u in 0..hm.width {
            let d2 = (u as f64 - cu).powi(2) + (v as f64 - cv).powi(2);
            hm.set(u, v, (-d2 / denom).exp() as f32);
        }
    }
    Ok(hm)
}

pub fn mse_loss(pred: &Heatmap, target: &Heatmap) -> Result<f64> {
    if pred.width != target.width || pred.height != target.height {
        return Err(Error::DimMismatch(format!(
            "{}x{} vs {}x{}",
            pred.width, pred.height, target.width, target.height
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyHeatmap);
    }
    let sum: f64 = pred
        .values
        .iter()
        .zip(&target.values)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / pred.values.len() as f64)
}

/// Argmax cell refined by a quarter cell toward the larger horizontal and
/// vertical neighbor. Refinement along an axis is skipped at the map border.
pub fn decode_heatmap(hm: &Heatmap) -> Result<PolePrediction> {
    let (u, v) = hm.argmax().ok_or(Error::EmptyHeatmap)?;
    let mut du = 0.0;
    let mut dv = 0.0;
    if u > 0 && u + 1 < hm.width {
        du = quarter_step(hm.get(u - 1, v), hm.get(u + 1, v));
    }
    if v > 0 && v + 1 < hm.height {
        dv = quarter_step(hm.get(u, v - 1), hm.get(u, v + 1));
    }
    Ok(PolePrediction {
        position: hm.cell_to_pixel(u as f64 + du, v as f64 + dv),
        score: hm.get(u, v) as f64,
        pole_index: 0,
    })
}

/// Plain argmax decoding at the cell center.
pub fn decode_argmax(hm: &Heatmap) -> Result<PolePrediction> {
    let (u, v) = hm.argmax().ok_or(Error::EmptyHeatmap)?;
    Ok(PolePrediction {
        position: hm.cell_to_pixel(u as f64, v as f64),
        score: hm.get(u, v) as f64,
        pole_index: 0,
    })
}

fn quarter_step(before: f32, after: f32) -> f64 {
    if after > before {
        0.25
    } else if after < before {
        -0.25
    } else {
        0.0
    }
}
