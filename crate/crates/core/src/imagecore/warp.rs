use serde::{Deserialize, Serialize};

use super::{GrayImage, Point2};
use crate::error::{Error, Result};

/// Similarity transform about the image center, optionally mirrored.
///
/// The forward map is `p' = c + t + R(rotation) * scale * F * (p - c)` where
/// `F` negates x when `reflect_horizontal` is set and `c` is the center of the
/// pixel grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub rotation: f64,
    pub scale: f64,
    pub translation: (f64, f64),
    pub reflect_horizontal: bool,
}

impl Default for AffineParams {
    fn default() -> Self {
        Self {
            rotation: 0.0,
            scale: 1.0,
            translation: (0.0, 0.0),
            reflect_horizontal: false,
        }
    }
}

impl AffineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "affine scale must be positive, got {}",
                self.scale
            )));
        }
        if !self.rotation.is_finite()
            || !self.translation.0.is_finite()
            || !self.translation.1.is_finite()
        {
            return Err(Error::InvalidArgument(
                "affine parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        self.rotation == 0.0
            && self.scale == 1.0
            && self.translation == (0.0, 0.0)
            && !self.reflect_horizontal
    }

    fn forward(&self, p: Point2, center: Point2) -> Point2 {
        let (sin, cos) = self.rotation.sin_cos();
        let mut dx = (p.x - center.x) * self.scale;
        let dy = (p.y - center.y) * self.scale;
        if self.reflect_horizontal {
            dx = -dx;
        }
        Point2::new(
            center.x + self.translation.0 + cos * dx - sin * dy,
            center.y + self.translation.1 + sin * dx + cos * dy,
        )
    }

    fn inverse(&self, p: Point2, center: Point2) -> Point2 {
        let (sin, cos) = self.rotation.sin_cos();
        let dx = p.x - center.x - self.translation.0;
        let dy = p.y - center.y - self.translation.1;
        let mut rx = (cos * dx + sin * dy) / self.scale;
        let ry = (-sin * dx + cos * dy) / self.scale;
        if self.reflect_horizontal {
            rx = -rx;
        }
        Point2::new(center.x + rx, center.y + ry)
    }
}

/// Resamples `img` under `params` (inverse mapping, bilinear, zero fill) and
/// maps `keypoints` through the forward transform.
pub fn affine_warp(
    img: &GrayImage,
    keypoints: &[Point2],
    params: &AffineParams,
) -> Result<(GrayImage, Vec<Point2>)> {
    params.validate()?;
    if params.is_identity() {
        return Ok((img.clone(), keypoints.to_vec()));
    }
    let (w, h) = img.dims();
    let center = Point2::new((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let warped = GrayImage::from_fn(w, h, |x, y| {
        let src = params.inverse(Point2::new(x as f64, y as f64), center);
        bilinear_zero(img, src.x, src.y).round().clamp(0.0, 255.0) as u8
    })?;
    let moved = keypoints
        .iter()
        .map(|&k| params.forward(k, center))
        .collect();
    Ok((warped, moved))
}

/// Bilinear sample where every pixel outside the raster reads as 0.
pub(crate) fn bilinear_zero(img: &GrayImage, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let px = |xi: i64, yi: i64| -> f64 {
        if img.contains(xi, yi) {
            img.get(xi as u32, yi as u32) as f64
        } else {
            0.0
        }
    };
    let top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
    let bottom = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}
