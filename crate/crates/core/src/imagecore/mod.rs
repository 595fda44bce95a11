//! Grayscale rasters, sub-pixel points, patch extraction and file I/O.
//!
//! Pixel `(x, y)` has its center at coordinate `(x, y)`; an image of width `W`
//! therefore spans `[-0.5, W - 0.5]` horizontally. All modules share this
//! convention.

mod io;
mod warp;

pub use io::{load_image, save_png};
pub use warp::{affine_warp, AffineParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sub-pixel position: `x` is the column, `y` the row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point2 {
        Point2::new(self.x + dx, self.y + dy)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Nearest integer pixel, rounding half away from zero.
    pub fn to_pixel(&self) -> (i64, i64) {
        (self.x.round() as i64, self.y.round() as i64)
    }
}

/// Row-major 8-bit grayscale image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::DimMismatch(format!(
                "{width}x{height} image needs {expected} pixels, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image filled with a single value.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = value;
    }

    /// Pixel lookup with replicate-border clamping.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let cx = x.clamp(0, self.width as i64 - 1) as u32;
        let cy = y.clamp(0, self.height as i64 - 1) as u32;
        self.get(cx, cy)
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.data[start..start + w]
    }

    /// Copy of the rectangle `[left, right) x [top, bottom)`.
    pub fn crop(&self, left: u32, top: u32, right: u32, bottom: u32) -> Result<GrayImage> {
        if left >= right || top >= bottom || right > self.width || bottom > self.height {
            return Err(Error::DimMismatch(format!(
                "crop [{left},{right})x[{top},{bottom}) outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(((right - left) * (bottom - top)) as usize);
        for y in top..bottom {
            data.extend_from_slice(&self.row(y)[left as usize..right as usize]);
        }
        GrayImage::new(right - left, bottom - top, data)
    }
}

/// Square `(2h+1)^2` patch around `center`, rounded to the nearest pixel, with
/// replicate-border sampling.
pub fn extract_patch(img: &GrayImage, center: Point2, half_size: u32) -> GrayImage {
    let (cx, cy) = center.to_pixel();
    let h = half_size as i64;
    let side = 2 * half_size + 1;
    let mut data = Vec::with_capacity((side * side) as usize);
    for dy in -h..=h {
        for dx in -h..=h {
            data.push(img.get_clamped(cx + dx, cy + dy));
        }
    }
    GrayImage {
        width: side,
        height: side,
        data,
    }
}
