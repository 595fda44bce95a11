//! Electrode region estimate from the corner centroid and the row-sum profile.

use serde::{Deserialize, Serialize};

use crate::corner::CornerSet;
use crate::error::{Error, Result};
use crate::imagecore::{GrayImage, Point2};

/// Per-row intensity sums.
#[derive(Clone, Debug, PartialEq)]
pub struct RowProfile {
    pub sums: Vec<f64>,
}

impl RowProfile {
    pub fn height(&self) -> usize {
        self.sums.len()
    }

    fn dynamic_range(&self) -> f64 {
        let (lo, hi) = self
            .sums
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            });
        hi - lo
    }
}

/// Axis-aligned crop, half-open: rows `[top, bottom)`, columns `[left, right)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub top: u32,
    pub bottom: u32,
    pub left: u32,
    pub right: u32,
}

impl Roi {
    pub fn width(&self) -> u32 {
        self.right - self.left
    }

    pub fn height(&self) -> u32 {
        self.bottom - self.top
    }

    pub fn diagonal(&self) -> f64 {
        (self.width() as f64).hypot(self.height() as f64)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.left as f64
            && p.x < self.right as f64
            && p.y >= self.top as f64
            && p.y < self.bottom as f64
    }

    /// Smallest distance from `p` to any edge of the ROI (negative outside).
    pub fn margin(&self, p: Point2) -> f64 {
        let m = [
            p.x - self.left as f64,
            self.right as f64 - 1.0 - p.x,
            p.y - self.top as f64,
            self.bottom as f64 - 1.0 - p.y,
        ];
        m.into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_valid_for(&self, width: u32, height: u32) -> bool {
        self.top < self.bottom
            && self.bottom <= height
            && self.left < self.right
            && self.right <= width
    }

    pub fn to_local(&self, p: Point2) -> Point2 {
        p.offset(-(self.left as f64), -(self.top as f64))
    }

    pub fn to_global(&self, p: Point2) -> Point2 {
        p.offset(self.left as f64, self.top as f64)
    }

    pub fn crop(&self, img: &GrayImage) -> Result<GrayImage> {
        img.crop(self.left, self.top, self.right, self.bottom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoiParams {
    /// Gradient threshold as a fraction of the profile's dynamic range.
    pub tau: f64,
    pub delta_a: u32,
    pub delta_b: u32,
    /// Half-width of the ROI per unit of ROI height.
    pub lambda: f64,
}

impl Default for RoiParams {
    fn default() -> Self {
        Self {
            tau: 0.15,
            delta_a: 1,
            delta_b: 1,
            lambda: 0.75,
        }
    }
}

impl RoiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "roi.tau must be in (0, 1), got {}",
                self.tau
            )));
        }
        if self.delta_a == 0 || self.delta_b == 0 {
            return Err(Error::InvalidConfig(
                "roi.delta_a and roi.delta_b must be >= 1".into(),
            ));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "roi.lambda must be > 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Upper and lower pointer positions. `degenerate` is set when the profile is
/// flat and the full height was returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowBounds {
    pub top: u32,
    pub bottom: u32,
    pub degenerate: bool,
}

pub fn cluster_center(corners: &CornerSet) -> Result<Point2> {
    if corners.is_empty() {
        return Err(Error::EmptyCornerSet);
    }
    let n = corners.len() as f64;
    let (sx, sy) = corners
        .positions()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Ok(Point2::new(sx / n, sy / n))
}

pub fn row_profile(img: &GrayImage) -> RowProfile {
    let sums = (0..img.height())
        .map(|y| img.row(y).iter().map(|&v| v as f64).sum())
        .collect();
    RowProfile { sums }
}

/// Two-pointer scan of the row profile toward `y0`.
///
/// The upper pointer walks `0, db, 2db, ...` and stops at the first row whose
/// forward difference exceeds `tau * range`; the lower pointer walks
/// `H-1, H-1-da, ...` using the backward difference. A pointer that reaches
/// `y0` stops there.
pub fn scan_bounds(profile: &RowProfile, y0: u32, params: &RoiParams) -> Result<RowBounds> {
    params.validate()?;
    let h = profile.height();
    if h == 0 || y0 as usize >= h {
        return Err(Error::InvalidArgument(format!(
            "center row {y0} outside profile of height {h}"
        )));
    }
    let range = profile.dynamic_range();
    if range <= 0.0 {
        log::warn!("row profile is flat; using full image height");
        return Ok(RowBounds {
            top: 0,
            bottom: h as u32,
            degenerate: true,
        });
    }
    let limit = params.tau * range;
    let s = &profile.sums;
    let y0 = y0 as usize;

    let mut top = 0usize;
    while top < y0 && (s[top + 1] - s[top]).abs() <= limit {
        top += params.delta_b as usize;
    }
    let mut bottom = h - 1;
    while bottom > y0 && (s[bottom] - s[bottom - 1]).abs() <= limit {
        bottom = bottom.saturating_sub(params.delta_a as usize);
    }
    let top = top.min(y0);
    let bottom = bottom.max(y0 + 1);
    Ok(RowBounds {
        top: top as u32,
        bottom: bottom as u32,
        degenerate: false,
    })
}

/// Horizontal extent `x0 +- lambda * |bottom - top|`, rounded and clamped.
pub fn roi_from_bounds(
    x0: f64,
    top: u32,
    bottom: u32,
    lambda: f64,
    dims: (u32, u32),
) -> Result<Roi> {
    if top >= bottom {
        return Err(Error::InvalidArgument(format!(
            "top {top} must be above bottom {bottom}"
        )));
    }
    let (w, h) = dims;
    let half = lambda * (bottom - top) as f64;
    let left = (x0 - half).round().clamp(0.0, w as f64) as u32;
    let right = (x0 + half).round().clamp(0.0, w as f64) as u32;
    let roi = Roi {
        top: top.min(h),
        bottom: bottom.min(h),
        left,
        right,
    };
    if roi.left >= roi.right || roi.top >= roi.bottom {
        return Err(Error::DegenerateRoi(format!("{roi:?} has zero area")));
    }
    Ok(roi)
}

/// Result of the full ROI estimate, with intermediate values kept for
/// reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoiEstimate {
    pub roi: Roi,
    pub center: Point2,
    pub bounds: RowBounds,
}

pub fn estimate_roi(
    img: &GrayImage,
    corners: &CornerSet,
    params: &RoiParams,
) -> Result<RoiEstimate> {
    let center = cluster_center(corners)?;
    let profile = row_profile(img);
    let y0 = center.y.round().clamp(0.0, img.height() as f64 - 1.0) as u32;
    let bounds = scan_bounds(&profile, y0, params)?;
    let roi = roi_from_bounds(
        center.x,
        bounds.top,
        bounds.bottom,
        params.lambda,
        img.dims(),
    )?;
    Ok(RoiEstimate {
        roi,
        center,
        bounds,
    })
}
