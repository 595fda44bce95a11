//! Oriented FAST corners ranked by Harris response.

mod fast;
mod harris;
mod orientation;

pub use fast::{
    fast_candidates, fast_detect, fast_score, is_corner, non_max_suppression, FastCandidate,
    ARC_LENGTH, BORDER, CIRCLE,
};
pub use harris::{harris_response, HARRIS_K};
pub use orientation::{orientation, DEFAULT_RADIUS as ORIENTATION_RADIUS};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{GrayImage, Point2};

pub const DEFAULT_THRESHOLD: u8 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerPoint {
    #[serde(flatten)]
    pub position: Point2,
    pub response: f64,
    pub orientation: f64,
}

/// Corners sorted by descending response, with the dimensions of the image
/// they came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "CornerFile", into = "CornerFile")]
pub struct CornerSet {
    pub corners: Vec<CornerPoint>,
    pub source_dims: (u32, u32),
}

/// On-disk layout of a corner set.
#[derive(Clone, Serialize, Deserialize)]
struct CornerFile {
    width: u32,
    height: u32,
    corners: Vec<CornerPoint>,
}

impl From<CornerFile> for CornerSet {
    fn from(f: CornerFile) -> Self {
        CornerSet {
            corners: f.corners,
            source_dims: (f.width, f.height),
        }
    }
}

impl From<CornerSet> for CornerFile {
    fn from(s: CornerSet) -> Self {
        CornerFile {
            width: s.source_dims.0,
            height: s.source_dims.1,
            corners: s.corners,
        }
    }
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CornerPoint> {
        self.corners.iter()
    }

    pub fn positions(&self) -> impl Iterator<Item = Point2> + '_ {
        self.corners.iter().map(|c| c.position)
    }

    /// Corners inside `[left, right) x [top, bottom)`, shifted into that
    /// rectangle's frame. Ordering is preserved.
    pub fn to_frame(&self, left: u32, top: u32, right: u32, bottom: u32) -> CornerSet {
        let corners = self
            .corners
            .iter()
            .filter(|c| {
                let p = c.position;
                p.x >= left as f64 && p.x < right as f64 && p.y >= top as f64 && p.y < bottom as f64
            })
            .map(|c| CornerPoint {
                position: c.position.offset(-(left as f64), -(top as f64)),
                ..*c
            })
            .collect();
        CornerSet {
            corners,
            source_dims: (right - left, bottom - top),
        }
    }

    /// Keeps the first `n` corners.
    pub fn truncated(&self, n: usize) -> CornerSet {
        CornerSet {
            corners: self.corners.iter().take(n).copied().collect(),
            source_dims: self.source_dims,
        }
    }
}

/// Descending response, then row-major position.
pub(crate) fn rank_order(a: &CornerPoint, b: &CornerPoint) -> Ordering {
    b.response
        .total_cmp(&a.response)
        .then(a.position.y.total_cmp(&b.position.y))
        .then(a.position.x.total_cmp(&b.position.x))
}

/// FAST detection, Harris scoring and orientation, keeping the best `n`.
pub fn detect_top_n(img: &GrayImage, n: usize, threshold: u8) -> Result<CornerSet> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "corner count must be at least 1".into(),
        ));
    }
    let survivors = fast_detect(img, threshold)?;
    let mut corners: Vec<CornerPoint> = survivors
        .iter()
        .map(|c| {
            let (x, y) = (c.x as i64, c.y as i64);
            CornerPoint {
                position: Point2::new(c.x as f64, c.y as f64),
                // survivors sit 3 px from the border; the 4th ring is clamped
                response: harris::harris_clamped(img, x, y),
                orientation: orientation(img, x, y, ORIENTATION_RADIUS),
            }
        })
        .collect();
    corners.sort_by(rank_order);
    corners.truncate(n);
    Ok(CornerSet {
        corners,
        source_dims: img.dims(),
    })
}
