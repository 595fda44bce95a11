use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

pub const HARRIS_K: f64 = 0.04;
/// Half-width of the 7x7 accumulation window.
pub const WINDOW_HALF: i64 = 3;
/// Minimum distance from the border for an unclamped evaluation.
pub const MIN_MARGIN: i64 = WINDOW_HALF + 1;

#[inline]
fn sobel(img: &GrayImage, x: i64, y: i64) -> (f64, f64) {
    let p = |dx: i64, dy: i64| img.get_clamped(x + dx, y + dy) as f64;
    let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
    let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
    (gx, gy)
}

/// `det(M) - k trace(M)^2` with replicate-border sampling, valid anywhere.
pub(crate) fn harris_clamped(img: &GrayImage, x: i64, y: i64) -> f64 {
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for dy in -WINDOW_HALF..=WINDOW_HALF {
        for dx in -WINDOW_HALF..=WINDOW_HALF {
            let (gx, gy) = sobel(img, x + dx, y + dy);
            sxx += gx * gx;
            syy += gy * gy;
            sxy += gx * gy;
        }
    }
    let det = sxx * syy - sxy * sxy;
    let trace = sxx + syy;
    det - HARRIS_K * trace * trace
}

/// Harris measure from Sobel gradients over a uniform 7x7 window.
pub fn harris_response(img: &GrayImage, x: i64, y: i64) -> Result<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    if x < MIN_MARGIN || y < MIN_MARGIN || x >= w - MIN_MARGIN || y >= h - MIN_MARGIN {
        return Err(Error::OutOfBounds { x, y });
    }
    Ok(harris_clamped(img, x, y))
}
