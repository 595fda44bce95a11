//! FAST-9 segment test on the radius-3 Bresenham circle.

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

/// The 16 circle offsets, clockwise from twelve o'clock.
pub const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Minimum contiguous arc length.
pub const ARC_LENGTH: usize = 9;

/// Pixels within this distance of the border are never tested.
pub const BORDER: u32 = 3;

/// Smallest image the detector accepts.
pub const MIN_SIDE: u32 = 2 * BORDER + 1;

/// Pixel that passed the segment test, with its FAST score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FastCandidate {
    pub x: u32,
    pub y: u32,
    pub score: u8,
}

fn circle_values(img: &GrayImage, x: u32, y: u32) -> [i16; 16] {
    let mut ring = [0i16; 16];
    for (slot, &(dx, dy)) in ring.iter_mut().zip(CIRCLE.iter()) {
        *slot = img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32) as i16;
    }
    ring
}

/// Longest circular run of `true` in a 16-element mask, capped at 16.
fn longest_circular_run(mask: u32) -> usize {
    if mask & 0xFFFF == 0xFFFF {
        return 16;
    }
    // doubling the mask unrolls the circle
    let doubled = (mask & 0xFFFF) | ((mask & 0xFFFF) << 16);
    let mut best = 0;
    let mut run = 0;
    for i in 0..32 {
        if doubled >> i & 1 == 1 {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best.min(16)
}

fn passes(center: i16, ring: &[i16; 16], t: i16) -> bool {
    let mut brighter = 0u32;
    let mut darker = 0u32;
    for (i, &v) in ring.iter().enumerate() {
        if v > center + t {
            brighter |= 1 << i;
        } else if v < center - t {
            darker |= 1 << i;
        }
    }
    (brighter.count_ones() as usize >= ARC_LENGTH && longest_circular_run(brighter) >= ARC_LENGTH)
        || (darker.count_ones() as usize >= ARC_LENGTH
            && longest_circular_run(darker) >= ARC_LENGTH)
}

/// Segment test at a single interior pixel.
pub fn is_corner(img: &GrayImage, x: u32, y: u32, t: u8) -> bool {
    let center = img.get(x, y) as i16;
    passes(center, &circle_values(img, x, y), t as i16)
}

/// Largest threshold at which the pixel still passes, found by binary search.
/// The caller guarantees the pixel passes at `t`.
pub fn fast_score(img: &GrayImage, x: u32, y: u32, t: u8) -> u8 {
    let center = img.get(x, y) as i16;
    let ring = circle_values(img, x, y);
    let (mut lo, mut hi) = (t as i16, 255i16);
    // invariant: passes at lo, fails at hi
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if passes(center, &ring, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo as u8
}

fn check_input(img: &GrayImage, t: u8) -> Result<()> {
    if img.width() < MIN_SIDE || img.height() < MIN_SIDE {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: MIN_SIDE,
        });
    }
    if t == 0 {
        return Err(Error::InvalidArgument(
            "FAST threshold must be in [1, 255]".into(),
        ));
    }
    Ok(())
}

/// All pixels passing the segment test, in row-major order, before
/// non-maximum suppression.
pub fn fast_candidates(img: &GrayImage, t: u8) -> Result<Vec<FastCandidate>> {
    check_input(img, t)?;
    let mut out = Vec::new();
    for y in BORDER..img.height() - BORDER {
        for x in BORDER..img.width() - BORDER {
            if is_corner(img, x, y, t) {
                out.push(FastCandidate {
                    x,
                    y,
                    score: fast_score(img, x, y, t),
                });
            }
        }
    }
    Ok(out)
}

/// 3x3 non-maximum suppression on the FAST score. A candidate is dropped when
/// a neighboring candidate scores higher, or scores the same and precedes it
/// in row-major order.
pub fn non_max_suppression(
    candidates: &[FastCandidate],
    width: u32,
    height: u32,
) -> Vec<FastCandidate> {
    let mut scores = vec![-1i16; width as usize * height as usize];
    for c in candidates {
        scores[c.y as usize * width as usize + c.x as usize] = c.score as i16;
    }
    candidates
        .iter()
        .filter(|c| {
            let s = c.score as i16;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (c.x as i64 + dx, c.y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                        continue;
                    }
                    let ns = scores[ny as usize * width as usize + nx as usize];
                    let precedes = dy < 0 || (dy == 0 && dx < 0);
                    if ns > s || (ns == s && precedes) {
                        return false;
                    }
                }
            }
            true
        })
        .copied()
        .collect()
}

/// Segment test followed by 3x3 non-maximum suppression.
pub fn fast_detect(img: &GrayImage, t: u8) -> Result<Vec<FastCandidate>> {
    let candidates = fast_candidates(img, t)?;
    Ok(non_max_suppression(&candidates, img.width(), img.height()))
}
