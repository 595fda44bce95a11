use std::f64::consts::PI;

use crate::imagecore::GrayImage;

pub const DEFAULT_RADIUS: u32 = 3;

/// Intensity-centroid angle `atan2(m01, m10)` over the disk of `radius`
/// around `(x, y)`, normalized to `(-pi, pi]`. Returns 0 when both moments
/// vanish.
pub fn orientation(img: &GrayImage, x: i64, y: i64, radius: u32) -> f64 {
    let r = radius as i64;
    let (mut m10, mut m01) = (0i64, 0i64);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let v = img.get_clamped(x + dx, y + dy) as i64;
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    if m10 == 0 && m01 == 0 {
        return 0.0;
    }
    let theta = (m01 as f64).atan2(m10 as f64);
    if theta <= -PI {
        theta + 2.0 * PI
    } else {
        theta
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    #[test]
    fn uniform_patch_is_zero() {
        let img = GrayImage::filled(9, 9, 120).unwrap();
        assert_eq!(orientation(&img, 4, 4, 3), 0.0);
    }

    #[test]
    fn ramp_along_x_and_y() {
        let rx = GrayImage::from_fn(9, 9, |x, _| (10 + 20 * x) as u8).unwrap();
        assert!(orientation(&rx, 4, 4, 3).abs() < 1e-6);
        let ry = GrayImage::from_fn(9, 9, |_, y| (10 + 20 * y) as u8).unwrap();
        assert!((orientation(&ry, 4, 4, 3) - FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn descending_ramp_is_pi() {
        let img = GrayImage::from_fn(9, 9, |x, _| (200 - 20 * x) as u8).unwrap();
        assert!((orientation(&img, 4, 4, 3) - PI).abs() < 1e-6);
    }

    #[test]
    fn quarter_turn_equivariance() {
        let img =
            GrayImage::from_fn(9, 9, |x, y| ((x * 37 + y * 11 + x * y * 5) % 251) as u8).unwrap();
        // (x, y) -> (8 - y, x) rotates by +pi/2 in image coordinates
        let rot = GrayImage::from_fn(9, 9, |x, y| img.get(y, 8 - x)).unwrap();
        let a = orientation(&img, 4, 4, 3);
        let b = orientation(&rot, 4, 4, 3);
        let diff = (b - a - FRAC_PI_2).rem_euclid(2.0 * PI);
        assert!(diff < 1e-6 || (2.0 * PI - diff) < 1e-6, "a={a} b={b}");
    }
}
