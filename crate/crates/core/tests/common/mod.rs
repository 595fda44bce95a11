//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use polelocate::eval::SampleResult;
use polelocate::imagecore::GrayImage;
use polelocate::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Radius-3 Bresenham circle, clockwise from twelve o'clock.
const RING: [(i64, i64); 16] = [
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

fn longest_wrapped_run(flags: &[bool; 16]) -> usize {
    let mut best = 0;
    for start in 0..16 {
        let mut len = 0;
        while len < 16 && flags[(start + len) % 16] {
            len += 1;
        }
        best = best.max(len);
    }
    best
}

pub fn naive_is_corner(img: &GrayImage, x: u32, y: u32, t: u8) -> bool {
    let c = img.get(x, y) as i32;
    let mut brighter = [false; 16];
    let mut darker = [false; 16];
    for (k, (dx, dy)) in RING.iter().enumerate() {
        let v = img.get((x as i64 + dx) as u32, (y as i64 + dy) as u32) as i32;
        brighter[k] = v > c + t as i32;
        darker[k] = v < c - t as i32;
    }
    longest_wrapped_run(&brighter) >= 9 || longest_wrapped_run(&darker) >= 9
}

/// (x, y, score) of every segment-test corner, row-major, scored by linear scan.
pub fn naive_fast(img: &GrayImage, t: u8) -> Vec<(u32, u32, u8)> {
    let mut out = Vec::new();
    for y in 3..img.height() - 3 {
        for x in 3..img.width() - 3 {
            if naive_is_corner(img, x, y, t) {
                let mut score = t;
                while score < 255 && naive_is_corner(img, x, y, score + 1) {
                    score += 1;
                }
                out.push((x, y, score));
            }
        }
    }
    out
}

pub fn naive_nms(cands: &[(u32, u32, u8)]) -> Vec<(u32, u32, u8)> {
    cands
        .iter()
        .filter(|&&(x, y, s)| {
            !cands.iter().any(|&(ox, oy, os)| {
                let adjacent = (ox as i64 - x as i64).abs() <= 1
                    && (oy as i64 - y as i64).abs() <= 1
                    && (ox, oy) != (x, y);
                adjacent && (os > s || (os == s && (oy, ox) < (y, x)))
            })
        })
        .copied()
        .collect()
}

/// Noise, blocks, or a mix, so that every threshold sees corners.
pub fn random_image(rng: &mut ChaCha8Rng, w: u32, h: u32) -> GrayImage {
    let kind = rng.random_range(0..3);
    let base: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
    let blocks: Vec<(u32, u32, u32, u32, u8)> = (0..6)
        .map(|_| {
            let x0 = rng.random_range(0..w);
            let y0 = rng.random_range(0..h);
            (
                x0,
                y0,
                rng.random_range(2..12),
                rng.random_range(2..12),
                rng.random(),
            )
        })
        .collect();
    let bg: u8 = rng.random();
    GrayImage::from_fn(w, h, |x, y| {
        let block = blocks
            .iter()
            .rev()
            .find(|b| x >= b.0 && x < b.0 + b.2 && y >= b.1 && y < b.1 + b.3)
            .map(|b| b.4);
        let noise = base[(y * w + x) as usize];
        match kind {
            0 => noise,
            1 => block.unwrap_or(bg),
            _ => block.unwrap_or(bg).saturating_add(noise / 8),
        }
    })
    .unwrap()
}

pub struct MetricOracle {
    pub nme: f64,
    pub pck: f64,
    pub pcs: f64,
}

/// Straight enumeration over samples and keypoints.
pub fn brute_metrics(results: &[SampleResult], theta: f64) -> MetricOracle {
    let mut total = 0.0;
    let mut count = 0usize;
    let mut hits = 0usize;
    let mut good_samples = 0usize;
    for r in results {
        let mut all_good = true;
        for i in 0..r.ground_truth.len() {
            let e = if i < r.predictions.len() {
                let dx = r.predictions[i].x - r.ground_truth[i].x;
                let dy = r.predictions[i].y - r.ground_truth[i].y;
                (dx * dx + dy * dy).sqrt() / r.d_ref
            } else {
                1.0
            };
            total += e;
            count += 1;
            if e <= theta {
                hits += 1;
            } else {
                all_good = false;
            }
        }
        if all_good {
            good_samples += 1;
        }
    }
    MetricOracle {
        nme: 100.0 * total / count as f64,
        pck: hits as f64 / count as f64,
        pcs: good_samples as f64 / results.len() as f64,
    }
}

/// Up to 50 samples of the same keypoint count (at most 8), a few
/// predictions dropped, some errors placed exactly on the threshold.
pub fn random_results(rng: &mut ChaCha8Rng, theta: f64) -> Vec<SampleResult> {
    let n = rng.random_range(1..=50);
    let k = rng.random_range(1..=8);
    (0..n)
        .map(|i| {
            let d_ref: f64 = rng.random_range(20.0..600.0);
            let truth: Vec<Point2> = (0..k)
                .map(|_| Point2::new(rng.random_range(0.0..500.0), rng.random_range(0.0..400.0)))
                .collect();
            let mut preds: Vec<Point2> = truth
                .iter()
                .map(|t| {
                    if rng.random_bool(0.1) {
                        // error of exactly theta * d_ref along x
                        Point2::new(t.x + theta * d_ref, t.y)
                    } else {
                        let scale = d_ref * rng.random_range(0.0..0.03);
                        Point2::new(
                            t.x + scale * rng.random_range(-1.0..1.0),
                            t.y + scale * rng.random_range(-1.0..1.0),
                        )
                    }
                })
                .collect();
            if rng.random_bool(0.05) {
                preds.truncate(rng.random_range(0..k));
            }
            SampleResult {
                sample_id: i.to_string(),
                predictions: preds,
                ground_truth: truth,
                d_ref,
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
