use polelocate::imagecore::{affine_warp, AffineParams};
use polelocate::synthgen::{generate_sample, CellSpec, Polarity};
use polelocate::{detect_top_n, estimate_roi, GrayImage, Point2, RoiParams};

const SAMPLES: usize = 40;

#[test]
fn corners_concentrate_on_band_and_poles() {
    let spec = CellSpec::default();
    let (mut in_band, mut total, mut covered, mut poles) = (0, 0, 0, 0);
    for i in 0..SAMPLES {
        let s = generate_sample(&spec, i).unwrap();
        let corners = detect_top_n(&s.image, 512, 20).unwrap();
        total += corners.len();
        in_band += corners
            .iter()
            .filter(|c| s.true_roi.contains(c.position))
            .count();
        for p in &s.poles {
            poles += 1;
            if corners
                .iter()
                .any(|c| c.position.distance(&p.position()) <= 4.0)
            {
                covered += 1;
            }
        }
    }
    assert!(
        in_band as f64 >= 0.9 * total as f64,
        "{in_band}/{total} corners in band"
    );
    assert!(
        covered as f64 >= 0.9 * poles as f64,
        "{covered}/{poles} poles with a corner"
    );
}

#[test]
fn estimated_roi_contains_poles_with_margin() {
    let spec = CellSpec::default();
    for i in 0..SAMPLES {
        let s = generate_sample(&spec, i).unwrap();
        let corners = detect_top_n(&s.image, 512, 20).unwrap();
        let roi = estimate_roi(&s.image, &corners, &RoiParams::default())
            .unwrap()
            .roi;
        for p in &s.poles {
            assert!(
                roi.margin(p.position()) >= 4.0,
                "sample {i}: {p:?} vs {roi:?}"
            );
        }
    }
}

#[test]
fn corner_detection_is_translation_equivariant() {
    let s = generate_sample(&CellSpec::default(), 3).unwrap();
    let (dx, dy) = (7u32, 5u32);
    let (w, h) = s.image.dims();
    let shifted = GrayImage::from_fn(w, h, |x, y| {
        if x >= dx && y >= dy {
            s.image.get(x - dx, y - dy)
        } else {
            0
        }
    })
    .unwrap();
    let a = detect_top_n(&s.image, 512, 20).unwrap();
    let b = detect_top_n(&shifted, 512, 20).unwrap();
    // corners far from the new border are unaffected by the shift
    let interior =
        |p: Point2| p.x > 20.0 && p.y > 20.0 && p.x < w as f64 - 20.0 && p.y < h as f64 - 20.0;
    let moved: Vec<(f64, f64, f64)> = a
        .iter()
        .map(|c| {
            (
                c.position.x + dx as f64,
                c.position.y + dy as f64,
                c.response,
            )
        })
        .filter(|&(x, y, _)| interior(Point2::new(x, y)))
        .collect();
    let seen: Vec<(f64, f64, f64)> = b
        .iter()
        .map(|c| (c.position.x, c.position.y, c.response))
        .filter(|&(x, y, _)| interior(Point2::new(x, y)))
        .collect();
    let mut moved_sorted = moved.clone();
    let mut seen_sorted = seen.clone();
    let key = |v: &(f64, f64, f64)| (v.1 as i64, v.0 as i64);
    moved_sorted.sort_by_key(key);
    seen_sorted.sort_by_key(key);
    assert!(!moved_sorted.is_empty());
    assert_eq!(moved_sorted, seen_sorted);
}

#[test]
fn warped_poles_follow_keypoints() {
    let spec = CellSpec {
        noise_sigma: 0.0,
        ..Default::default()
    };
    let s = generate_sample(&spec, 1).unwrap();
    // filled discs only; a ring's brightest pixels sit on its rim
    let truth: Vec<Point2> = s
        .poles
        .iter()
        .filter(|p| p.polarity == Polarity::Positive)
        .map(|p| p.position())
        .collect();
    let params = AffineParams {
        rotation: 0.05,
        scale: 1.1,
        translation: (4.0, -3.0),
        reflect_horizontal: false,
    };
    let (warped, kps) = affine_warp(&s.image, &truth, &params).unwrap();
    for k in kps {
        let (cx, cy) = k.to_pixel();
        let window: Vec<(f64, f64, f64)> = (cy - 4..=cy + 4)
            .flat_map(|y| (cx - 4..=cx + 4).map(move |x| (x, y)))
            .map(|(x, y)| (x as f64, y as f64, warped.get(x as u32, y as u32) as f64))
            .collect();
        let floor = window.iter().map(|w| w.2).fold(f64::MAX, f64::min);
        let peak = window.iter().map(|w| w.2).fold(f64::MIN, f64::max);
        let cut = floor + 0.5 * (peak - floor);
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for &(x, y, v) in &window {
            if v > cut {
                sx += x * (v - cut);
                sy += y * (v - cut);
                sw += v - cut;
            }
        }
        let centroid = Point2::new(sx / sw, sy / sw);
        assert!(
            k.distance(&centroid) <= 1.0,
            "{k:?} vs centroid {centroid:?}"
        );
    }
}

#[test]
fn roi_follows_vertical_shift() {
    let spec = CellSpec::default();
    let params = RoiParams::default();
    for i in 0..10 {
        let s = generate_sample(&spec, i).unwrap();
        let (w, h) = s.image.dims();
        let k = 9u32;
        if s.true_roi.bottom + k + 16 > h {
            continue;
        }
        let shifted = GrayImage::from_fn(w, h, |x, y| s.image.get(x, y.saturating_sub(k))).unwrap();
        let a = estimate_roi(&s.image, &detect_top_n(&s.image, 512, 20).unwrap(), &params)
            .unwrap()
            .roi;
        let b = estimate_roi(&shifted, &detect_top_n(&shifted, 512, 20).unwrap(), &params)
            .unwrap()
            .roi;
        assert_eq!((b.top, b.bottom), (a.top + k, a.bottom + k), "sample {i}");
    }
}
