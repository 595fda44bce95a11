mod common;

use common::{naive_fast, naive_nms, random_image, rng};
use polelocate::corner::{fast_candidates, fast_detect, non_max_suppression};
use polelocate::Error;
use polelocate::GrayImage;
use rand::Rng;

#[test]
fn candidates_and_scores_match_naive() {
    let mut r = rng(11);
    for _ in 0..40 {
        let (w, h) = (r.random_range(7..40), r.random_range(7..40));
        let img = random_image(&mut r, w, h);
        for t in [1u8, 10, 30, 60, 120, 254] {
            let got: Vec<_> = fast_candidates(&img, t)
                .unwrap()
                .iter()
                .map(|c| (c.x, c.y, c.score))
                .collect();
            assert_eq!(got, naive_fast(&img, t), "{w}x{h} t={t}");
        }
    }
}

#[test]
fn nms_matches_naive() {
    let mut r = rng(12);
    for _ in 0..40 {
        let img = random_image(&mut r, 32, 32);
        for t in [10u8, 30, 60] {
            let cands = fast_candidates(&img, t).unwrap();
            let got: Vec<_> = non_max_suppression(&cands, 32, 32)
                .iter()
                .map(|c| (c.x, c.y, c.score))
                .collect();
            let want = naive_nms(&naive_fast(&img, t));
            assert_eq!(got, want);
            let full: Vec<_> = fast_detect(&img, t)
                .unwrap()
                .iter()
                .map(|c| (c.x, c.y, c.score))
                .collect();
            assert_eq!(full, want);
        }
    }
}

#[test]
fn smallest_image_and_rejections() {
    let img = GrayImage::from_fn(7, 7, |x, y| if (x, y) == (3, 3) { 200 } else { 10 }).unwrap();
    assert_eq!(fast_candidates(&img, 20).unwrap().len(), 1);
    let small = GrayImage::filled(6, 9, 0).unwrap();
    assert!(matches!(
        fast_candidates(&small, 20),
        Err(Error::ImageTooSmall { .. })
    ));
    assert!(fast_candidates(&img, 0).is_err());
}
