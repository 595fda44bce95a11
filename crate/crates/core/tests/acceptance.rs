//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::{brute_metrics, naive_fast, naive_nms, random_image, random_results, rng};
use polelocate::config::PipelineConfig;
use polelocate::corner::{fast_candidates, fast_detect, CornerSet};
use polelocate::correct::{
    confidence, correct_all, fuse, patch_feature, reference_feature, CorrectionParams,
};
use polelocate::eval::{nme, pck, pcs, SampleResult};
use polelocate::pipeline::{correct_in_roi, process_image};
use polelocate::regress::{decode_argmax, decode_heatmap, render_gaussian, PolePrediction};
use polelocate::roi::{row_profile, scan_bounds, RowProfile};
use polelocate::synthgen::{
    degrade_predictions, generate_dataset, generate_samples, CellSpec, DegradeMode, LabeledSample,
};
use polelocate::{detect_top_n, estimate_roi, CornerPoint, GrayImage, Point2, RoiParams};
use rand::Rng;
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut mismatches = 0;
    let mut r = rng(1001);
    for _ in 0..100 {
        for theta in [0.005, 0.01] {
            let results = random_results(&mut r, theta);
            let want = brute_metrics(&results, theta);
            let got = (
                nme(&results).unwrap(),
                pck(&results, theta).unwrap(),
                pcs(&results, theta).unwrap(),
            );
            let diff = (got.0 - want.nme)
                .abs()
                .max((got.1 - want.pck).abs())
                .max((got.2 - want.pcs).abs());
            worst = worst.max(diff);
            if diff > 1e-12 {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!(
            "100 sets x 2 thetas, max |diff| {worst:.1e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn fast_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2002);
    let (mut bad, mut total) = (0, 0);
    for _ in 0..50 {
        let img = random_image(&mut r, 32, 32);
        for t in [10u8, 30, 60] {
            let want = naive_fast(&img, t);
            let got: Vec<_> = fast_candidates(&img, t)
                .unwrap()
                .iter()
                .map(|c| (c.x, c.y, c.score))
                .collect();
            let after: Vec<_> = fast_detect(&img, t)
                .unwrap()
                .iter()
                .map(|c| (c.x, c.y, c.score))
                .collect();
            total += want.len();
            if got != want || after != naive_nms(&want) {
                bad += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad == 0 && elapsed < Duration::from_secs(10),
        format!(
            "150 image/threshold pairs, {total} candidates, {bad} mismatches, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn decode_roundtrip() -> Outcome {
    let (w, h, stride, sigma) = (128u32, 128u32, 4u32, 2.0);
    let (mut worst, mut sum_q, mut sum_a) = (0.0f64, 0.0, 0.0);
    let mut n = 0;
    for i in 0..20 {
        for j in 0..20 {
            let k = Point2::new(16.0 + i as f64 * 4.9 + 0.13, 16.0 + j as f64 * 4.9 + 0.37);
            let hm = render_gaussian(k, (w, h), stride, sigma).unwrap();
            let q = decode_heatmap(&hm).unwrap().position.distance(&k);
            let a = decode_argmax(&hm).unwrap().position.distance(&k);
            worst = worst.max(q);
            sum_q += q;
            sum_a += a;
            n += 1;
        }
    }
    let (mq, ma) = (sum_q / n as f64, sum_a / n as f64);
    outcome(
        worst <= stride as f64 / 2.0 && mq < ma,
        format!("max error {worst:.3} px, mean {mq:.3} px refined vs {ma:.3} px argmax"),
    )
}

/// Corners and estimated ROI for every sample at corner budget `n`.
fn detect_all(
    samples: &[LabeledSample],
    n: usize,
    cfg: &PipelineConfig,
) -> Vec<(CornerSet, polelocate::Roi)> {
    samples
        .iter()
        .map(|s| {
            let corners = detect_top_n(&s.image, n, cfg.corner.threshold).unwrap();
            let roi = estimate_roi(&s.image, &corners, &cfg.roi).unwrap().roi;
            (corners, roi)
        })
        .collect()
}

/// Quantized ground truth in the ROI frame, corrected with the given corners.
/// Returns (uncorrected, corrected) results in the global frame.
fn quantized_correction(
    samples: &[LabeledSample],
    detected: &[(CornerSet, polelocate::Roi)],
    cfg: &PipelineConfig,
) -> (Vec<SampleResult>, Vec<SampleResult>) {
    let mut raw = Vec::new();
    let mut corrected = Vec::new();
    for (i, (s, (corners, roi))) in samples.iter().zip(detected).enumerate() {
        let truth: Vec<Point2> = s.poles.iter().map(|p| p.position()).collect();
        let local: Vec<Point2> = truth.iter().map(|&p| roi.to_local(p)).collect();
        let preds =
            degrade_predictions(&local, DegradeMode::Quantize { stride: 4 }, i as u64).unwrap();
        let crop = roi.crop(&s.image).unwrap();
        let fixed = correct_in_roi(&crop, corners, roi, &preds, cfg).unwrap();
        let result = |pts: Vec<Point2>| SampleResult {
            sample_id: i.to_string(),
            predictions: pts,
            ground_truth: truth.clone(),
            d_ref: s.true_roi.diagonal(),
        };
        raw.push(result(
            preds.iter().map(|p| roi.to_global(p.position)).collect(),
        ));
        corrected.push(result(
            fixed.iter().map(|c| roi.to_global(c.refined)).collect(),
        ));
    }
    (raw, corrected)
}

fn correction_gain(samples: &[LabeledSample]) -> Outcome {
    let start = Instant::now();
    let cfg = PipelineConfig::default();
    let detected = detect_all(samples, 512, &cfg);
    let (raw, corrected) = quantized_correction(samples, &detected, &cfg);
    let (before, after) = (nme(&raw).unwrap(), nme(&corrected).unwrap());
    let gain = (before - after) / before * 100.0;
    let elapsed = start.elapsed();
    outcome(
        gain >= 5.0 && elapsed < Duration::from_secs(120),
        format!(
            "NME {before:.4}% -> {after:.4}%, relative gain {gain:.2}% (need >= 5%), {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn corner_sweep(samples: &[LabeledSample]) -> Outcome {
    let cfg = PipelineConfig::default();
    let mut by_n = BTreeMap::new();
    let mut most = 0;
    for n in [128usize, 256, 512] {
        let detected = detect_all(samples, n, &cfg);
        most = most.max(detected.iter().map(|d| d.0.len()).max().unwrap_or(0));
        let (_, corrected) = quantized_correction(samples, &detected, &cfg);
        by_n.insert(n, pcs(&corrected, 0.01).unwrap());
    }
    outcome(
        by_n[&512] >= by_n[&128],
        format!(
            "PCS@1.0% N=128 {:.3}, N=256 {:.3}, N=512 {:.3}; at most {most} corners per image",
            by_n[&128], by_n[&256], by_n[&512]
        ),
    )
}

fn invariants() -> Outcome {
    let mut failures: Vec<&str> = Vec::new();
    let mut r = rng(6006);
    let mut check = |ok: bool, name: &'static str| {
        if !ok && !failures.contains(&name) {
            failures.push(name);
        }
    };

    for _ in 0..2000 {
        let p = Point2::new(r.random_range(-500.0..500.0), r.random_range(-500.0..500.0));
        let q = Point2::new(r.random_range(-500.0..500.0), r.random_range(-500.0..500.0));
        let (a, b) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        if a + b > 0.0 {
            let f = fuse(p, q, a, b).unwrap();
            let tol = 1e-9;
            check(
                f.x >= p.x.min(q.x) - tol
                    && f.x <= p.x.max(q.x) + tol
                    && f.y >= p.y.min(q.y) - tol
                    && f.y <= p.y.max(q.y) + tol,
                "fusion convexity",
            );
            let collinear = (f.x - p.x) * (q.y - p.y) - (f.y - p.y) * (q.x - p.x);
            check(
                collinear.abs() <= 1e-6 * (1.0 + p.distance(&q).powi(2)),
                "fusion convexity",
            );
        }
        let w = r.random_range(0.01..1.0);
        let m = fuse(p, q, w, w).unwrap();
        check(
            (m.x - (p.x + q.x) / 2.0).abs() < 1e-9 && (m.y - (p.y + q.y) / 2.0).abs() < 1e-9,
            "fusion midpoint",
        );
    }

    let params = CorrectionParams::default();
    for _ in 0..100 {
        let img = random_image(&mut r, 48, 48);
        let a = Point2::new(r.random_range(0.0..48.0), r.random_range(0.0..48.0));
        let b = Point2::new(r.random_range(0.0..48.0), r.random_range(0.0..48.0));
        let fa = patch_feature(&img, a, &params).unwrap();
        let fb = patch_feature(&img, b, &params).unwrap();
        let c = confidence(&fa, &fb).unwrap();
        check((0.0..=1.0).contains(&c), "confidence range");
        check(
            (confidence(&fa, &fa).unwrap() - 1.0).abs() < 1e-12,
            "self-confidence",
        );

        let preds: Vec<PolePrediction> = (0..4)
            .map(|i| PolePrediction {
                position: Point2::new(r.random_range(0.0..48.0), r.random_range(0.0..48.0)),
                score: 1.0,
                pole_index: i,
            })
            .collect();
        let corners = CornerSet {
            corners: (0..12)
                .map(|_| CornerPoint {
                    position: Point2::new(
                        r.random_range(3..45) as f64,
                        r.random_range(3..45) as f64,
                    ),
                    response: r.random_range(0.0..100.0),
                    orientation: 0.0,
                })
                .collect(),
            source_dims: (48, 48),
        };
        let seeds: Vec<Point2> = preds.iter().map(|p| p.position).collect();
        let reference = reference_feature(&img, &seeds, &[], &params).unwrap();
        for c in correct_all(&preds, &corners, &img, &reference, &params).unwrap() {
            check(
                c.refined.distance(&c.original) <= params.delta + 1e-9,
                "movement bound",
            );
        }
        for c in correct_all(&preds, &CornerSet::default(), &img, &reference, &params).unwrap() {
            check(
                c.refined == c.original && c.reference.is_none(),
                "identity under empty corners",
            );
        }
    }

    for _ in 0..300 {
        let results = random_results(&mut r, 0.01);
        let (t1, t2): (f64, f64) = (r.random_range(0.0001..0.03), r.random_range(0.0001..0.03));
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        check(
            pcs(&results, lo).unwrap() <= pck(&results, lo).unwrap(),
            "pcs <= pck",
        );
        check(
            pck(&results, lo).unwrap() <= pck(&results, hi).unwrap(),
            "threshold monotonicity",
        );
        check(
            pcs(&results, lo).unwrap() <= pcs(&results, hi).unwrap(),
            "threshold monotonicity",
        );
    }

    let roi_params = RoiParams::default();
    for _ in 0..500 {
        let h = r.random_range(2..80);
        let sums: Vec<f64> = (0..h).map(|_| r.random_range(0.0..1000.0)).collect();
        let profile = RowProfile { sums };
        let y0 = r.random_range(0..h as u32);
        let b = scan_bounds(&profile, y0, &roi_params).unwrap();
        check(
            b.top < b.bottom && b.top <= y0 && b.bottom > y0,
            "ROI bound ordering",
        );
    }
    let flat = row_profile(&GrayImage::filled(20, 20, 7).unwrap());
    let b = scan_bounds(&flat, 10, &roi_params).unwrap();
    check(b.top < b.bottom, "ROI bound ordering");

    let spec = CellSpec::default();
    let hashes: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            generate_dataset(&spec, 5, dir.path()).unwrap();
            let mut names: Vec<_> = std::fs::read_dir(dir.path())
                .unwrap()
                .map(|e| e.unwrap().file_name())
                .collect();
            names.sort();
            let mut h = Sha256::new();
            for n in names {
                h.update(n.as_encoded_bytes());
                h.update(std::fs::read(dir.path().join(n)).unwrap());
            }
            h.finalize().to_vec()
        })
        .collect();
    check(hashes[0] == hashes[1], "dataset determinism");

    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "fusion convexity/midpoint, confidence range, self-confidence, pcs<=pck, monotonicity, movement bound, empty-corner identity, ROI ordering, dataset determinism".into()
        } else {
            format!("violated: {}", failures.join(", "))
        },
    )
}

fn end_to_end(samples: &[LabeledSample]) -> Outcome {
    let cfg = PipelineConfig::default();
    let predictor = cfg.predictor.build().unwrap();
    let results: Vec<SampleResult> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let out = process_image(&s.image, None, &cfg, predictor.as_ref()).unwrap();
            SampleResult {
                sample_id: i.to_string(),
                predictions: out
                    .corrected
                    .iter()
                    .map(|c| out.roi.roi.to_global(c.refined))
                    .collect(),
                ground_truth: s.poles.iter().map(|p| p.position()).collect(),
                d_ref: s.true_roi.diagonal(),
            }
        })
        .collect();
    let score = pcs(&results, 0.01).unwrap();
    outcome(
        score >= 0.95,
        format!(
            "template predictor + correction: PCS@1.0% {score:.3} (need >= 0.95), NME {:.4}%",
            nme(&results).unwrap()
        ),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    // `cargo test` passes harness flags such as `--quiet`; a name filter
    // that matches nothing skips the suite.
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if !filter.is_empty() && !filter.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }

    let spec = CellSpec {
        seed: 7,
        num_poles: 4,
        ..Default::default()
    };
    let samples = generate_samples(&spec, 200).expect("synthetic dataset");

    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("1 metric oracle equivalence", Box::new(metric_oracle)),
        ("2 FAST oracle equivalence", Box::new(fast_oracle)),
        ("3 decode-render roundtrip", Box::new(decode_roundtrip)),
        (
            "4 correction improves quantized predictions",
            Box::new(|| correction_gain(&samples)),
        ),
        ("5 monotonic N sweep", Box::new(|| corner_sweep(&samples))),
        ("6 invariant suite", Box::new(invariants)),
        (
            "7 end-to-end pipeline sanity",
            Box::new(|| end_to_end(&samples)),
        ),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
