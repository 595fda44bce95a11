//! End-to-end processing of one image and of batches, plus the results file.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::corner::{detect_top_n, CornerSet};
use crate::correct::{correct_all, reference_feature, CorrectedPole};
use crate::error::{Error, Result};
use crate::eval::SampleResult;
use crate::imagecore::{load_image, GrayImage, Point2};
use crate::regress::{predict_poles, HeatmapPredictor, PolePrediction};
use crate::roi::{estimate_roi, Roi, RoiEstimate};
use crate::synthgen::Manifest;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawPosition {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XY {
    pub x: f64,
    pub y: f64,
}

impl From<Point2> for XY {
    fn from(p: Point2) -> Self {
        XY { x: p.x, y: p.y }
    }
}

impl From<XY> for Point2 {
    fn from(p: XY) -> Self {
        Point2::new(p.x, p.y)
    }
}

/// One pole in global image coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub index: usize,
    pub raw: RawPosition,
    pub corrected: XY,
    pub alpha: f64,
    pub beta: f64,
    pub corner: Option<XY>,
    #[serde(default)]
    pub low_confidence: bool,
}

/// One entry of the results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub roi: Option<Roi>,
    pub poles: Vec<PoleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything produced for one image.
#[derive(Clone, Debug)]
pub struct ImageOutcome {
    pub corners: CornerSet,
    pub roi: RoiEstimate,
    /// ROI frame.
    pub predictions: Vec<PolePrediction>,
    /// ROI frame.
    pub corrected: Vec<CorrectedPole>,
}

impl ImageOutcome {
    pub fn to_record(&self, sample_id: &str) -> SampleRecord {
        SampleRecord {
            sample_id: sample_id.to_string(),
            roi: Some(self.roi.roi),
            poles: to_global_records(&self.roi.roi, &self.predictions, &self.corrected),
            error: None,
        }
    }
}

/// Shifts ROI-frame results by `(left, top)`.
pub fn to_global_records(
    roi: &Roi,
    preds: &[PolePrediction],
    corrected: &[CorrectedPole],
) -> Vec<PoleRecord> {
    preds
        .iter()
        .zip(corrected)
        .map(|(p, c)| {
            let raw = roi.to_global(p.position);
            PoleRecord {
                index: p.pole_index,
                raw: RawPosition {
                    x: raw.x,
                    y: raw.y,
                    score: p.score,
                },
                corrected: roi.to_global(c.refined).into(),
                alpha: c.alpha,
                beta: c.beta,
                corner: c.reference.map(|q| roi.to_global(q.position).into()),
                low_confidence: c.low_confidence,
            }
        })
        .collect()
}

/// Corner detection, ROI, prediction and correction on one image.
pub fn process_image(
    img: &GrayImage,
    image_stem: Option<&str>,
    cfg: &PipelineConfig,
    predictor: &dyn HeatmapPredictor,
) -> Result<ImageOutcome> {
    let corners = detect_top_n(img, cfg.corner.n, cfg.corner.threshold)?;
    let roi = estimate_roi(img, &corners, &cfg.roi)?;
    let (predictions, corrected) =
        predict_and_correct(img, &corners, &roi.roi, image_stem, cfg, predictor)?;
    Ok(ImageOutcome {
        corners,
        roi,
        predictions,
        corrected,
    })
}

/// Prediction and correction inside a known ROI.
pub fn predict_and_correct(
    img: &GrayImage,
    corners: &CornerSet,
    roi: &Roi,
    image_stem: Option<&str>,
    cfg: &PipelineConfig,
    predictor: &dyn HeatmapPredictor,
) -> Result<(Vec<PolePrediction>, Vec<CorrectedPole>)> {
    let crop = roi.crop(img)?;
    let mut predictions = predict_poles(predictor, &crop, cfg.predictor.num_poles, image_stem)?;
    for p in &mut predictions {
        if p.score < cfg.predictor.score_floor {
            log::debug!(
                "pole {} scored {:.3}, below the floor",
                p.pole_index,
                p.score
            );
        }
    }
    let corrected = correct_in_roi(&crop, corners, roi, &predictions, cfg)?;
    Ok((predictions, corrected))
}

/// Correction of ROI-frame predictions; `corners` are in the global frame.
pub fn correct_in_roi(
    crop: &GrayImage,
    corners: &CornerSet,
    roi: &Roi,
    predictions: &[PolePrediction],
    cfg: &PipelineConfig,
) -> Result<Vec<CorrectedPole>> {
    let local = corners.to_frame(roi.left, roi.top, roi.right, roi.bottom);
    let seeds: Vec<Point2> = predictions.iter().map(|p| p.position).collect();
    let reference = reference_feature(crop, &seeds, &[], &cfg.correction)?;
    let mut corrected = correct_all(predictions, &local, crop, &reference, &cfg.correction)?;
    for (c, p) in corrected.iter_mut().zip(predictions) {
        c.low_confidence |= p.score < cfg.predictor.score_floor;
    }
    Ok(corrected)
}

/// One input image of a batch.
#[derive(Clone, Debug)]
pub struct BatchItem {
    pub sample_id: String,
    pub path: PathBuf,
}

/// Processes every item on the rayon pool; output order follows input order.
/// A failing image yields a record with `error` set instead of aborting.
pub fn run_batch(
    items: &[BatchItem],
    cfg: &PipelineConfig,
) -> Result<Vec<(SampleRecord, Option<ImageOutcome>)>> {
    cfg.validate()?;
    let predictor = cfg.predictor.build()?;
    let predictor = predictor.as_ref();
    Ok(items
        .par_iter()
        .map(|item| {
            let outcome = load_image(&item.path)
                .and_then(|img| process_image(&img, Some(&item.sample_id), cfg, predictor));
            match outcome {
                Ok(o) => (o.to_record(&item.sample_id), Some(o)),
                Err(e) => {
                    log::warn!("{}: {e}", item.sample_id);
                    (
                        SampleRecord {
                            sample_id: item.sample_id.clone(),
                            roi: None,
                            poles: Vec::new(),
                            error: Some(e.to_string()),
                        },
                        None,
                    )
                }
            }
        })
        .collect())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::CorruptData(format!("{}: {e}", path.display())))
}

pub fn write_results(path: impl AsRef<Path>, records: &[SampleRecord]) -> Result<()> {
    write_json(path, records)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    read_json(path)
}

/// A raw prediction in global coordinates, as written by `predict`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub roi: Roi,
    pub predictions: Vec<PredictionRecord>,
}

impl PredictionFile {
    pub fn from_local(roi: Roi, preds: &[PolePrediction]) -> Self {
        let predictions = preds
            .iter()
            .map(|p| {
                let g = roi.to_global(p.position);
                PredictionRecord {
                    index: p.pole_index,
                    x: g.x,
                    y: g.y,
                    score: p.score,
                }
            })
            .collect();
        PredictionFile { roi, predictions }
    }

    /// Predictions shifted back into the ROI frame.
    pub fn to_local(&self) -> Vec<PolePrediction> {
        self.predictions
            .iter()
            .map(|p| PolePrediction {
                position: self.roi.to_local(Point2::new(p.x, p.y)),
                score: p.score,
                pole_index: p.index,
            })
            .collect()
    }
}

/// Which position of each pole record to score.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositionKind {
    Raw,
    Corrected,
}

/// Joins results with ground truth by sample id. The reference distance is
/// the diagonal of the annotated ROI.
pub fn join_with_manifest(
    records: &[SampleRecord],
    manifest: &Manifest,
    kind: PositionKind,
) -> Result<Vec<SampleResult>> {
    let by_id: HashMap<String, usize> = manifest
        .iter()
        .enumerate()
        .map(|(i, e)| (e.sample_id(), i))
        .collect();
    records
        .iter()
        .map(|r| {
            let entry = by_id
                .get(&r.sample_id)
                .map(|&i| &manifest[i])
                .ok_or_else(|| {
                    Error::IdMismatch(format!("{} is not in the manifest", r.sample_id))
                })?;
            let mut poles = r.poles.clone();
            poles.sort_by_key(|p| p.index);
            let predictions = poles
                .iter()
                .take(entry.poles.len())
                .map(|p| match kind {
                    PositionKind::Raw => Point2::new(p.raw.x, p.raw.y),
                    PositionKind::Corrected => p.corrected.into(),
                })
                .collect();
            Ok(SampleResult {
                sample_id: r.sample_id.clone(),
                predictions,
                ground_truth: entry.poles.iter().map(|p| p.position()).collect(),
                d_ref: entry.roi.diagonal(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate_sample, CellSpec, LabeledPole, ManifestEntry, Polarity};

    #[test]
    fn synthetic_image_end_to_end() {
        let spec = CellSpec::default();
        let sample = generate_sample(&spec, 1).unwrap();
        let cfg = PipelineConfig::default();
        let predictor = cfg.predictor.build().unwrap();
        let out = process_image(&sample.image, Some("x"), &cfg, predictor.as_ref()).unwrap();
        assert_eq!(out.corrected.len(), 4);
        let record = out.to_record("x");
        for (rec, truth) in record.poles.iter().zip(&sample.poles) {
            let d = Point2::from(rec.corrected).distance(&truth.position());
            assert!(d < 3.0, "{rec:?} vs {truth:?}");
        }
    }

    #[test]
    fn noise_crop_is_flagged_low_confidence() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 10.0).unwrap();
        let img = GrayImage::from_fn(160, 120, |_, _| {
            (90.0f64 + noise.sample(&mut rng)).round() as u8
        })
        .unwrap();
        let cfg = PipelineConfig::default();
        let predictor = cfg.predictor.build().unwrap();
        let roi = Roi {
            top: 0,
            bottom: 120,
            left: 0,
            right: 160,
        };
        let corners = detect_top_n(&img, 64, 20).unwrap();
        let (preds, corrected) =
            predict_and_correct(&img, &corners, &roi, None, &cfg, predictor.as_ref()).unwrap();
        assert_eq!(preds.len(), cfg.predictor.num_poles);
        for (p, c) in preds.iter().zip(&corrected) {
            assert!(p.score < cfg.predictor.score_floor, "{p:?}");
            assert!(c.low_confidence);
        }
    }

    #[test]
    fn global_records_add_roi_offset() {
        let roi = Roi {
            top: 10,
            bottom: 50,
            left: 20,
            right: 90,
        };
        let pred = PolePrediction {
            position: Point2::new(3.25, 4.5),
            score: 0.8,
            pole_index: 0,
        };
        let corrected = CorrectedPole {
            pole_index: 0,
            refined: Point2::new(3.0, 4.0),
            original: pred.position,
            reference: None,
            alpha: 0.9,
            beta: 0.0,
            low_confidence: false,
        };
        let rec = to_global_records(&roi, &[pred], &[corrected]);
        assert_eq!((rec[0].raw.x, rec[0].raw.y), (23.25, 14.5));
        assert_eq!((rec[0].corrected.x, rec[0].corrected.y), (23.0, 14.0));
        assert!(rec[0].corner.is_none());
    }

    #[test]
    fn join_rejects_unknown_ids() {
        let manifest = vec![ManifestEntry {
            image: "a.png".into(),
            poles: vec![LabeledPole {
                x: 1.0,
                y: 1.0,
                polarity: Polarity::Positive,
            }],
            roi: Roi {
                top: 0,
                bottom: 3,
                left: 0,
                right: 4,
            },
        }];
        let rec = SampleRecord {
            sample_id: "b".into(),
            roi: None,
            poles: vec![],
            error: None,
        };
        assert!(matches!(
            join_with_manifest(std::slice::from_ref(&rec), &manifest, PositionKind::Raw),
            Err(Error::IdMismatch(_))
        ));
        let ok = SampleRecord {
            sample_id: "a".into(),
            ..rec
        };
        let joined = join_with_manifest(&[ok], &manifest, PositionKind::Corrected).unwrap();
        assert_eq!(joined[0].d_ref, 5.0);
        assert!(joined[0].predictions.is_empty());
    }
}
