//! Corner-prior post-correction of regressed pole positions.
//!
//! Each prediction `p` is paired with the nearest detected corner `q` within
//! `delta`. Both points are scored by the cosine similarity between their
//! patch histogram and a per-image reference histogram, and the refined
//! position is the confidence-weighted mean `(alpha p + beta q) / (alpha + beta)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corner::{CornerPoint, CornerSet};
use crate::error::{Error, Result};
use crate::imagecore::{extract_patch, GrayImage, Point2};
use crate::regress::PolePrediction;

/// Normalized intensity histogram of a square patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchFeature {
    pub histogram: Vec<f64>,
    pub patch_half_size: u32,
}

impl PatchFeature {
    pub fn bins(&self) -> usize {
        self.histogram.len()
    }
}

/// Which point's confidence becomes the weight on the prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// `alpha` = confidence at the prediction, `beta` = confidence at the corner.
    #[default]
    SelfWeighted,
    /// `alpha` = confidence at the corner, `beta` = confidence at the prediction.
    CrossWeighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrectionParams {
    /// Matching radius in pixels.
    pub delta: f64,
    pub patch_half_size: u32,
    pub bins: usize,
    pub min_confidence: f64,
    pub pairing: Pairing,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        Self {
            delta: 8.0,
            patch_half_size: 7,
            bins: 16,
            min_confidence: 0.1,
            pairing: Pairing::SelfWeighted,
        }
    }
}

impl CorrectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "correction.delta must be > 0, got {}",
                self.delta
            )));
        }
        if self.bins < 2 || self.bins > 256 {
            return Err(Error::InvalidConfig(format!(
                "correction.bins must be in [2, 256], got {}",
                self.bins
            )));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::InvalidConfig(
                "correction.min_confidence must be in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectedPole {
    pub pole_index: usize,
    pub refined: Point2,
    pub original: Point2,
    pub reference: Option<CornerPoint>,
    /// Weight on `original`; zero when no corner matched.
    pub alpha: f64,
    /// Weight on `reference`, or the confidence at `original` when no corner matched.
    pub beta: f64,
    pub low_confidence: bool,
}

fn distance_order(p: Point2) -> impl Fn(&&CornerPoint, &&CornerPoint) -> Ordering {
    move |a, b| {
        a.position
            .distance(&p)
            .total_cmp(&b.position.distance(&p))
            .then(b.response.total_cmp(&a.response))
            .then(a.position.y.total_cmp(&b.position.y))
            .then(a.position.x.total_cmp(&b.position.x))
    }
}

/// Closest corner with distance `<= delta`; ties go to the higher response,
/// then row-major position.
pub fn nearest_corner_within(p: Point2, corners: &CornerSet, delta: f64) -> Option<CornerPoint> {
    corners
        .iter()
        .filter(|c| c.position.distance(&p) <= delta)
        .min_by(distance_order(p))
        .copied()
}

pub fn patch_feature(
    img: &GrayImage,
    p: Point2,
    params: &CorrectionParams,
) -> Result<PatchFeature> {
    if params.bins < 2 || params.bins > 256 {
        return Err(Error::InvalidArgument(format!(
            "bins must be in [2, 256], got {}",
            params.bins
        )));
    }
    let patch = extract_patch(img, p, params.patch_half_size);
    let mut histogram = vec![0.0; params.bins];
    for &v in patch.data() {
        histogram[v as usize * params.bins / 256] += 1.0;
    }
    let n = patch.data().len() as f64;
    histogram.iter_mut().for_each(|h| *h /= n);
    Ok(PatchFeature {
        histogram,
        patch_half_size: params.patch_half_size,
    })
}

/// Average of the patch features at every listed pole, positive and negative
/// pooled, renormalized to unit mass.
pub fn reference_feature(
    img: &GrayImage,
    positive_poles: &[Point2],
    negative_poles: &[Point2],
    params: &CorrectionParams,
) -> Result<PatchFeature> {
    let all: Vec<Point2> = positive_poles
        .iter()
        .chain(negative_poles)
        .copied()
        .collect();
    if all.is_empty() {
        return Err(Error::NoPoles);
    }
    let mut histogram = vec![0.0; params.bins];
    for &p in &all {
        let f = patch_feature(img, p, params)?;
        histogram
            .iter_mut()
            .zip(&f.histogram)
            .for_each(|(acc, v)| *acc += v);
    }
    let total: f64 = histogram.iter().sum();
    if total > 0.0 {
        histogram.iter_mut().for_each(|h| *h /= total);
    }
    Ok(PatchFeature {
        histogram,
        patch_half_size: params.patch_half_size,
    })
}

/// Cosine similarity of two histograms. Zero vectors score 0.
pub fn confidence(feature: &PatchFeature, reference: &PatchFeature) -> Result<f64> {
    if feature.bins() != reference.bins() {
        return Err(Error::BinMismatch {
            left: feature.bins(),
            right: reference.bins(),
        });
    }
    let dot: f64 = feature
        .histogram
        .iter()
        .zip(&reference.histogram)
        .map(|(a, b)| a * b)
        .sum();
    let na = feature.histogram.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = reference
        .histogram
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// `(alpha p + beta q) / (alpha + beta)`.
pub fn fuse(p: Point2, q: Point2, alpha: f64, beta: f64) -> Result<Point2> {
    if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "fusion weights must be finite and non-negative, got {alpha}, {beta}"
        )));
    }
    let total = alpha + beta;
    if total == 0.0 {
        return Err(Error::ZeroWeights);
    }
    let wp = alpha / total;
    let wq = beta / total;
    Ok(Point2::new(wp * p.x + wq * q.x, wp * p.y + wq * q.y))
}

/// Corrects every prediction against `corners`, all in the frame of `roi_img`.
pub fn correct_all(
    preds: &[PolePrediction],
    corners: &CornerSet,
    roi_img: &GrayImage,
    reference: &PatchFeature,
    params: &CorrectionParams,
) -> Result<Vec<CorrectedPole>> {
    params.validate()?;
    preds
        .iter()
        .map(|pred| {
            let p = pred.position;
            let conf_p = confidence(&patch_feature(roi_img, p, params)?, reference)?;
            let matched = nearest_corner_within(p, corners, params.delta);
            let conf_q = match &matched {
                Some(c) => confidence(&patch_feature(roi_img, c.position, params)?, reference)?,
                None => 0.0,
            };
            let (alpha, beta) = match (&matched, params.pairing) {
                (None, _) => (0.0, conf_p),
                (Some(_), Pairing::SelfWeighted) => (conf_p, conf_q),
                (Some(_), Pairing::CrossWeighted) => (conf_q, conf_p),
            };
            let mut low_confidence = conf_p.max(conf_q) < params.min_confidence;
            let refined = match &matched {
                None => p,
                Some(c) => match fuse(p, c.position, alpha, beta) {
                    Ok(r) => r,
                    Err(Error::ZeroWeights) => {
                        low_confidence = true;
                        p
                    }
                    Err(e) => return Err(e),
                },
            };
            Ok(CorrectedPole {
                pole_index: pred.pole_index,
                refined,
                original: p,
                reference: matched,
                alpha,
                beta,
                low_confidence,
            })
        })
        .collect()
}
