//! Deterministic synthetic cell radiographs with known pole positions.
//!
//! Sample `i` of a spec is drawn from a ChaCha8 generator seeded with
//! `spec.seed` and switched to stream `i`, so every sample is independent of
//! the others and of the platform.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{save_png, GrayImage, Point2};
use crate::regress::{disk_coverage, PolePrediction};
use crate::roi::Roi;

/// Peak intensity of a filled (positive) pole.
pub const POSITIVE_PEAK: f64 = 245.0;
/// Peak intensity of a ring (negative) pole.
pub const NEGATIVE_PEAK: f64 = 240.0;
/// Fraction of the ring contrast filling a negative pole's center.
const RING_FILL: f64 = 0.6;
const RING_WIDTH: f64 = 1.2;
/// Intensity drop of every other electrode stripe.
const STRIPE_CONTRAST: f64 = 35.0;
/// Minimum distance between the band and the image border.
const BAND_MARGIN: u32 = 16;
/// Minimum distance between a pole center and the band's top or bottom edge.
const POLE_EDGE_MARGIN: f64 = 14.0;
/// Width of the pole cluster relative to band height.
const POLE_SPAN: f64 = 0.9;
/// Horizontal wander of the pole cluster relative to band height.
const CLUSTER_SHIFT: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellSpec {
    pub width: u32,
    pub height: u32,
    pub num_poles: usize,
    /// Pole radius range in pixels.
    pub pole_radius: (f64, f64),
    /// Band height range as a fraction of the image height.
    pub band_vertical_extent: (f64, f64),
    /// Band width range as a multiple of the band height.
    pub band_aspect: (f64, f64),
    pub layer_count: u32,
    pub noise_sigma: f64,
    pub background: (u8, u8),
    pub foreground: (u8, u8),
    pub seed: u64,
}

impl Default for CellSpec {
    fn default() -> Self {
        Self {
            width: 512,
            height: 384,
            num_poles: 4,
            pole_radius: (1.8, 2.6),
            band_vertical_extent: (0.35, 0.5),
            band_aspect: (2.0, 2.4),
            layer_count: 6,
            noise_sigma: 5.0,
            background: (20, 50),
            foreground: (110, 150),
            seed: 7,
        }
    }
}

impl CellSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_poles == 0 {
            return bad("num_poles must be >= 1".into());
        }
        let ordered = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !ordered(self.pole_radius) || self.pole_radius.0 <= 0.5 {
            return bad(format!(
                "pole_radius range {:?} is invalid",
                self.pole_radius
            ));
        }
        if !ordered(self.band_vertical_extent)
            || self.band_vertical_extent.0 <= 0.0
            || self.band_vertical_extent.1 > 1.0
        {
            return bad(format!(
                "band_vertical_extent {:?} must lie in (0, 1]",
                self.band_vertical_extent
            ));
        }
        if !ordered(self.band_aspect) || self.band_aspect.0 <= 0.0 {
            return bad(format!("band_aspect {:?} is invalid", self.band_aspect));
        }
        if self.background.0 > self.background.1 || self.foreground.0 > self.foreground.1 {
            return bad("intensity ranges must be ordered".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be >= 0".into());
        }
        if self.layer_count == 0 {
            return bad("layer_count must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPole {
    pub x: f64,
    pub y: f64,
    pub polarity: Polarity,
}

impl LabeledPole {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub image: GrayImage,
    /// Ordered left to right.
    pub poles: Vec<LabeledPole>,
    pub true_roi: Roi,
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

fn uniform_u32(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> u32 {
    rng.random_range(lo..=hi)
}

pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn generate_sample(spec: &CellSpec, index: usize) -> Result<LabeledSample> {
    spec.validate()?;
    let mut rng = sample_rng(spec.seed, index as u64);
    let (w, h) = (spec.width, spec.height);

    let bg = uniform(
        &mut rng,
        (spec.background.0 as f64, spec.background.1 as f64),
    );
    let fg = uniform(
        &mut rng,
        (spec.foreground.0 as f64, spec.foreground.1 as f64),
    );
    let band_h = (h as f64 * uniform(&mut rng, spec.band_vertical_extent)).round() as u32;
    let band_w = (band_h as f64 * uniform(&mut rng, spec.band_aspect)).round() as u32;
    if band_h + 2 * BAND_MARGIN > h || band_w + 2 * BAND_MARGIN > w {
        return Err(Error::SpecInfeasible(format!(
            "{band_w}x{band_h} band does not fit a {w}x{h} image"
        )));
    }
    let r_max = spec.pole_radius.1;
    let spacing = POLE_SPAN * band_h as f64 / spec.num_poles as f64;
    if POLE_SPAN + 2.0 * CLUSTER_SHIFT > band_w as f64 / band_h as f64
        || spacing < 4.0 * r_max + 8.0
        || (band_h as f64) < 2.0 * POLE_EDGE_MARGIN + 1.0
    {
        return Err(Error::SpecInfeasible(format!(
            "{} poles of radius {r_max} do not fit a {band_w}x{band_h} band",
            spec.num_poles
        )));
    }
    let top = uniform_u32(&mut rng, BAND_MARGIN, h - BAND_MARGIN - band_h);
    let left = uniform_u32(&mut rng, BAND_MARGIN, w - BAND_MARGIN - band_w);
    let roi = Roi {
        top,
        bottom: top + band_h,
        left,
        right: left + band_w,
    };

    let mut canvas = vec![bg; (w * h) as usize];
    for y in roi.top..roi.bottom {
        let layer = ((y - roi.top) as u64 * spec.layer_count as u64 / band_h as u64) as u32;
        let value = if layer % 2 == 0 {
            fg
        } else {
            fg - STRIPE_CONTRAST
        };
        for x in roi.left..roi.right {
            canvas[(y * w + x) as usize] = value;
        }
    }

    let jitter = (spacing * 0.15).min(3.0);
    let shift = CLUSTER_SHIFT * band_h as f64;
    let cluster_left = left as f64
        + 0.5 * (band_w as f64 - POLE_SPAN * band_h as f64)
        + uniform(&mut rng, (-shift, shift));
    let mut poles = Vec::with_capacity(spec.num_poles);
    for k in 0..spec.num_poles {
        let x = cluster_left + spacing * (k as f64 + 0.5) + uniform(&mut rng, (-jitter, jitter));
        let y = uniform(
            &mut rng,
            (
                top as f64 + POLE_EDGE_MARGIN,
                (roi.bottom - 1) as f64 - POLE_EDGE_MARGIN,
            ),
        );
        let radius = uniform(&mut rng, spec.pole_radius);
        let polarity = if k % 2 == 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        };
        stamp_pole(&mut canvas, w, h, Point2::new(x, y), radius, polarity);
        poles.push(LabeledPole { x, y, polarity });
    }

    let data = if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
        canvas
            .iter()
            .map(|&v| quantize(v + noise.sample(&mut rng)))
            .collect()
    } else {
        canvas.iter().map(|&v| quantize(v)).collect()
    };
    Ok(LabeledSample {
        image: GrayImage::new(w, h, data)?,
        poles,
        true_roi: roi,
    })
}

fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn stamp_pole(canvas: &mut [f64], w: u32, h: u32, c: Point2, radius: f64, polarity: Polarity) {
    let reach = (radius + 2.0).ceil() as i64;
    let (cx, cy) = c.to_pixel();
    for y in (cy - reach).max(0)..=(cy + reach).min(h as i64 - 1) {
        for x in (cx - reach).max(0)..=(cx + reach).min(w as i64 - 1) {
            let (dx, dy) = (x as f64 - c.x, y as f64 - c.y);
            let outer = disk_coverage(dx, dy, radius);
            if outer == 0.0 {
                continue;
            }
            let px = &mut canvas[(y * w as i64 + x) as usize];
            let base = *px;
            *px = match polarity {
                Polarity::Positive => base + (POSITIVE_PEAK - base) * outer,
                Polarity::Negative => {
                    let inner = disk_coverage(dx, dy, radius - RING_WIDTH);
                    base + (NEGATIVE_PEAK - base) * (outer - (1.0 - RING_FILL) * inner)
                }
            };
        }
    }
}

/// One manifest record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: String,
    pub poles: Vec<LabeledPole>,
    pub roi: Roi,
}

impl ManifestEntry {
    /// File stem of the image, used as the sample id.
    pub fn sample_id(&self) -> String {
        Path::new(&self.image)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.image.clone())
    }
}

pub type Manifest = Vec<ManifestEntry>;

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sample_file_name(index: usize) -> String {
    format!("cell_{index:05}.png")
}

/// Generates `n` samples in memory, in index order.
pub fn generate_samples(spec: &CellSpec, n: usize) -> Result<Vec<LabeledSample>> {
    (0..n)
        .into_par_iter()
        .map(|i| generate_sample(spec, i))
        .collect()
}

/// Writes `n` PNG samples plus `manifest.json` into `out_dir`.
pub fn generate_dataset(spec: &CellSpec, n: usize, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    if n == 0 {
        return Err(Error::InvalidArgument("dataset size must be >= 1".into()));
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let manifest: Manifest = (0..n)
        .into_par_iter()
        .map(|i| {
            let sample = generate_sample(spec, i)?;
            let name = sample_file_name(i);
            save_png(&sample.image, out_dir.join(&name))?;
            Ok(ManifestEntry {
                image: name,
                poles: sample.poles,
                roi: sample.true_roi,
            })
        })
        .collect::<Result<_>>()?;
    write_manifest(out_dir.join(MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Resolves a manifest image entry relative to the manifest's directory.
pub fn manifest_image_path(manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
    manifest_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&entry.image)
}

/// Ways to perturb ground truth into stand-in network outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegradeMode {
    /// Snap to the nearest stride-grid cell center.
    Quantize { stride: u32 },
    /// Independent Gaussian noise per axis.
    Jitter { sigma: f64 },
    /// Constant offset.
    Bias { dx: f64, dy: f64 },
}

pub fn degrade_predictions(
    truth: &[Point2],
    mode: DegradeMode,
    seed: u64,
) -> Result<Vec<PolePrediction>> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument(
            "no ground-truth points to degrade".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moved: Vec<Point2> = match mode {
        DegradeMode::Quantize { stride } => {
            if stride == 0 {
                return Err(Error::InvalidArgument("stride must be >= 1".into()));
            }
            let s = stride as f64;
            let snap = |v: f64| ((v + 0.5) / s).floor() * s + (s - 1.0) / 2.0;
            truth
                .iter()
                .map(|p| Point2::new(snap(p.x), snap(p.y)))
                .collect()
        }
        DegradeMode::Jitter { sigma } => {
            if sigma == 0.0 {
                truth.to_vec()
            } else {
                let normal = Normal::new(0.0, sigma)
                    .map_err(|e| Error::InvalidArgument(format!("jitter sigma: {e}")))?;
                truth
                    .iter()
                    .map(|p| p.offset(normal.sample(&mut rng), normal.sample(&mut rng)))
                    .collect()
            }
        }
        DegradeMode::Bias { dx, dy } => truth.iter().map(|p| p.offset(dx, dy)).collect(),
    };
    Ok(moved
        .into_iter()
        .enumerate()
        .map(|(i, position)| PolePrediction {
            position,
            score: 1.0,
            pole_index: i,
        })
        .collect())
}
