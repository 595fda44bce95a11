//! Localization metrics: NME, PCK@θ and PCS@θ, plus Table-style reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::imagecore::Point2;

pub const DEFAULT_THETAS: [f64; 2] = [0.005, 0.01];

/// Predictions and ground truth of one image, matched by pole index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample_id: String,
    pub predictions: Vec<Point2>,
    pub ground_truth: Vec<Point2>,
    /// Reference distance, the ROI diagonal.
    pub d_ref: f64,
}

impl SampleResult {
    /// Per-keypoint `d_err / d_ref`. Missing predictions count as 1.0.
    pub fn normalized_errors(&self) -> Result<Vec<f64>> {
        if self.ground_truth.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "sample {} has no ground-truth keypoints",
                self.sample_id
            )));
        }
        if !(self.d_ref > 0.0 && self.d_ref.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample {} has non-positive reference distance",
                self.sample_id
            )));
        }
        if self.predictions.len() > self.ground_truth.len() {
            return Err(Error::DimMismatch(format!(
                "sample {} has {} predictions for {} keypoints",
                self.sample_id,
                self.predictions.len(),
                self.ground_truth.len()
            )));
        }
        Ok(self
            .ground_truth
            .iter()
            .enumerate()
            .map(|(i, gt)| match self.predictions.get(i) {
                Some(p) => p.distance(gt) / self.d_ref,
                None => 1.0,
            })
            .collect())
    }
}

fn all_errors(results: &[SampleResult]) -> Result<Vec<Vec<f64>>> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    results
        .iter()
        .map(SampleResult::normalized_errors)
        .collect()
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "theta must be > 0, got {theta}"
        )))
    }
}

/// Mean normalized error over all keypoints, in percent.
pub fn nme(results: &[SampleResult]) -> Result<f64> {
    let errs = all_errors(results)?;
    let (sum, count) = errs
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), e| (s + e, n + 1));
    Ok(sum / count as f64 * 100.0)
}

/// Fraction of keypoints with normalized error `<= theta`.
pub fn pck(results: &[SampleResult], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let errs = all_errors(results)?;
    let (hits, count) = errs.iter().flatten().fold((0usize, 0usize), |(h, n), &e| {
        (h + (e <= theta) as usize, n + 1)
    });
    Ok(hits as f64 / count as f64)
}

/// Fraction of samples whose worst keypoint has normalized error `<= theta`.
pub fn pcs(results: &[SampleResult], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let errs = all_errors(results)?;
    let hits = errs
        .iter()
        .filter(|e| e.iter().copied().fold(f64::NEG_INFINITY, f64::max) <= theta)
        .count();
    Ok(hits as f64 / errs.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Percent.
    pub nme: f64,
    pub thetas: Vec<f64>,
    /// Fractions, aligned with `thetas`.
    pub pck: Vec<f64>,
    pub pcs: Vec<f64>,
    pub n_samples: usize,
    pub n_keypoints: usize,
}

pub fn evaluate(results: &[SampleResult], thetas: &[f64]) -> Result<EvalReport> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one theta is required".into(),
        ));
    }
    let errs = all_errors(results)?;
    Ok(EvalReport {
        nme: nme(results)?,
        thetas: thetas.to_vec(),
        pck: thetas
            .iter()
            .map(|&t| pck(results, t))
            .collect::<Result<_>>()?,
        pcs: thetas
            .iter()
            .map(|&t| pcs(results, t))
            .collect::<Result<_>>()?,
        n_samples: results.len(),
        n_keypoints: errs.iter().map(Vec::len).sum(),
    })
}

fn theta_key(theta: f64) -> String {
    format!("{theta}")
}

/// Column label such as `0.5%` for `theta = 0.005`.
pub fn theta_label(theta: f64) -> String {
    format!("{:.1}%", theta * 100.0)
}

impl EvalReport {
    pub fn to_json(&self) -> Value {
        let per_theta = |vals: &[f64]| -> Value {
            let mut m = Map::new();
            for (t, v) in self.thetas.iter().zip(vals) {
                m.insert(theta_key(*t), json!(v));
            }
            Value::Object(m)
        };
        json!({
            "nme": self.nme,
            "pck": per_theta(&self.pck),
            "pcs": per_theta(&self.pcs),
            "n_samples": self.n_samples,
            "n_keypoints": self.n_keypoints,
        })
    }

    pub fn from_json(value: &Value) -> Result<EvalReport> {
        let bad = |what: &str| Error::CorruptData(format!("report JSON: {what}"));
        let nme = value["nme"].as_f64().ok_or_else(|| bad("nme"))?;
        let pck_map = value["pck"].as_object().ok_or_else(|| bad("pck"))?;
        let pcs_map = value["pcs"].as_object().ok_or_else(|| bad("pcs"))?;
        let mut thetas = Vec::new();
        let mut pck = Vec::new();
        let mut pcs = Vec::new();
        for (k, v) in pck_map {
            let t: f64 = k.parse().map_err(|_| bad("theta key"))?;
            thetas.push(t);
            pck.push(v.as_f64().ok_or_else(|| bad("pck value"))?);
            pcs.push(
                pcs_map
                    .get(k)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| bad("pcs value"))?,
            );
        }
        Ok(EvalReport {
            nme,
            thetas,
            pck,
            pcs,
            n_samples: value["n_samples"]
                .as_u64()
                .ok_or_else(|| bad("n_samples"))? as usize,
            n_keypoints: value["n_keypoints"]
                .as_u64()
                .ok_or_else(|| bad("n_keypoints"))? as usize,
        })
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("method,nme");
        for t in &self.thetas {
            write!(h, ",pck@{}", theta_label(*t)).unwrap();
        }
        for t in &self.thetas {
            write!(h, ",pcs@{}", theta_label(*t)).unwrap();
        }
        h
    }

    pub fn csv_row(&self, label: &str) -> String {
        let mut r = format!("{label},{:.6}", self.nme);
        for v in self.pck.iter().chain(&self.pcs) {
            write!(r, ",{v:.6}").unwrap();
        }
        r
    }
}

/// Percent improvements of `improved` over `baseline`. `None` where the
/// baseline value is zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelativeGain {
    pub nme: Option<f64>,
    pub pck: Vec<Option<f64>>,
    pub pcs: Vec<Option<f64>>,
}

fn gain(base: f64, new: f64, lower_is_better: bool) -> Option<f64> {
    if base == 0.0 {
        return (base == new).then_some(0.0);
    }
    let delta = if lower_is_better {
        base - new
    } else {
        new - base
    };
    Some(delta / base * 100.0)
}

pub fn relative_gain(baseline: &EvalReport, improved: &EvalReport) -> Result<RelativeGain> {
    if baseline.thetas != improved.thetas {
        return Err(Error::ThetaMismatch);
    }
    let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(&x, &y)| gain(x, y, false)).collect();
    Ok(RelativeGain {
        nme: gain(baseline.nme, improved.nme, true),
        pck: zip(&baseline.pck, &improved.pck),
        pcs: zip(&baseline.pcs, &improved.pcs),
    })
}

/// Plain-text comparison table: one row per labeled report, optionally
/// followed by a relative-gain row.
pub fn format_table(rows: &[(String, EvalReport)], gain_row: Option<&RelativeGain>) -> String {
    let Some((_, first)) = rows.first() else {
        return String::new();
    };
    let mut headers = vec!["Method".to_string(), "NME(%)".to_string()];
    headers.extend(
        first
            .thetas
            .iter()
            .map(|t| format!("PCK@{}", theta_label(*t))),
    );
    headers.extend(
        first
            .thetas
            .iter()
            .map(|t| format!("PCS@{}", theta_label(*t))),
    );

    let mut body: Vec<Vec<String>> = rows
        .iter()
        .map(|(label, r)| {
            let mut cells = vec![label.clone(), format!("{:.3}", r.nme)];
            cells.extend(r.pck.iter().chain(&r.pcs).map(|v| format!("{v:.3}")));
            cells
        })
        .collect();
    if let Some(g) = gain_row {
        let pct = |v: &Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}%"));
        let mut cells = vec!["Relative Gain".to_string(), pct(&g.nme)];
        cells.extend(g.pck.iter().chain(&g.pcs).map(pct));
        body.push(cells);
    }

    let widths: Vec<usize> = (0..headers.len())
        .map(|c| {
            body.iter()
                .map(|row| row[c].len())
                .chain(std::iter::once(headers[c].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let render = |cells: &[String]| -> String {
        let mut line = String::new();
        for (c, cell) in cells.iter().enumerate() {
            if c == 0 {
                write!(line, "{cell:<w$}", w = widths[c]).unwrap();
            } else {
                write!(line, "  {cell:>w$}", w = widths[c]).unwrap();
            }
        }
        line.push('\n');
        line
    };
    let mut out = render(&headers);
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    let gain_at = gain_row.map(|_| body.len() - 1);
    for (i, row) in body.iter().enumerate() {
        if Some(i) == gain_at {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
        out.push_str(&render(row));
    }
    out
}
