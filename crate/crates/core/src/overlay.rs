//! Diagnostic RGB rendering of pipeline outputs.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::corner::CornerSet;
use crate::error::Result;
use crate::imagecore::{GrayImage, Point2};
use crate::roi::Roi;

const ROI_COLOR: Rgb<u8> = Rgb([255, 220, 0]);
const CORNER_COLOR: Rgb<u8> = Rgb([0, 200, 255]);
const RAW_COLOR: Rgb<u8> = Rgb([255, 40, 40]);
const CORRECTED_COLOR: Rgb<u8> = Rgb([40, 255, 40]);

/// Marks to draw, all in global image coordinates.
#[derive(Clone, Debug, Default)]
pub struct Overlay<'a> {
    pub roi: Option<Roi>,
    pub corners: Option<&'a CornerSet>,
    pub raw: &'a [Point2],
    pub corrected: &'a [Point2],
}

fn put(canvas: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < canvas.width() && (y as u32) < canvas.height() {
        canvas.put_pixel(x as u32, y as u32, color);
    }
}

fn draw_rect(canvas: &mut RgbImage, roi: &Roi, color: Rgb<u8>) {
    let (l, r) = (roi.left as i64, roi.right as i64 - 1);
    let (t, b) = (roi.top as i64, roi.bottom as i64 - 1);
    for x in l..=r {
        put(canvas, x, t, color);
        put(canvas, x, b, color);
    }
    for y in t..=b {
        put(canvas, l, y, color);
        put(canvas, r, y, color);
    }
}

fn draw_circle(canvas: &mut RgbImage, c: Point2, radius: f64, color: Rgb<u8>) {
    let steps = 32;
    for i in 0..steps {
        let a = i as f64 * std::f64::consts::TAU / steps as f64;
        let x = (c.x + radius * a.cos()).round() as i64;
        let y = (c.y + radius * a.sin()).round() as i64;
        put(canvas, x, y, color);
    }
}

fn draw_cross(canvas: &mut RgbImage, c: Point2, arm: i64, diagonal: bool, color: Rgb<u8>) {
    let (cx, cy) = (c.x.round() as i64, c.y.round() as i64);
    for d in -arm..=arm {
        if diagonal {
            put(canvas, cx + d, cy + d, color);
            put(canvas, cx + d, cy - d, color);
        } else {
            put(canvas, cx + d, cy, color);
            put(canvas, cx, cy + d, color);
        }
    }
}

/// Grayscale background with ROI box, corner circles, raw `x` and corrected `+` marks.
pub fn render_overlay(img: &GrayImage, overlay: &Overlay<'_>) -> RgbImage {
    let mut canvas = RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let v = img.get(x, y);
        Rgb([v, v, v])
    });
    if let Some(roi) = &overlay.roi {
        draw_rect(&mut canvas, roi, ROI_COLOR);
    }
    if let Some(corners) = overlay.corners {
        for c in corners.iter() {
            draw_circle(&mut canvas, c.position, 2.0, CORNER_COLOR);
        }
    }
    for &p in overlay.raw {
        draw_cross(&mut canvas, p, 3, true, RAW_COLOR);
    }
    for &p in overlay.corrected {
        draw_cross(&mut canvas, p, 3, false, CORRECTED_COLOR);
    }
    canvas
}

pub fn save_overlay(img: &GrayImage, overlay: &Overlay<'_>, path: impl AsRef<Path>) -> Result<()> {
    render_overlay(img, overlay).save(path)?;
    Ok(())
}
