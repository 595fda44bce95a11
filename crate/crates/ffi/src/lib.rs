//! C ABI over `polelocate`.
//!
//! Objects are opaque handles created by `pl_*_new`/`pl_*_load`/`pl_detect_*`
//! style calls and released with the matching `pl_*_free`. Every fallible call
//! returns a [`PlStatus`]; on failure `pl_last_error_message` describes the
//! error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use polelocate::config::PipelineConfig;
use polelocate::corner::{detect_top_n, CornerSet};
use polelocate::imagecore::{load_image, GrayImage};
use polelocate::pipeline::{process_image, PoleRecord, SampleRecord};
use polelocate::roi::{estimate_roi, Roi};
use polelocate::Error;

/// Bumped on any incompatible change to the functions or structs below.
pub const PL_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    FileNotFound = 3,
    UnsupportedFormat = 4,
    CorruptData = 5,
    Io = 6,
    /// Any other failure caused by the input data.
    Data = 7,
    Internal = 8,
    Panic = 9,
}

impl From<&Error> for PlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::FileNotFound(_) | Error::MissingHeatmapFile(_) => PlStatus::FileNotFound,
            Error::UnsupportedFormat(_) => PlStatus::UnsupportedFormat,
            Error::CorruptData(_) | Error::Json(_) | Error::Image(_) => PlStatus::CorruptData,
            Error::Io(_) => PlStatus::Io,
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => PlStatus::InvalidArgument,
            Error::ZeroWeights => PlStatus::Internal,
            _ => PlStatus::Data,
        }
    }
}

/// Grayscale image handle.
pub struct PlImage(GrayImage);

/// Ranked corner set handle.
pub struct PlCornerSet(CornerSet);

/// Pipeline configuration handle.
pub struct PlConfig(PipelineConfig);

/// Result of a full pipeline run on one image.
pub struct PlResult(SampleRecord);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlCorner {
    pub x: f64,
    pub y: f64,
    pub response: f64,
    pub orientation: f64,
}

/// Half-open rectangle `[top, bottom) x [left, right)`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlRoi {
    pub top: u32,
    pub bottom: u32,
    pub left: u32,
    pub right: u32,
}

impl From<Roi> for PlRoi {
    fn from(r: Roi) -> Self {
        PlRoi {
            top: r.top,
            bottom: r.bottom,
            left: r.left,
            right: r.right,
        }
    }
}

/// One pole in global image coordinates.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlPole {
    pub index: u32,
    pub raw_x: f64,
    pub raw_y: f64,
    pub score: f64,
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub beta: f64,
    /// 1 when a reference corner was matched; `corner_x`/`corner_y` are 0 otherwise.
    pub has_corner: u8,
    pub corner_x: f64,
    pub corner_y: f64,
    pub low_confidence: u8,
}

impl From<&PoleRecord> for PlPole {
    fn from(p: &PoleRecord) -> Self {
        PlPole {
            index: p.index as u32,
            raw_x: p.raw.x,
            raw_y: p.raw.y,
            score: p.raw.score,
            x: p.corrected.x,
            y: p.corrected.y,
            alpha: p.alpha,
            beta: p.beta,
            has_corner: p.corner.is_some() as u8,
            corner_x: p.corner.map_or(0.0, |c| c.x),
            corner_y: p.corner.map_or(0.0, |c| c.y),
            low_confidence: p.low_confidence as u8,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: PlStatus, msg: impl Into<String>) -> PlStatus {
    set_last_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), PlStatus>) -> PlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PlStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: polelocate::Result<T>) -> Result<T, PlStatus> {
    r.map_err(|e| fail(PlStatus::from(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, PlStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, PlStatus> {
    p.as_mut()
        .ok_or_else(|| fail(PlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, PlStatus> {
    if p.is_null() {
        return Err(fail(PlStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PlStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

#[no_mangle]
pub extern "C" fn pl_abi_version() -> u32 {
    PL_ABI_VERSION
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads an 8-bit PGM or PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_image_load(path: *const c_char, out: *mut *mut PlImage) -> PlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let img = lift(load_image(path_arg(path)?))?;
        *out = boxed(PlImage(img));
        Ok(())
    })
}

/// Copies `height` rows of `width` bytes, `row_stride` bytes apart.
///
/// # Safety
/// `data` must point to at least `row_stride * (height - 1) + width` bytes.
#[no_mangle]
pub unsafe extern "C" fn pl_image_from_pixels(
    data: *const u8,
    width: u32,
    height: u32,
    row_stride: usize,
    out: *mut *mut PlImage,
) -> PlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if data.is_null() {
            return Err(fail(PlStatus::NullPointer, "data is null"));
        }
        if width == 0 || height == 0 || row_stride < width as usize {
            return Err(fail(
                PlStatus::InvalidArgument,
                format!("bad geometry {width}x{height}, stride {row_stride}"),
            ));
        }
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height as usize {
            let row = std::slice::from_raw_parts(data.add(y * row_stride), width as usize);
            pixels.extend_from_slice(row);
        }
        *out = boxed(PlImage(lift(GrayImage::new(width, height, pixels))?));
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_image_width(img: *const PlImage) -> u32 {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_image_height(img: *const PlImage) -> u32 {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `img` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_image_free(img: *mut PlImage) {
    free(img)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_config_default(out: *mut *mut PlConfig) -> PlStatus {
    guard(|| {
        *out_ptr(out, "out")? = boxed(PlConfig(PipelineConfig::default()));
        Ok(())
    })
}

/// Reads a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_config_load(path: *const c_char, out: *mut *mut PlConfig) -> PlStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = lift(PipelineConfig::load(path_arg(path)?))?;
        lift(cfg.validate())?;
        *out = boxed(PlConfig(cfg));
        Ok(())
    })
}

/// Sets the number of ranked corners kept.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_config_set_corner_count(cfg: *mut PlConfig, n: usize) -> PlStatus {
    guard(|| {
        let cfg = out_ptr(cfg, "cfg")?;
        if n == 0 {
            return Err(fail(PlStatus::InvalidArgument, "corner count must be >= 1"));
        }
        cfg.0.corner.n = n;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_config_free(cfg: *mut PlConfig) {
    free(cfg)
}

/// FAST-9 corners ranked by Harris response, at most `n`.
///
/// # Safety
/// `img` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_detect_corners(
    img: *const PlImage,
    n: usize,
    threshold: u8,
    out: *mut *mut PlCornerSet,
) -> PlStatus {
    guard(|| {
        let img = deref(img, "img")?;
        let out = out_ptr(out, "out")?;
        *out = boxed(PlCornerSet(lift(detect_top_n(&img.0, n, threshold))?));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_corner_set_len(set: *const PlCornerSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_corner_set_get(
    set: *const PlCornerSet,
    index: usize,
    out: *mut PlCorner,
) -> PlStatus {
    guard(|| {
        let set = deref(set, "set")?;
        let out = out_ptr(out, "out")?;
        let c = set.0.corners.get(index).ok_or_else(|| {
            fail(
                PlStatus::InvalidArgument,
                format!("index {index} out of range"),
            )
        })?;
        *out = PlCorner {
            x: c.position.x,
            y: c.position.y,
            response: c.response,
            orientation: c.orientation,
        };
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_corner_set_free(set: *mut PlCornerSet) {
    free(set)
}

/// ROI from corners; a null `cfg` uses the defaults.
///
/// # Safety
/// `img` and `corners` must be live handles; `cfg` null or live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_estimate_roi(
    img: *const PlImage,
    corners: *const PlCornerSet,
    cfg: *const PlConfig,
    out: *mut PlRoi,
) -> PlStatus {
    guard(|| {
        let img = deref(img, "img")?;
        let corners = deref(corners, "corners")?;
        let out = out_ptr(out, "out")?;
        let params = cfg.as_ref().map(|c| c.0.roi).unwrap_or_default();
        *out = lift(estimate_roi(&img.0, &corners.0, &params))?.roi.into();
        Ok(())
    })
}

/// Corners, ROI, prediction and correction; a null `cfg` uses the defaults.
///
/// # Safety
/// `img` must be a live handle; `cfg` null or live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_pipeline_run(
    img: *const PlImage,
    cfg: *const PlConfig,
    out: *mut *mut PlResult,
) -> PlStatus {
    guard(|| {
        let img = deref(img, "img")?;
        let out = out_ptr(out, "out")?;
        let default = PipelineConfig::default();
        let cfg = cfg.as_ref().map_or(&default, |c| &c.0);
        lift(cfg.validate())?;
        let predictor = lift(cfg.predictor.build())?;
        let outcome = lift(process_image(&img.0, None, cfg, predictor.as_ref()))?;
        *out = boxed(PlResult(outcome.to_record("")));
        Ok(())
    })
}

/// # Safety
/// `res` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_result_roi(res: *const PlResult, out: *mut PlRoi) -> PlStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let out = out_ptr(out, "out")?;
        let roi = res
            .0
            .roi
            .ok_or_else(|| fail(PlStatus::Data, "result has no ROI"))?;
        *out = roi.into();
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_result_pole_count(res: *const PlResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.poles.len())
}

/// # Safety
/// `res` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_result_pole(
    res: *const PlResult,
    index: usize,
    out: *mut PlPole,
) -> PlStatus {
    guard(|| {
        let res = deref(res, "res")?;
        let out = out_ptr(out, "out")?;
        let p = res.0.poles.get(index).ok_or_else(|| {
            fail(
                PlStatus::InvalidArgument,
                format!("index {index} out of range"),
            )
        })?;
        *out = p.into();
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_result_free(res: *mut PlResult) {
    free(res)
}
