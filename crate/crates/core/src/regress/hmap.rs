//! `HMAP` heatmap container.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `HMAP` |
//! | 1     | version (`1`) |
//! | 4     | channel count K (u32) |
//! | 4     | width (u32) |
//! | 4     | height (u32) |
//! | 4     | stride (u32) |
//! | 4·K·W·H | f32 values, channel-major, row-major within a channel |

use std::fs;
use std::path::Path;

use super::Heatmap;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HMAP";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 * 4;

pub fn encode_hmap(channels: &[Heatmap]) -> Result<Vec<u8>> {
    let first = channels
        .first()
        .ok_or_else(|| Error::InvalidArgument("no heatmap channels to write".into()))?;
    let (w, h, s) = (first.width(), first.height(), first.stride());
    if channels
        .iter()
        .any(|c| c.width() != w || c.height() != h || c.stride() != s)
    {
        return Err(Error::DimMismatch(
            "heatmap channels differ in shape".into(),
        ));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + channels.len() * first.values().len() * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for field in [channels.len() as u32, w, h, s] {
        out.extend_from_slice(&field.to_le_bytes());
    }
    for c in channels {
        for v in c.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_hmap(bytes: &[u8]) -> Result<Vec<Heatmap>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::CorruptData("not an HMAP file".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "HMAP version {}",
            bytes[4]
        )));
    }
    let field = |i: usize| {
        let at = 5 + 4 * i;
        u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
    };
    let (k, w, h, s) = (field(0) as usize, field(1), field(2), field(3));
    if w == 0 || h == 0 {
        return Err(Error::CorruptData(format!(
            "HMAP declares empty {w}x{h} channels"
        )));
    }
    let per_channel = w as usize * h as usize;
    let expected = k
        .checked_mul(per_channel)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::CorruptData("HMAP header overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::CorruptData(format!(
            "HMAP payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    (0..k)
        .map(|c| {
            let chunk = &payload[c * per_channel * 4..(c + 1) * per_channel * 4];
            let values = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Heatmap::new(w, h, s, values)
        })
        .collect()
}

pub fn write_hmap(path: impl AsRef<Path>, channels: &[Heatmap]) -> Result<()> {
    fs::write(path, encode_hmap(channels)?)?;
    Ok(())
}

pub fn read_hmap(path: impl AsRef<Path>) -> Result<Vec<Heatmap>> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingHeatmapFile(path.to_path_buf()));
    }
    decode_hmap(&fs::read(path)?)
}
