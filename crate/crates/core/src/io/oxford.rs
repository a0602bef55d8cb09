//! Adapter for polar radar images in the Oxford Radar RobotCar row layout.
//!
//! Each scan is an 8-bit grayscale PNG with one row per azimuth:
//!
//! ```text
//! bytes 0..8    timestamp, i64 little-endian, microseconds
//! bytes 8..10   azimuth encoder count, u16 little-endian, 5600 counts per turn
//! byte  10      validity flag, 255 = valid
//! bytes 11..    range-bin powers, one byte each
//! ```

use std::fs;
use std::io::{BufReader, Cursor};
use std::path::Path;

use super::{IoError, ScanArchive};
use crate::filter::PolarScan;

pub const OXFORD_RANGE_RESOLUTION: f64 = 0.0432;
pub const OXFORD_SWEEP_PERIOD: f64 = 0.25;
const ENCODER_COUNTS: f64 = 5600.0;
const METADATA_BYTES: usize = 11;
const VALID: u8 = 255;
const MAX_DECODED_BYTES: usize = 64 << 20;

/// Decodes every `*.png` in `dir`, in file-name order. Scans whose rows are all flagged
/// invalid are skipped.
pub fn read_oxford_polar(dir: &Path) -> Result<ScanArchive, IoError> {
    let entries = fs::read_dir(dir).map_err(|e| IoError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| IoError::io(dir, e))?;
        let path = entry.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    let mut scans: Vec<PolarScan> = Vec::new();
    for path in files {
        let bytes = fs::read(&path).map_err(|e| IoError::io(&path, e))?;
        let Some(scan) = decode_oxford_scan(&bytes)? else {
            continue;
        };
        if let Some(prev) = scans.last() {
            if !(scan.timestamp() > prev.timestamp()) {
                return Err(IoError::MalformedFile {
                    offset: 0,
                    reason: format!("{}: timestamp does not follow the previous scan", path.display()),
                });
            }
        }
        scans.push(scan);
    }
    ScanArchive::new(scans).map_err(|reason| IoError::MalformedFile { offset: 0, reason })
}

/// Decodes one polar image. Returns `None` when no row is flagged valid.
pub fn decode_oxford_scan(bytes: &[u8]) -> Result<Option<PolarScan>, IoError> {
    let malformed = |reason: String| IoError::MalformedFile { offset: 0, reason };
    let limits = png::Limits {
        bytes: MAX_DECODED_BYTES,
    };
    let decoder = png::Decoder::new_with_limits(BufReader::new(Cursor::new(bytes)), limits);
    let mut reader = decoder
        .read_info()
        .map_err(|e| malformed(format!("png: {e}")))?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale || depth != png::BitDepth::Eight {
        return Err(malformed(format!("expected 8-bit grayscale, found {color:?} {depth:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| malformed("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| malformed(format!("png: {e}")))?;
    let width = info.width as usize;
    let height = info.height as usize;
    let stride = info.line_size;
    if width <= METADATA_BYTES {
        return Err(IoError::MissingMetadata(format!(
            "rows are {width} bytes wide; {METADATA_BYTES} metadata bytes plus range bins expected"
        )));
    }
    let num_bins = width - METADATA_BYTES;

    let mut first_timestamp = None;
    let mut azimuths = Vec::with_capacity(height);
    let mut power = Vec::with_capacity(height * num_bins);
    let mut turns = 0.0;
    let mut last_raw: Option<f64> = None;
    for r in 0..height {
        let row = &buf[r * stride..r * stride + width];
        if row[10] != VALID {
            continue;
        }
        let micros = i64::from_le_bytes(row[0..8].try_into().unwrap());
        let encoder = u16::from_le_bytes(row[8..10].try_into().unwrap()) as f64;
        let raw = encoder / ENCODER_COUNTS * std::f64::consts::TAU;
        if let Some(prev) = last_raw {
            if raw < prev {
                turns += std::f64::consts::TAU;
            }
        }
        last_raw = Some(raw);
        azimuths.push(raw + turns);
        first_timestamp.get_or_insert(micros as f64 * 1e-6);
        power.extend(row[METADATA_BYTES..].iter().map(|&b| b as f32));
    }
    let Some(timestamp) = first_timestamp else {
        return Ok(None);
    };
    PolarScan::new(
        timestamp,
        OXFORD_SWEEP_PERIOD,
        OXFORD_RANGE_RESOLUTION,
        azimuths,
        num_bins,
        power,
    )
    .map(Some)
    .map_err(|e| malformed(format!("invalid scan: {e}")))
}
