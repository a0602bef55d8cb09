//! Little-endian binary scan archive.
//!
//! ```text
//! header   magic "RDRSCAN1" | version u32 | azimuths u32 | bins u32
//!          | range_resolution f64 | sweep_period f64
//! record   timestamp f64 | rows u32 | rows × azimuth f64 | rows × bins × power f32
//! ```
//! Records follow the header until end of file. `azimuths` in the header is the nominal
//! row count; individual records may hold fewer rows when invalid ones were dropped.

use std::fs;
use std::path::Path;

use super::{write_atomic, IoError};
use crate::filter::PolarScan;

const MAGIC: &[u8; 8] = b"RDRSCAN1";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8 + 8;

/// Scans in strictly increasing timestamp order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanArchive {
    scans: Vec<PolarScan>,
}

impl ScanArchive {
    pub fn new(scans: Vec<PolarScan>) -> Result<Self, String> {
        if let Some(i) = scans
            .windows(2)
            .position(|w| !(w[1].timestamp() > w[0].timestamp()))
        {
            return Err(format!("scan {} does not follow scan {} in time", i + 1, i));
        }
        Ok(Self { scans })
    }

    pub fn scans(&self) -> &[PolarScan] {
        &self.scans
    }

    pub fn into_scans(self) -> Vec<PolarScan> {
        self.scans
    }

    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }
}

pub fn encode_scan_archive(archive: &ScanArchive) -> Result<Vec<u8>, IoError> {
    let scans = archive.scans();
    let (m, n, res, period) = match scans.first() {
        Some(s) => (
            s.num_azimuths(),
            s.num_bins(),
            s.range_resolution(),
            s.sweep_period(),
        ),
        None => (0, 0, 0.0, 0.0),
    };
    for (i, s) in scans.iter().enumerate() {
        if s.num_bins() != n || s.range_resolution() != res || s.sweep_period() != period {
            return Err(IoError::Unsupported(format!(
                "scan {i} geometry differs from the first scan"
            )));
        }
    }
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| IoError::Unsupported(format!("dimension {v} exceeds u32")))
    };
    let payload: usize = scans
        .iter()
        .map(|s| 12 + 8 * s.num_azimuths() + 4 * s.power().len())
        .sum();
    let mut out = Vec::with_capacity(HEADER_LEN + payload);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(m)?.to_le_bytes());
    out.extend_from_slice(&to_u32(n)?.to_le_bytes());
    out.extend_from_slice(&res.to_le_bytes());
    out.extend_from_slice(&period.to_le_bytes());
    for s in scans {
        out.extend_from_slice(&s.timestamp().to_le_bytes());
        out.extend_from_slice(&to_u32(s.num_azimuths())?.to_le_bytes());
        for a in s.azimuths() {
            out.extend_from_slice(&a.to_le_bytes());
        }
        for p in s.power() {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_scan_archive(archive: &ScanArchive, path: &Path) -> Result<(), IoError> {
    write_atomic(path, &encode_scan_archive(archive)?)
}

pub fn read_scan_archive(path: &Path) -> Result<ScanArchive, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_scan_archive(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8], IoError> {
        if self.remaining() < len {
            return Err(IoError::MalformedFile {
                offset: self.pos as u64,
                reason: format!("truncated {what}"),
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn malformed(offset: usize, reason: impl Into<String>) -> IoError {
    IoError::MalformedFile {
        offset: offset as u64,
        reason: reason.into(),
    }
}

pub fn decode_scan_archive(bytes: &[u8]) -> Result<ScanArchive, IoError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8, "magic")? != MAGIC {
        return Err(malformed(0, "bad magic"));
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(malformed(8, format!("unsupported version {version}")));
    }
    let _nominal_rows = cur.u32("azimuth count")?;
    let n = cur.u32("bin count")? as usize;
    let res = cur.f64("range resolution")?;
    let period = cur.f64("sweep period")?;

    let mut scans: Vec<PolarScan> = Vec::new();
    while cur.remaining() > 0 {
        let start = cur.pos;
        let timestamp = cur.f64("timestamp")?;
        if let Some(prev) = scans.last() {
            if !(timestamp > prev.timestamp()) {
                return Err(malformed(start, "timestamps are not strictly increasing"));
            }
        }
        let rows = cur.u32("row count")? as usize;
        let needed = n
            .checked_mul(4)
            .and_then(|b| b.checked_add(8))
            .and_then(|b| b.checked_mul(rows));
        match needed {
            Some(needed) if needed <= cur.remaining() => {}
            _ => return Err(malformed(cur.pos, "truncated scan record")),
        }
        let azimuths: Vec<f64> = cur
            .take(8 * rows, "azimuths")?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let power: Vec<f32> = cur
            .take(4 * rows * n, "power grid")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let scan = PolarScan::new(timestamp, period, res, azimuths, n, power)
            .map_err(|e| malformed(start, format!("invalid scan: {e}")))?;
        scans.push(scan);
    }
    Ok(ScanArchive { scans })
}
