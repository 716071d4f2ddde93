//! Run-length label encoding and the binary region payload.
//!
//! Payload layout (little-endian): 32-byte header `b"VREG"`, u16 format
//! version, u16 flags, u32 width, height, depth, i32 origin x, y, z; then
//! `w*h*d` raw image bytes; then `(u32 run, u64 label)` pairs, x-fastest.

use crate::error::{Error, Result};
use crate::model::SegmentId;
use crate::volume::Subvolume;

pub const MAGIC: [u8; 4] = *b"VREG";
pub const FORMAT_VERSION: u16 = 1;
pub const FLAG_RLE_LABELS: u16 = 1;
pub const HEADER_LEN: usize = 32;

pub fn encode_runs(labels: &[SegmentId]) -> Vec<(u32, SegmentId)> {
    let mut runs: Vec<(u32, SegmentId)> = Vec::new();
    for &l in labels {
        match runs.last_mut() {
            Some((n, v)) if *v == l && *n < u32::MAX => *n += 1,
            _ => runs.push((1, l)),
        }
    }
    runs
}

pub fn decode_runs(runs: &[(u32, SegmentId)]) -> Vec<SegmentId> {
    let total: usize = runs.iter().map(|r| r.0 as usize).sum();
    let mut out = Vec::with_capacity(total);
    for &(n, l) in runs {
        out.extend(std::iter::repeat_n(l, n as usize));
    }
    out
}

pub fn encode_region(sub: &Subvolume) -> Result<Vec<u8>> {
    let runs = encode_runs(&sub.labels);
    let mut out = Vec::with_capacity(HEADER_LEN + sub.image.len() + runs.len() * 12);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&FLAG_RLE_LABELS.to_le_bytes());
    for s in sub.shape {
        let s = u32::try_from(s).map_err(|_| Error::Param(format!("region side {s} too large")))?;
        out.extend_from_slice(&s.to_le_bytes());
    }
    for o in sub.origin {
        let o = i32::try_from(o).map_err(|_| Error::Param(format!("region origin {o} out of range")))?;
        out.extend_from_slice(&o.to_le_bytes());
    }
    debug_assert_eq!(out.len(), HEADER_LEN);
    out.extend_from_slice(&sub.image);
    for (n, l) in runs {
        out.extend_from_slice(&n.to_le_bytes());
        out.extend_from_slice(&l.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(buf: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if buf.len() < n {
        return Err(Error::Format("region payload truncated".into()));
    }
    let (head, rest) = buf.split_at(n);
    *buf = rest;
    Ok(head)
}

fn u32_at(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().expect("4 bytes"))
}

pub fn decode_region(bytes: &[u8]) -> Result<Subvolume> {
    let mut buf = bytes;
    let h = take(&mut buf, HEADER_LEN)?;
    if h[0..4] != MAGIC {
        return Err(Error::Format("bad region magic".into()));
    }
    let version = u16::from_le_bytes([h[4], h[5]]);
    let flags = u16::from_le_bytes([h[6], h[7]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported region format version {version}")));
    }
    let shape: [usize; 3] = std::array::from_fn(|a| u32_at(&h[8 + 4 * a..12 + 4 * a]) as usize);
    let origin: [i64; 3] = std::array::from_fn(|a| u32_at(&h[20 + 4 * a..24 + 4 * a]) as i32 as i64);
    let n: usize = shape.iter().product();
    let image = take(&mut buf, n)?.to_vec();
    let labels = if flags & FLAG_RLE_LABELS != 0 {
        let mut labels = Vec::with_capacity(n);
        while labels.len() < n {
            let r = take(&mut buf, 12)?;
            let run = u32_at(&r[0..4]) as usize;
            let label = u64::from_le_bytes(r[4..12].try_into().expect("8 bytes"));
            if run == 0 || labels.len() + run > n {
                return Err(Error::Format("label runs do not match the region size".into()));
            }
            labels.extend(std::iter::repeat_n(label, run));
        }
        labels
    } else {
        take(&mut buf, n * 8)?.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect()
    };
    if !buf.is_empty() {
        return Err(Error::Format("trailing bytes after region payload".into()));
    }
    Ok(Subvolume { origin, shape, image, labels })
}
