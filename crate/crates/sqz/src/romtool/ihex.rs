//! Intel HEX ingestion for linked firmware images.
//!
//! Supported record types: 00 (data), 01 (end of file), 04 (extended
//! linear address), 05 (start linear address, captured as the entry
//! point). Every record's two's-complement checksum is validated, and
//! overlapping data is an error. Adjacent data merges into spans.

use std::collections::BTreeMap;

use super::RomError;

/// Firmware bytes as sorted, non-overlapping, non-adjacent address spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RomImage {
    pub spans: Vec<(u32, Vec<u8>)>,
    pub entry_point: Option<u32>,
}

impl RomImage {
    pub fn from_binary(base: u32, bytes: &[u8]) -> RomImage {
        if bytes.is_empty() {
            return RomImage { spans: Vec::new(), entry_point: None };
        }
        RomImage { spans: vec![(base, bytes.to_vec())], entry_point: None }
    }

    pub fn total_bytes(&self) -> u64 {
        self.spans.iter().map(|(_, b)| b.len() as u64).sum()
    }

    /// Bytes of [start, end); None when any address in the range is absent.
    pub fn extract(&self, start: u32, end: u32) -> Option<Vec<u8>> {
        if start >= end {
            return None;
        }
        let mut out = Vec::with_capacity((end - start) as usize);
        let mut cursor = start;
        for (base, bytes) in &self.spans {
            let span_end = base + bytes.len() as u32;
            if cursor < *base {
                return None; // gap before the next span
            }
            if cursor >= span_end {
                continue;
            }
            let from = (cursor - base) as usize;
            let to = (end.min(span_end) - base) as usize;
            out.extend_from_slice(&bytes[from..to]);
            cursor = end.min(span_end);
            if cursor == end {
                return Some(out);
            }
        }
        None
    }
}

pub fn parse_ihex(text: &str) -> Result<RomImage, RomError> {
    let mut data: BTreeMap<u32, Vec<u8>> = BTreeMap::new();
    let mut upper: u32 = 0;
    let mut entry_point = None;
    let mut saw_eof = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if saw_eof {
            return Err(RomError::BadRecord { line: lineno, reason: "record after EOF".into() });
        }
        let body = line
            .strip_prefix(':')
            .ok_or(RomError::BadRecord { line: lineno, reason: "missing ':' start code".into() })?;
        if body.len() % 2 != 0 || body.len() < 10 {
            return Err(RomError::BadRecord { line: lineno, reason: "odd or short record".into() });
        }
        let mut bytes = Vec::with_capacity(body.len() / 2);
        for pair in body.as_bytes().chunks(2) {
            let s = std::str::from_utf8(pair).map_err(|_| RomError::BadHexDigit { line: lineno })?;
            bytes.push(u8::from_str_radix(s, 16).map_err(|_| RomError::BadHexDigit { line: lineno })?);
        }
        let count = bytes[0] as usize;
        if bytes.len() != count + 5 {
            return Err(RomError::BadRecord {
                line: lineno,
                reason: format!("length field {count} disagrees with record size"),
            });
        }
        let sum: u8 = bytes.iter().fold(0u8, |acc, b| acc.wrapping_add(*b));
        if sum != 0 {
            return Err(RomError::BadChecksum { line: lineno });
        }
        let address = u16::from_be_bytes([bytes[1], bytes[2]]) as u32;
        let record_type = bytes[3];
        let payload = &bytes[4..4 + count];
        match record_type {
            0x00 => {
                let abs = (upper << 16) + address;
                for (i, &b) in payload.iter().enumerate() {
                    let a = abs + i as u32;
                    if data.insert(a, vec![b]).is_some() {
                        return Err(RomError::OverlappingData { address: a });
                    }
                }
            }
            0x01 => {
                if count != 0 {
                    return Err(RomError::BadRecord {
                        line: lineno,
                        reason: "EOF record with data".into(),
                    });
                }
                saw_eof = true;
            }
            0x04 => {
                if count != 2 {
                    return Err(RomError::BadRecord {
                        line: lineno,
                        reason: "extended linear address needs 2 bytes".into(),
                    });
                }
                upper = u16::from_be_bytes([payload[0], payload[1]]) as u32;
            }
            0x05 => {
                if count != 4 {
                    return Err(RomError::BadRecord {
                        line: lineno,
                        reason: "start linear address needs 4 bytes".into(),
                    });
                }
                entry_point = Some(u32::from_be_bytes(payload.try_into().unwrap()));
            }
            other => {
                return Err(RomError::UnsupportedRecordType { line: lineno, record_type: other })
            }
        }
    }
    if !saw_eof {
        return Err(RomError::MissingEof);
    }

    // Merge per-byte entries into contiguous spans.
    let mut spans: Vec<(u32, Vec<u8>)> = Vec::new();
    for (addr, byte) in data {
        match spans.last_mut() {
            Some((base, bytes)) if *base + bytes.len() as u32 == addr => bytes.push(byte[0]),
            _ => spans.push((addr, byte)),
        }
    }
    Ok(RomImage { spans, entry_point })
}

/// Render an image back to Intel HEX (16-byte data records). Used to build
/// test fixtures and demo inputs.
pub fn to_ihex(img: &RomImage) -> String {
    let mut out = String::new();
    let mut upper: u32 = u32::MAX;
    let emit = |record: &[u8], out: &mut String| {
        let sum: u8 = record.iter().fold(0u8, |acc, b| acc.wrapping_add(*b));
        out.push(':');
        for b in record {
            out.push_str(&format!("{b:02X}"));
        }
        out.push_str(&format!("{:02X}\n", (!sum).wrapping_add(1)));
    };
    for (base, bytes) in &img.spans {
        let mut addr = *base;
        let mut rest = &bytes[..];
        while !rest.is_empty() {
            let seg_upper = addr >> 16;
            if seg_upper != upper {
                upper = seg_upper;
                let u = (upper as u16).to_be_bytes();
                emit(&[2, 0, 0, 0x04, u[0], u[1]], &mut out);
            }
            // Keep each record inside one 64 KiB page.
            let page_left = 0x1_0000 - (addr & 0xFFFF);
            let n = rest.len().min(16).min(page_left as usize);
            let a = ((addr & 0xFFFF) as u16).to_be_bytes();
            let mut rec = vec![n as u8, a[0], a[1], 0x00];
            rec.extend_from_slice(&rest[..n]);
            emit(&rec, &mut out);
            addr += n as u32;
            rest = &rest[n..];
        }
    }
    if let Some(ep) = img.entry_point {
        let e = ep.to_be_bytes();
        emit(&[4, 0, 0, 0x05, e[0], e[1], e[2], e[3]], &mut out);
    }
    out.push_str(":00000001FF\n");
    out
}
