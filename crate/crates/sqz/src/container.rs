//! The `SQZ1` compressed-container format shared by every codec.
//!
//! Layout (all multi-byte fields little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SQZ1" (0x53 0x51 0x5A 0x31)
//!      4     1  version = 1
//!      5     1  algorithm id
//!      6     1  flags (bit 0 = lossy)
//!      7     1  reserved = 0
//!      8     8  original_len (count of source bytes)
//!     16     4  integrity CRC-32
//!     20     8  payload_len
//!     28     -  payload
//! ```
//!
//! The CRC covers the source bytes for lossless algorithms (verified after
//! decoding) and the payload for lossy ones (verified when the container is
//! parsed). CRC-32 parameters: polynomial 0x04C11DB7 reflected, initial
//! value 0xFFFFFFFF, final xor 0xFFFFFFFF.

use std::fmt;

pub const MAGIC: [u8; 4] = *b"SQZ1";
pub const VERSION: u8 = 1;
/// Fixed header size in bytes; an empty payload yields a 28-byte container.
pub const HEADER_LEN: usize = 28;
/// Flags bit 0: payload does not reproduce the source bytes exactly.
pub const FLAG_LOSSY: u8 = 0x01;

/// Identifies which codec produced a payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Rle = 0,
    Lzw = 1,
    Lzss = 2,
    Lzar = 3,
    Predictive = 4,
    Wavelet = 5,
    Hybrid = 6,
}

impl Algorithm {
    pub fn from_u8(v: u8) -> Option<Algorithm> {
        match v {
            0 => Some(Algorithm::Rle),
            1 => Some(Algorithm::Lzw),
            2 => Some(Algorithm::Lzss),
            3 => Some(Algorithm::Lzar),
            4 => Some(Algorithm::Predictive),
            5 => Some(Algorithm::Wavelet),
            6 => Some(Algorithm::Hybrid),
            _ => None,
        }
    }

    pub fn is_lossy(self) -> bool {
        matches!(self, Algorithm::Wavelet | Algorithm::Hybrid)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rle => "rle",
            Algorithm::Lzw => "lzw",
            Algorithm::Lzss => "lzss",
            Algorithm::Lzar => "lzar",
            Algorithm::Predictive => "predictive",
            Algorithm::Wavelet => "wavelet",
            Algorithm::Hybrid => "hybrid",
        }
    }

    pub fn from_name(name: &str) -> Option<Algorithm> {
        match name {
            "rle" => Some(Algorithm::Rle),
            "lzw" => Some(Algorithm::Lzw),
            "lzss" => Some(Algorithm::Lzss),
            "lzar" => Some(Algorithm::Lzar),
            "predictive" => Some(Algorithm::Predictive),
            "wavelet" => Some(Algorithm::Wavelet),
            "hybrid" => Some(Algorithm::Hybrid),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parsed compressed stream: header fields plus payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codestream {
    pub algo: Algorithm,
    pub flags: u8,
    pub original_len: u64,
    pub integrity: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContainerError {
    BadMagic,
    UnsupportedVersion(u8),
    UnknownAlgorithm(u8),
    /// Flags bit 0 does not match the algorithm's lossiness.
    InconsistentFlags,
    /// Not enough bytes: (needed, available).
    Truncated(usize, usize),
    ChecksumMismatch,
}

impl fmt::Display for ContainerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContainerError::BadMagic => write!(f, "bad container magic"),
            ContainerError::UnsupportedVersion(v) => write!(f, "unsupported container version {v}"),
            ContainerError::UnknownAlgorithm(a) => write!(f, "unknown algorithm id {a}"),
            ContainerError::InconsistentFlags => write!(f, "lossy flag inconsistent with algorithm"),
            ContainerError::Truncated(need, have) => {
                write!(f, "truncated container: need {need} bytes, have {have}")
            }
            ContainerError::ChecksumMismatch => write!(f, "integrity checksum mismatch"),
        }
    }
}

impl std::error::Error for ContainerError {}

impl Codestream {
    /// Build a lossless stream; the CRC covers the source bytes.
    pub fn new_lossless(algo: Algorithm, original: &[u8], payload: Vec<u8>) -> Codestream {
        debug_assert!(!algo.is_lossy());
        Codestream {
            algo,
            flags: 0,
            original_len: original.len() as u64,
            integrity: crc32(original),
            payload,
        }
    }

    /// Build a lossy stream; the CRC covers the payload itself.
    pub fn new_lossy(algo: Algorithm, original_len: u64, payload: Vec<u8>) -> Codestream {
        debug_assert!(algo.is_lossy());
        Codestream {
            algo,
            flags: FLAG_LOSSY,
            original_len,
            integrity: crc32(&payload),
            payload,
        }
    }

    pub fn is_lossy(&self) -> bool {
        self.flags & FLAG_LOSSY != 0
    }

    /// Serialize to the normative byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.algo as u8);
        out.push(self.flags);
        out.push(0);
        out.extend_from_slice(&self.original_len.to_le_bytes());
        out.extend_from_slice(&self.integrity.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parse and validate a serialized container.
    ///
    /// For lossy streams the payload checksum is verified here; lossless
    /// streams are checked against their source bytes by the codec decoder.
    pub fn from_bytes(bytes: &[u8]) -> Result<Codestream, ContainerError> {
        if bytes.len() < HEADER_LEN {
            return Err(ContainerError::Truncated(HEADER_LEN, bytes.len()));
        }
        if bytes[0..4] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(ContainerError::UnsupportedVersion(bytes[4]));
        }
        let algo = Algorithm::from_u8(bytes[5]).ok_or(ContainerError::UnknownAlgorithm(bytes[5]))?;
        let flags = bytes[6];
        if (flags & FLAG_LOSSY != 0) != algo.is_lossy() {
            return Err(ContainerError::InconsistentFlags);
        }
        let original_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let integrity = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
        let payload_len = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
        let total = HEADER_LEN
            .checked_add(payload_len)
            .ok_or(ContainerError::Truncated(usize::MAX, bytes.len()))?;
        if bytes.len() < total {
            return Err(ContainerError::Truncated(total, bytes.len()));
        }
        let payload = bytes[HEADER_LEN..total].to_vec();
        if algo.is_lossy() && crc32(&payload) != integrity {
            return Err(ContainerError::ChecksumMismatch);
        }
        Ok(Codestream {
            algo,
            flags,
            original_len,
            integrity,
            payload,
        })
    }
}

// ---------------------------------------------------------------------------
// CRC-32 (reflected 0x04C11DB7, init/xorout 0xFFFFFFFF)
// ---------------------------------------------------------------------------

const CRC_TABLE: [u32; 256] = build_crc_table();

const fn build_crc_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ 0xEDB8_8320 // 0x04C11DB7 bit-reflected
            } else {
                crc >> 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in data {
        crc = (crc >> 8) ^ CRC_TABLE[((crc ^ b as u32) & 0xFF) as usize];
    }
    crc ^ 0xFFFF_FFFF
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc32_check_value() {
        // Standard check value for this CRC-32 variant.
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b""), 0x0000_0000);
    }

    #[test]
    fn empty_container_is_28_bytes() {
        let c = Codestream::new_lossless(Algorithm::Rle, b"", Vec::new());
        assert_eq!(c.to_bytes().len(), 28);
    }

    #[test]
    fn wrap_unwrap_is_field_identical() {
        let c = Codestream::new_lossless(Algorithm::Lzw, b"source bytes", vec![1, 2, 3, 4]);
        let parsed = Codestream::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(parsed, c);
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let mut bytes = Codestream::new_lossless(Algorithm::Rle, b"x", vec![1, b'x']).to_bytes();
        let mut wrong = bytes.clone();
        wrong[0] = b'Z';
        assert_eq!(Codestream::from_bytes(&wrong), Err(ContainerError::BadMagic));
        bytes[4] = 2;
        assert_eq!(
            Codestream::from_bytes(&bytes),
            Err(ContainerError::UnsupportedVersion(2))
        );
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = Codestream::new_lossless(Algorithm::Rle, b"abc", vec![1, b'a', 1, b'b']).to_bytes();
        for cut in 0..bytes.len() {
            assert!(Codestream::from_bytes(&bytes[..cut]).is_err(), "cut {cut}");
        }
    }

    #[test]
    fn lossy_flag_must_match_algorithm() {
        let mut bytes = Codestream::new_lossless(Algorithm::Rle, b"", Vec::new()).to_bytes();
        bytes[6] |= FLAG_LOSSY;
        assert_eq!(
            Codestream::from_bytes(&bytes),
            Err(ContainerError::InconsistentFlags)
        );
    }

    #[test]
    fn lossy_payload_corruption_is_detected_at_parse() {
        let c = Codestream::new_lossy(Algorithm::Wavelet, 100, vec![10, 20, 30, 40, 50]);
        let mut bytes = c.to_bytes();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x04;
        assert_eq!(
            Codestream::from_bytes(&bytes),
            Err(ContainerError::ChecksumMismatch)
        );
    }
}
