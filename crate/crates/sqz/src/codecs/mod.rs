//! Lossless byte codecs behind the `SQZ1` container: RLE, LZW, LZSS and
//! LZAR (LZSS tokens entropy-coded with an adaptive arithmetic coder).
//!
//! Every decoder is strict: structural damage, a decoded length that does
//! not match the header, nonzero trailing padding, or a source-checksum
//! mismatch all fail with an error rather than returning partial output.

pub mod bits;
pub mod lzar;
pub mod lzss;
pub mod lzw;
pub mod rle;

use std::fmt;

use crate::container::{Algorithm, Codestream, ContainerError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    Container(ContainerError),
    /// Structurally invalid payload; the message names the defect.
    CorruptStream(&'static str),
    WrongAlgorithm { expected: Algorithm, found: Algorithm },
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::Container(e) => write!(f, "{e}"),
            CodecError::CorruptStream(msg) => write!(f, "corrupt stream: {msg}"),
            CodecError::WrongAlgorithm { expected, found } => {
                write!(f, "expected {expected} stream, found {found}")
            }
        }
    }
}

impl std::error::Error for CodecError {}

impl From<ContainerError> for CodecError {
    fn from(e: ContainerError) -> CodecError {
        CodecError::Container(e)
    }
}

pub(crate) fn expect_algo(c: &Codestream, expected: Algorithm) -> Result<(), CodecError> {
    if c.algo != expected {
        return Err(CodecError::WrongAlgorithm { expected, found: c.algo });
    }
    Ok(())
}

pub(crate) fn verify_source_crc(c: &Codestream, decoded: &[u8]) -> Result<(), CodecError> {
    if decoded.len() as u64 != c.original_len {
        return Err(CodecError::CorruptStream("decoded length mismatch"));
    }
    if crate::container::crc32(decoded) != c.integrity {
        return Err(CodecError::Container(ContainerError::ChecksumMismatch));
    }
    Ok(())
}

/// Encode `data` with the named lossless algorithm.
pub fn encode(algo: Algorithm, data: &[u8]) -> Result<Codestream, CodecError> {
    match algo {
        Algorithm::Rle => Ok(rle::encode(data)),
        Algorithm::Lzw => Ok(lzw::encode(data)),
        Algorithm::Lzss => Ok(lzss::encode(data)),
        Algorithm::Lzar => Ok(lzar::encode(data)),
        _ => Err(CodecError::CorruptStream("not a byte codec")),
    }
}

/// Decode a lossless stream produced by [`encode`].
pub fn decode(c: &Codestream) -> Result<Vec<u8>, CodecError> {
    match c.algo {
        Algorithm::Rle => rle::decode(c),
        Algorithm::Lzw => lzw::decode(c),
        Algorithm::Lzss => lzss::decode(c),
        Algorithm::Lzar => lzar::decode(c),
        _ => Err(CodecError::CorruptStream("not a byte codec")),
    }
}

pub const BYTE_CODECS: [Algorithm; 4] = [
    Algorithm::Rle,
    Algorithm::Lzw,
    Algorithm::Lzss,
    Algorithm::Lzar,
];
