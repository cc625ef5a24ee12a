//! Run-length coding: maximal-munch (count, value) byte pairs with runs
//! split at 255.

use crate::container::{Algorithm, Codestream};

use super::{expect_algo, verify_source_crc, CodecError};

pub fn encode(data: &[u8]) -> Codestream {
    Codestream::new_lossless(Algorithm::Rle, data, encode_payload(data))
}

pub(crate) fn encode_payload(data: &[u8]) -> Vec<u8> {
    let mut payload = Vec::new();
    let mut i = 0;
    while i < data.len() {
        let value = data[i];
        let mut run = 1usize;
        while run < 255 && i + run < data.len() && data[i + run] == value {
            run += 1;
        }
        payload.push(run as u8);
        payload.push(value);
        i += run;
    }
    payload
}

pub fn decode(c: &Codestream) -> Result<Vec<u8>, CodecError> {
    expect_algo(c, Algorithm::Rle)?;
    let out = decode_payload(&c.payload, c.original_len)?;
    verify_source_crc(c, &out)?;
    Ok(out)
}

pub(crate) fn decode_payload(payload: &[u8], original_len: u64) -> Result<Vec<u8>, CodecError> {
    if payload.len() % 2 != 0 {
        return Err(CodecError::CorruptStream("odd RLE payload length"));
    }
    let mut out = Vec::with_capacity(original_len as usize);
    for pair in payload.chunks_exact(2) {
        let count = pair[0] as usize;
        if count == 0 {
            return Err(CodecError::CorruptStream("zero RLE run count"));
        }
        if out.len() + count > original_len as usize {
            return Err(CodecError::CorruptStream("RLE output overruns declared length"));
        }
        out.resize(out.len() + count, pair[1]);
    }
    if out.len() as u64 != original_len {
        return Err(CodecError::CorruptStream("decoded length mismatch"));
    }
    Ok(out)
}
