//! LZW with 9..12-bit variable-width codes, MSB-first packing.
//!
//! Code space: 0..=255 are the single bytes, 256 is CLEAR, 257 is END,
//! dynamic entries start at 258 and the table tops out at 4096 entries.
//! The encoder emits CLEAR first and again whenever the table fills.
//!
//! Width schedule: a code is written with `width_for(n)` bits where `n` is
//! the encoder's next free code at emission time — except END, which uses
//! `width_for(n + 1)`. The decoder lags the encoder by exactly one table
//! entry whenever it holds a pending prefix, so it reads with
//! `width_for(n + 1)` in that state and `width_for(n)` otherwise. This
//! keeps both sides in lockstep across the 512/1024/2048 boundaries,
//! including the END-straddles-a-boundary case.

use std::collections::HashMap;

use crate::container::{Algorithm, Codestream};

use super::bits::{BitReader, BitWriter};
use super::{expect_algo, verify_source_crc, CodecError};

const CLEAR: u32 = 256;
const END: u32 = 257;
const FIRST_CODE: u32 = 258;
const TABLE_LIMIT: u32 = 4096;

fn width_for(next_code: u32) -> u32 {
    match next_code {
        0..=511 => 9,
        512..=1023 => 10,
        1024..=2047 => 11,
        _ => 12,
    }
}

pub fn encode(data: &[u8]) -> Codestream {
    Codestream::new_lossless(Algorithm::Lzw, data, compress_payload(data))
}

pub(crate) fn compress_payload(data: &[u8]) -> Vec<u8> {
    let mut w = BitWriter::new();
    let mut dict: HashMap<(u16, u8), u16> = HashMap::new();
    let mut next_code = FIRST_CODE;
    w.put(CLEAR, width_for(next_code));

    let mut cur: Option<u16> = None;
    for &b in data {
        match cur {
            None => cur = Some(b as u16),
            Some(c) => {
                if let Some(&code) = dict.get(&(c, b)) {
                    cur = Some(code);
                } else {
                    w.put(c as u32, width_for(next_code));
                    if next_code == TABLE_LIMIT {
                        w.put(CLEAR, width_for(next_code + 1));
                        dict.clear();
                        next_code = FIRST_CODE;
                    } else {
                        dict.insert((c, b), next_code as u16);
                        next_code += 1;
                    }
                    cur = Some(b as u16);
                }
            }
        }
    }
    if let Some(c) = cur {
        w.put(c as u32, width_for(next_code));
    }
    w.put(END, width_for(next_code + 1));
    w.finish()
}

pub fn decode(c: &Codestream) -> Result<Vec<u8>, CodecError> {
    expect_algo(c, Algorithm::Lzw)?;
    let out = decompress_payload(&c.payload, Some(c.original_len))?;
    verify_source_crc(c, &out)?;
    Ok(out)
}

/// Dynamic table entry: prefix code, appended byte, first byte of the
/// expansion (kept so KwKwK and entry registration are O(1)).
#[derive(Clone, Copy)]
struct Entry {
    prefix: u16,
    byte: u8,
    first: u8,
}

/// Decode an LZW code stream. When `expected_len` is given the output may
/// not exceed it and must match it exactly at END.
pub(crate) fn decompress_payload(
    payload: &[u8],
    expected_len: Option<u64>,
) -> Result<Vec<u8>, CodecError> {
    let mut r = BitReader::new(payload);
    let mut dict: Vec<Entry> = Vec::new();
    let mut next_code = FIRST_CODE;
    let mut prev: Option<u16> = None;
    let mut out = Vec::with_capacity(expected_len.unwrap_or(0) as usize);

    let first_of = |code: u16, dict: &[Entry]| -> u8 {
        if (code as u32) < 256 {
            code as u8
        } else {
            dict[code as usize - FIRST_CODE as usize].first
        }
    };

    loop {
        let width = match prev {
            Some(_) => width_for(next_code + 1),
            None => width_for(next_code),
        };
        let code = r
            .get(width)
            .ok_or(CodecError::CorruptStream("LZW stream ends without END"))?;
        match code {
            CLEAR => {
                dict.clear();
                next_code = FIRST_CODE;
                prev = None;
            }
            END => break,
            _ => {
                let exists = code < 256 || (code >= FIRST_CODE && code < next_code);
                let kwkwk = code == next_code && prev.is_some() && next_code < TABLE_LIMIT;
                if !exists && !kwkwk {
                    return Err(CodecError::CorruptStream("LZW code out of range"));
                }
                let first = if kwkwk {
                    first_of(prev.unwrap(), &dict)
                } else {
                    first_of(code as u16, &dict)
                };
                if let Some(p) = prev {
                    if next_code < TABLE_LIMIT {
                        dict.push(Entry { prefix: p, byte: first, first: first_of(p, &dict) });
                        next_code += 1;
                    }
                }
                expand(code as u16, &dict, &mut out);
                if let Some(limit) = expected_len {
                    if out.len() as u64 > limit {
                        return Err(CodecError::CorruptStream("LZW output overruns declared length"));
                    }
                }
                prev = Some(code as u16);
            }
        }
    }
    if !r.only_zero_padding_remains() {
        return Err(CodecError::CorruptStream("garbage after LZW END code"));
    }
    if let Some(limit) = expected_len {
        if out.len() as u64 != limit {
            return Err(CodecError::CorruptStream("decoded length mismatch"));
        }
    }
    Ok(out)
}

fn expand(code: u16, dict: &[Entry], out: &mut Vec<u8>) {
    let start = out.len();
    let mut c = code as u32;
    while c >= FIRST_CODE {
        let e = dict[c as usize - FIRST_CODE as usize];
        out.push(e.byte);
        c = e.prefix as u32;
    }
    out.push(c as u8);
    out[start..].reverse();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    /// Independent oracle: packs a code list MSB-first at the widths the
    /// format prescribes, tracking the table size exactly as a by-hand
    /// trace would.
    fn pack_codes_oracle(codes_and_widths: &[(u32, u32)]) -> Vec<u8> {
        let mut bits = String::new();
        for &(code, width) in codes_and_widths {
            bits.push_str(&format!("{code:0width$b}", width = width as usize));
        }
        while bits.len() % 8 != 0 {
            bits.push('0');
        }
        bits.as_bytes()
            .chunks(8)
            .map(|c| u8::from_str_radix(std::str::from_utf8(c).unwrap(), 2).unwrap())
            .collect()
    }

    #[test]
    fn empty_input_is_clear_then_end() {
        let c = encode(b"");
        let expected = pack_codes_oracle(&[(CLEAR, 9), (END, 9)]);
        assert_eq!(c.payload, expected);
        assert_eq!(decode(&c).unwrap(), b"");
    }

    #[test]
    fn eight_a_bytes_match_hand_trace() {
        // Hand trace of "AAAAAAAA": emit CLEAR, then 'A'(65) [add 258=AA],
        // 258 [add 259=AAA], 259 [add 260=AAAA], final 258, END.
        // All codes fit in 9 bits.
        let c = encode(b"AAAAAAAA");
        let codes = [(CLEAR, 9), (65, 9), (258, 9), (259, 9), (258, 9), (END, 9)];
        let expected = pack_codes_oracle(&codes);
        assert_eq!(expected, vec![0x80, 0x10, 0x60, 0x50, 0x38, 0x14, 0x04]);
        assert_eq!(c.payload, expected);
        assert_eq!(decode(&c).unwrap(), b"AAAAAAAA");
    }

    #[test]
    fn kwkwk_case_round_trips() {
        // Classic KwKwK trigger.
        let data = b"abababababababab";
        let c = encode(data);
        assert_eq!(decode(&c).unwrap(), data);
    }

    #[test]
    fn random_bytes_round_trip_even_when_incompressible() {
        let mut rng = DetRng::new(0xABCD);
        let mut data = vec![0u8; 10_000];
        rng.fill_bytes(&mut data);
        let c = encode(&data);
        assert_eq!(decode(&c).unwrap(), data);
        // Incompressible input may expand; the contract is only round-trip.
    }

    #[test]
    fn long_runs_cross_width_boundaries_and_table_reset() {
        // Enough distinct material to push the table past 4096 entries.
        let mut rng = DetRng::new(9);
        let mut data = Vec::new();
        for _ in 0..40_000 {
            data.push((rng.next_below(7) * 37) as u8);
        }
        data.extend(std::iter::repeat(0u8).take(30_000));
        let c = encode(&data);
        assert_eq!(decode(&c).unwrap(), data);
    }

    #[test]
    fn codes_never_exceed_table_size() {
        // Structural scan of the emitted stream with an independent reader.
        let mut rng = DetRng::new(31);
        let mut data = vec![0u8; 30_000];
        for b in data.iter_mut() {
            *b = rng.next_below(11) as u8;
        }
        let payload = compress_payload(&data);
        let mut r = BitReader::new(&payload);
        let mut next_code = FIRST_CODE;
        let mut have_prev = false;
        loop {
            let width = if have_prev { width_for(next_code + 1) } else { width_for(next_code) };
            let code = r.get(width).expect("stream must contain END");
            if code == END {
                break;
            }
            if code == CLEAR {
                next_code = FIRST_CODE;
                have_prev = false;
                continue;
            }
            assert!(code <= next_code, "code {code} exceeds table size {next_code}");
            if have_prev && next_code < TABLE_LIMIT {
                next_code += 1;
            }
            have_prev = true;
        }
    }

    #[test]
    fn truncated_or_padded_streams_fail() {
        let c = encode(b"hello hello hello");
        // Drop END: truncate to before the last code.
        let mut short = c.clone();
        short.payload.truncate(short.payload.len() - 2);
        assert!(decode(&short).is_err());
        // Nonzero padding after END.
        let mut padded = c.clone();
        padded.payload.push(0xFF);
        assert!(decode(&padded).is_err());
    }
}
