//! LZSS over a 4096-byte window that conceptually starts zero-filled.
//!
//! Matching is greedy longest-match with minimum length 3 and maximum 18;
//! ties break toward the smallest offset, so the token stream is a pure
//! function of the input. Tokens are serialized in groups of eight behind
//! a control byte (bit k set = token k is a literal); a match is two bytes:
//! low 8 bits of (offset-1), then high 4 bits of (offset-1) in the upper
//! nibble and (length-3) in the lower nibble.

use crate::container::{Algorithm, Codestream};

use super::{expect_algo, verify_source_crc, CodecError};

pub const WINDOW: usize = 4096;
pub const MIN_MATCH: usize = 3;
pub const MAX_MATCH: usize = 18;

/// One tokenizer output: a literal byte or a back-reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    Literal(u8),
    /// offset in 1..=4096 (distance back from the current position),
    /// len in 3..=18.
    Match { offset: u16, len: u8 },
}

pub fn encode(data: &[u8]) -> Codestream {
    Codestream::new_lossless(Algorithm::Lzss, data, encode_payload(data))
}

pub(crate) fn encode_payload(data: &[u8]) -> Vec<u8> {
    serialize_tokens(&tokenize(data))
}

pub fn decode(c: &Codestream) -> Result<Vec<u8>, CodecError> {
    expect_algo(c, Algorithm::Lzss)?;
    let out = decode_payload(&c.payload, c.original_len)?;
    verify_source_crc(c, &out)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

const HASH_BITS: u32 = 15;
const NO_POS: i32 = -1;

fn hash3(a: u8, b: u8, c: u8) -> usize {
    let key = ((a as u32) << 16) | ((b as u32) << 8) | c as u32;
    (key.wrapping_mul(2654435761) >> (32 - HASH_BITS)) as usize
}

/// Greedy longest-match tokenization. Candidate offsets run over the full
/// 1..=4096 range: real prior positions via hash chains, plus references
/// that begin inside the implicit zero prefix when the current byte is 0.
pub fn tokenize(data: &[u8]) -> Vec<Token> {
    let n = data.len();
    let mut tokens = Vec::new();
    let mut head = vec![NO_POS; 1 << HASH_BITS];
    let mut prev = vec![NO_POS; n];

    let insert = |p: usize, head: &mut [i32], prev: &mut [i32]| {
        if p + 2 < n {
            let h = hash3(data[p], data[p + 1], data[p + 2]);
            prev[p] = head[h];
            head[h] = p as i32;
        }
    };

    let mut i = 0;
    while i < n {
        let max_len = MAX_MATCH.min(n - i);
        let mut best_len = 0usize;
        let mut best_off = 0usize;

        if max_len >= MIN_MATCH {
            // Real candidates, nearest first (= smallest offset first).
            let mut cand = if i + 2 < n {
                head[hash3(data[i], data[i + 1], data[i + 2])]
            } else {
                NO_POS
            };
            while cand != NO_POS {
                let j = cand as usize;
                let d = i - j;
                if d > WINDOW {
                    break;
                }
                let mut l = 0usize;
                while l < max_len && data[j + l] == data[i + l] {
                    l += 1;
                }
                if l >= MIN_MATCH && l > best_len {
                    best_len = l;
                    best_off = d;
                    if l == max_len {
                        break;
                    }
                }
                cand = prev[j];
            }

            // Offsets larger than i reach into the zero-filled prefix; they
            // only exist while i < WINDOW and can only start with zeros.
            if best_len < max_len && data[i] == 0 && i < WINDOW {
                let mut z = 0usize;
                while z < max_len && data[i + z] == 0 {
                    z += 1;
                }
                // offset = i + m: m leading zeros, then the data from index 0.
                let m_hi = z.min(WINDOW - i);
                for m in 1..=m_hi {
                    let mut l = m;
                    while l < max_len && data[i + l] == data[l - m] {
                        l += 1;
                    }
                    if l >= MIN_MATCH && l > best_len {
                        best_len = l;
                        best_off = i + m;
                        if l == max_len {
                            break;
                        }
                    }
                }
                // Any offset beyond i + z matches exactly the zero run.
                if z >= MIN_MATCH && z > best_len && i + z + 1 <= WINDOW {
                    best_len = z;
                    best_off = i + z + 1;
                }
            }
        }

        if best_len >= MIN_MATCH {
            tokens.push(Token::Match { offset: best_off as u16, len: best_len as u8 });
            for p in i..i + best_len {
                insert(p, &mut head, &mut prev);
            }
            i += best_len;
        } else {
            tokens.push(Token::Literal(data[i]));
            insert(i, &mut head, &mut prev);
            i += 1;
        }
    }
    tokens
}

pub(crate) fn serialize_tokens(tokens: &[Token]) -> Vec<u8> {
    let mut payload = Vec::new();
    for group in tokens.chunks(8) {
        let mut control = 0u8;
        let mut body: Vec<u8> = Vec::with_capacity(16);
        for (k, t) in group.iter().enumerate() {
            match *t {
                Token::Literal(b) => {
                    control |= 1 << k;
                    body.push(b);
                }
                Token::Match { offset, len } => {
                    debug_assert!((1..=WINDOW as u16).contains(&offset));
                    debug_assert!((MIN_MATCH as u8..=MAX_MATCH as u8).contains(&len));
                    let off = offset - 1;
                    body.push((off & 0xFF) as u8);
                    body.push((((off >> 8) as u8) << 4) | (len - MIN_MATCH as u8));
                }
            }
        }
        payload.push(control);
        payload.extend_from_slice(&body);
    }
    payload
}

pub(crate) fn decode_payload(payload: &[u8], original_len: u64) -> Result<Vec<u8>, CodecError> {
    let original_len = original_len as usize;
    let mut out: Vec<u8> = Vec::with_capacity(original_len);
    let mut pos = 0usize;
    'groups: while out.len() < original_len {
        if pos >= payload.len() {
            return Err(CodecError::CorruptStream("LZSS payload ends mid-stream"));
        }
        let control = payload[pos];
        pos += 1;
        for k in 0..8 {
            if out.len() == original_len {
                if control >> k != 0 {
                    return Err(CodecError::CorruptStream("nonzero unused LZSS control bits"));
                }
                break 'groups;
            }
            if control & (1 << k) != 0 {
                let b = *payload
                    .get(pos)
                    .ok_or(CodecError::CorruptStream("truncated LZSS literal"))?;
                pos += 1;
                out.push(b);
            } else {
                if pos + 2 > payload.len() {
                    return Err(CodecError::CorruptStream("truncated LZSS match"));
                }
                let b0 = payload[pos] as usize;
                let b1 = payload[pos + 1] as usize;
                pos += 2;
                let offset = (b0 | ((b1 >> 4) << 8)) + 1;
                let len = (b1 & 0x0F) + MIN_MATCH;
                if out.len() + len > original_len {
                    return Err(CodecError::CorruptStream("LZSS match overruns declared length"));
                }
                for _ in 0..len {
                    let idx = out.len() as isize - offset as isize;
                    let b = if idx >= 0 { out[idx as usize] } else { 0 };
                    out.push(b);
                }
            }
        }
    }
    if pos != payload.len() {
        return Err(CodecError::CorruptStream("trailing bytes after LZSS stream"));
    }
    Ok(out)
}
