//! LZAR: the LZSS token stream entropy-coded with an adaptive arithmetic
//! coder.
//!
//! One adaptive order-0 model covers a 272-symbol alphabet: 256 literal
//! bytes plus 16 match lengths (len − 3). Frequencies start at 1, grow by
//! 32 per occurrence, and all counts are halved (rounding up) when the
//! total passes 2^14. Match offsets follow their length symbol, coded
//! against a fixed uniform model over the 4096 window positions.
//!
//! The entropy stage is a 32-bit range coder with carry handling. The
//! encoder's flush writes out the final `low` exactly, which gives the
//! decoder a strong end-of-stream invariant: after the last symbol every
//! payload byte has been consumed and the code register is zero. Together
//! with the source CRC this makes any single-bit payload corruption
//! detectable.

use crate::container::{Algorithm, Codestream};

use super::lzss::{self, Token, MIN_MATCH, WINDOW};
use super::{expect_algo, verify_source_crc, CodecError};

const TOP: u32 = 1 << 24;
const ALPHABET: usize = 272;
const FREQ_INCREMENT: u16 = 32;
const TOTAL_CAP: u32 = 1 << 14;

// ---------------------------------------------------------------------------
// Adaptive order-0 frequency model
// ---------------------------------------------------------------------------

struct AdaptiveModel {
    freq: [u16; ALPHABET],
    total: u32,
}

impl AdaptiveModel {
    fn new() -> AdaptiveModel {
        AdaptiveModel { freq: [1; ALPHABET], total: ALPHABET as u32 }
    }

    /// Cumulative interval [lo, hi) of `sym`.
    fn interval(&self, sym: usize) -> (u32, u32) {
        let mut lo = 0u32;
        for f in &self.freq[..sym] {
            lo += *f as u32;
        }
        (lo, lo + self.freq[sym] as u32)
    }

    /// Symbol whose cumulative interval contains `target`.
    fn lookup(&self, target: u32) -> (usize, u32, u32) {
        let mut lo = 0u32;
        for (sym, f) in self.freq.iter().enumerate() {
            let hi = lo + *f as u32;
            if target < hi {
                return (sym, lo, hi);
            }
            lo = hi;
        }
        unreachable!("target below total by construction")
    }

    fn update(&mut self, sym: usize) {
        self.freq[sym] += FREQ_INCREMENT;
        self.total += FREQ_INCREMENT as u32;
        if self.total > TOTAL_CAP {
            self.total = 0;
            for f in self.freq.iter_mut() {
                *f = (*f + 1) >> 1;
                self.total += *f as u32;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Range coder
// ---------------------------------------------------------------------------

struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    fn new() -> RangeEncoder {
        RangeEncoder { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new() }
    }

    fn encode(&mut self, cum_lo: u32, cum_hi: u32, total: u32) {
        let r = self.range / total;
        self.low += r as u64 * cum_lo as u64;
        // The truncation remainder goes to the last symbol.
        self.range = if cum_hi == total {
            self.range - r * cum_lo
        } else {
            r * (cum_hi - cum_lo)
        };
        while self.range < TOP {
            self.shift_low();
            self.range <<= 8;
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            self.out.push(self.cache.wrapping_add(carry));
            for _ in 1..self.cache_size {
                self.out.push(0xFFu8.wrapping_add(carry));
            }
            self.cache = (self.low >> 24) as u8;
            self.cache_size = 0;
        }
        self.cache_size += 1;
        self.low = (self.low << 8) & 0xFFFF_FFFF;
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    fn new(input: &'a [u8]) -> Result<RangeDecoder<'a>, CodecError> {
        if input.len() < 5 {
            return Err(CodecError::CorruptStream("range coder stream shorter than flush"));
        }
        if input[0] != 0 {
            return Err(CodecError::CorruptStream("range coder stream must start with 0"));
        }
        let code = u32::from_be_bytes(input[1..5].try_into().unwrap());
        Ok(RangeDecoder { code, range: u32::MAX, input, pos: 5 })
    }

    fn next_byte(&mut self) -> Result<u8, CodecError> {
        let b = *self
            .input
            .get(self.pos)
            .ok_or(CodecError::CorruptStream("range coder input exhausted"))?;
        self.pos += 1;
        Ok(b)
    }

    /// Scaled target used to look a symbol up in its model.
    fn target(&self, total: u32) -> u32 {
        let r = self.range / total;
        (self.code / r).min(total - 1)
    }

    /// Narrow to the chosen symbol's interval; must mirror the encoder.
    fn consume(&mut self, cum_lo: u32, cum_hi: u32, total: u32) -> Result<(), CodecError> {
        let r = self.range / total;
        self.code -= r * cum_lo;
        self.range = if cum_hi == total {
            self.range - r * cum_lo
        } else {
            r * (cum_hi - cum_lo)
        };
        while self.range < TOP {
            let b = self.next_byte()?;
            self.code = (self.code << 8) | b as u32;
            self.range <<= 8;
        }
        Ok(())
    }

    fn decode_uniform(&mut self, total: u32) -> Result<u32, CodecError> {
        let v = self.target(total);
        self.consume(v, v + 1, total)?;
        Ok(v)
    }

    /// A well-formed stream is fully consumed with a zero code register.
    fn finish(self) -> Result<(), CodecError> {
        if self.pos != self.input.len() {
            return Err(CodecError::CorruptStream("range coder stream not fully consumed"));
        }
        if self.code != 0 {
            return Err(CodecError::CorruptStream("range coder end state nonzero"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Codec entry points
// ---------------------------------------------------------------------------

pub fn encode(data: &[u8]) -> Codestream {
    Codestream::new_lossless(Algorithm::Lzar, data, encode_payload(data))
}

pub(crate) fn encode_payload(data: &[u8]) -> Vec<u8> {
    encode_tokens(&lzss::tokenize(data))
}

fn encode_tokens(tokens: &[Token]) -> Vec<u8> {
    let mut rc = RangeEncoder::new();
    let mut model = AdaptiveModel::new();
    for t in tokens {
        match *t {
            Token::Literal(b) => {
                let (lo, hi) = model.interval(b as usize);
                rc.encode(lo, hi, model.total);
                model.update(b as usize);
            }
            Token::Match { offset, len } => {
                let sym = 256 + (len as usize - MIN_MATCH);
                let (lo, hi) = model.interval(sym);
                rc.encode(lo, hi, model.total);
                model.update(sym);
                let off = offset as u32 - 1;
                rc.encode(off, off + 1, WINDOW as u32);
            }
        }
    }
    rc.finish()
}

pub fn decode(c: &Codestream) -> Result<Vec<u8>, CodecError> {
    expect_algo(c, Algorithm::Lzar)?;
    let out = decode_payload(&c.payload, c.original_len)?;
    verify_source_crc(c, &out)?;
    Ok(out)
}

pub(crate) fn decode_payload(payload: &[u8], original_len: u64) -> Result<Vec<u8>, CodecError> {
    let original_len = original_len as usize;
    let mut rc = RangeDecoder::new(payload)?;
    let mut model = AdaptiveModel::new();
    let mut out: Vec<u8> = Vec::with_capacity(original_len);
    while out.len() < original_len {
        let (sym, lo, hi) = model.lookup(rc.target(model.total));
        rc.consume(lo, hi, model.total)?;
        model.update(sym);
        if sym < 256 {
            out.push(sym as u8);
        } else {
            let len = sym - 256 + MIN_MATCH;
            let offset = rc.decode_uniform(WINDOW as u32)? as usize + 1;
            if out.len() + len > original_len {
                return Err(CodecError::CorruptStream("LZAR match overruns declared length"));
            }
            for _ in 0..len {
                let idx = out.len() as isize - offset as isize;
                let b = if idx >= 0 { out[idx as usize] } else { 0 };
                out.push(b);
            }
        }
    }
    rc.finish()?;
    Ok(out)
}
