//! MSB-first bit packing used by the LZW code stream and the wavelet
//! coefficient block.

/// Writes values most-significant-bit first into a byte vector.
#[derive(Debug, Default)]
pub struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn new() -> BitWriter {
        BitWriter::default()
    }

    pub fn put(&mut self, value: u32, width: u32) {
        debug_assert!(width <= 32);
        debug_assert!(width == 32 || value < (1u32 << width));
        self.acc = (self.acc << width) | value as u64;
        self.nbits += width;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.out.push((self.acc >> self.nbits) as u8);
        }
    }

    /// Pads the final partial byte with zero bits and returns the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            self.out.push((self.acc << (8 - self.nbits)) as u8);
        }
        self.out
    }
}

/// Reads MSB-first values; tracks exact bit position so trailing padding
/// can be validated.
#[derive(Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    bit_pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> BitReader<'a> {
        BitReader { data, bit_pos: 0 }
    }

    pub fn get(&mut self, width: u32) -> Option<u32> {
        debug_assert!(width <= 32);
        if self.bit_pos + width as usize > self.data.len() * 8 {
            return None;
        }
        let mut v = 0u32;
        for _ in 0..width {
            let byte = self.data[self.bit_pos / 8];
            let bit = (byte >> (7 - (self.bit_pos % 8))) & 1;
            v = (v << 1) | bit as u32;
            self.bit_pos += 1;
        }
        Some(v)
    }

    /// True when every bit from the cursor to the end of the buffer is zero
    /// and fewer than 8 such bits remain (i.e. only final-byte padding).
    pub fn only_zero_padding_remains(&self) -> bool {
        let total = self.data.len() * 8;
        if total - self.bit_pos >= 8 {
            return false;
        }
        (self.bit_pos..total).all(|p| {
            let byte = self.data[p / 8];
            (byte >> (7 - (p % 8))) & 1 == 0
        })
    }
}
