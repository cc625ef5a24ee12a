//! Multi-level discrete wavelet transform with the Daubechies
//! four-coefficient filter pair, plus a threshold-quantize-LZW lossy coder
//! for power-quality signals.
//!
//! The transform uses periodic boundary extension, which keeps it exactly
//! orthonormal: coefficient energy equals padded-input energy and the
//! inverse is a true inverse up to floating rounding. Inputs are
//! zero-padded to a multiple of 2^levels; the original length is recorded
//! so reconstruction can strip the padding.
//!
//! Lossy coding keeps the m largest-magnitude coefficients that fit the
//! byte budget `original_bytes / target_ratio` (original size is counted
//! as 2 bytes per sample, the 16-bit acquisition width used throughout).
//! Kept coefficients are quantized uniformly over [-max|c|, max|c|]; a
//! significance bitmap plus the packed coefficients are LZW-compressed.
//! If the final container still misses the budget the kept set shrinks
//! until it fits, so an `Ok` result never under-delivers on the ratio.
//!
//! Payload layout (after the SQZ1 header, little-endian):
//!
//! ```text
//! offset  size  field
//!      0     1  decomposition levels
//!      1     1  quantizer bits
//!      2     2  reserved = 0
//!      4     4  original length (samples)
//!      8     4  padded length (samples)
//!     12     4  kept coefficient count
//!     16     8  sample_rate_hz (f64 bits)
//!     24     8  coefficient scale max|c| (f64 bits)
//!     32     8  achieved NMSE (f64 bits)
//!     40     8  achieved ratio (f64 bits)
//!     48     -  LZW stream of: significance bitmap (1 bit per coefficient,
//!               approximation then details coarsest-to-finest), then kept
//!               coefficients as quantizer_bits-wide two's complement values
//! ```

use std::fmt;

use crate::codecs::bits::{BitReader, BitWriter};
use crate::codecs::{lzw, CodecError};
use crate::container::{Algorithm, Codestream, HEADER_LEN as CONTAINER_HEADER_LEN};
use crate::signal::Signal;

pub const PAYLOAD_HEADER_LEN: usize = 48;
/// Decomposition depth used by the lossy coder.
pub const COMPRESS_LEVELS: usize = 5;
/// Bytes each source sample counts for in ratio computations.
pub const BYTES_PER_SAMPLE: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum WaveletError {
    /// padded_len / 2^levels fell below the filter length.
    TooManyLevels { levels: usize, padded_len: usize },
    ShapeMismatch(String),
    /// The byte budget cannot hold even an empty coefficient set.
    RatioUnreachable { target_ratio: f64 },
    BadPlan(String),
    EmptySignal,
    Codec(CodecError),
}

impl fmt::Display for WaveletError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WaveletError::TooManyLevels { levels, padded_len } => {
                write!(f, "{levels} levels too deep for padded length {padded_len}")
            }
            WaveletError::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            WaveletError::RatioUnreachable { target_ratio } => {
                write!(f, "target ratio {target_ratio}:1 is unreachable")
            }
            WaveletError::BadPlan(msg) => write!(f, "bad plan: {msg}"),
            WaveletError::EmptySignal => write!(f, "empty signal"),
            WaveletError::Codec(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for WaveletError {}

impl From<CodecError> for WaveletError {
    fn from(e: CodecError) -> WaveletError {
        WaveletError::Codec(e)
    }
}

/// Daubechies-4 analysis pair. The low-pass taps satisfy sum h = sqrt(2),
/// sum h^2 = 1, sum h[k]h[k+2] = 0 and sum (-1)^k h[k] = 0; the high-pass
/// is the quadrature mirror g[k] = (-1)^k h[3-k].
pub fn d4_filters() -> ([f64; 4], [f64; 4]) {
    let s3 = 3f64.sqrt();
    let norm = 4.0 * 2f64.sqrt();
    let h = [
        (1.0 + s3) / norm,
        (3.0 + s3) / norm,
        (3.0 - s3) / norm,
        (1.0 - s3) / norm,
    ];
    let g = [h[3], -h[2], h[1], -h[0]];
    (h, g)
}

/// Detail bands plus the coarsest approximation band.
/// `details[0]` is the finest band (length padded_len/2); `details[j]`
/// has length padded_len / 2^(j+1).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub levels: usize,
    pub approximation: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub original_len: usize,
    pub padded_len: usize,
    pub sample_rate_hz: f64,
}

impl WaveletDecomposition {
    pub fn coefficient_count(&self) -> usize {
        self.approximation.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn coefficient_energy(&self) -> f64 {
        let mut e: f64 = self.approximation.iter().map(|c| c * c).sum();
        for d in &self.details {
            e += d.iter().map(|c| c * c).sum::<f64>();
        }
        e
    }
}

fn analyze_step(x: &[f64], h: &[f64; 4], g: &[f64; 4]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for k in 0..4 {
            let v = x[(2 * i + k) % n];
            a += h[k] * v;
            d += g[k] * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

fn synthesize_step(approx: &[f64], detail: &[f64], h: &[f64; 4], g: &[f64; 4]) -> Vec<f64> {
    let n = approx.len() * 2;
    let mut x = vec![0.0; n];
    for i in 0..approx.len() {
        for k in 0..4 {
            x[(2 * i + k) % n] += approx[i] * h[k] + detail[i] * g[k];
        }
    }
    x
}

/// Pyramid transform with periodic boundaries; the input is zero-padded to
/// the next multiple of 2^levels.
pub fn dwt(s: &Signal, levels: usize) -> Result<WaveletDecomposition, WaveletError> {
    if s.samples.is_empty() {
        return Err(WaveletError::EmptySignal);
    }
    if levels == 0 {
        return Err(WaveletError::ShapeMismatch("levels must be >= 1".into()));
    }
    let block = 1usize << levels;
    let padded_len = s.samples.len().div_ceil(block) * block;
    if padded_len >> levels < 4 {
        return Err(WaveletError::TooManyLevels { levels, padded_len });
    }
    let (h, g) = d4_filters();
    let mut buf = s.samples.clone();
    buf.resize(padded_len, 0.0);
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (approx, detail) = analyze_step(&buf, &h, &g);
        details.push(detail);
        buf = approx;
    }
    Ok(WaveletDecomposition {
        levels,
        approximation: buf,
        details,
        original_len: s.samples.len(),
        padded_len,
        sample_rate_hz: s.sample_rate_hz,
    })
}

/// Perfect-reconstruction inverse; strips the zero padding.
pub fn idwt(d: &WaveletDecomposition) -> Result<Signal, WaveletError> {
    if d.levels == 0 || d.details.len() != d.levels {
        return Err(WaveletError::ShapeMismatch(format!(
            "{} detail bands for {} levels",
            d.details.len(),
            d.levels
        )));
    }
    let mut expect = d.padded_len;
    for j in 0..d.levels {
        expect /= 2;
        if d.details[j].len() != expect {
            return Err(WaveletError::ShapeMismatch(format!(
                "detail band {j} has length {}, expected {expect}",
                d.details[j].len()
            )));
        }
    }
    if d.approximation.len() != expect {
        return Err(WaveletError::ShapeMismatch(format!(
            "approximation has length {}, expected {expect}",
            d.approximation.len()
        )));
    }
    if d.original_len > d.padded_len {
        return Err(WaveletError::ShapeMismatch("original_len exceeds padded_len".into()));
    }
    let (h, g) = d4_filters();
    let mut buf = d.approximation.clone();
    for j in (0..d.levels).rev() {
        buf = synthesize_step(&buf, &d.details[j], &h, &g);
    }
    buf.truncate(d.original_len);
    Ok(Signal { samples: buf, sample_rate_hz: d.sample_rate_hz })
}

/// Lossy coding parameters.
#[derive(Debug, Clone, Copy)]
pub struct LossyPlan {
    pub target_ratio: f64,
    pub quantizer_bits: u32,
}

impl Default for LossyPlan {
    fn default() -> Self {
        LossyPlan { target_ratio: 6.0, quantizer_bits: 12 }
    }
}

impl LossyPlan {
    pub fn new(target_ratio: f64) -> LossyPlan {
        LossyPlan { target_ratio, ..Default::default() }
    }

    fn validate(&self) -> Result<(), WaveletError> {
        if !(self.target_ratio > 1.0) {
            return Err(WaveletError::BadPlan(format!(
                "target ratio must exceed 1, got {}",
                self.target_ratio
            )));
        }
        if !(4..=16).contains(&self.quantizer_bits) {
            return Err(WaveletError::BadPlan(format!(
                "quantizer bits must be in 4..=16, got {}",
                self.quantizer_bits
            )));
        }
        Ok(())
    }
}

/// Canonical coefficient order: approximation, then details from the
/// coarsest band down to the finest.
fn flatten(d: &WaveletDecomposition) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(d.padded_len);
    coeffs.extend_from_slice(&d.approximation);
    for j in (0..d.levels).rev() {
        coeffs.extend_from_slice(&d.details[j]);
    }
    coeffs
}

fn unflatten(
    coeffs: &[f64],
    levels: usize,
    padded_len: usize,
    original_len: usize,
    sample_rate_hz: f64,
) -> WaveletDecomposition {
    let approx_len = padded_len >> levels;
    let mut pos = approx_len;
    let approximation = coeffs[..approx_len].to_vec();
    let mut details_coarse_first = Vec::with_capacity(levels);
    for j in (0..levels).rev() {
        let len = padded_len >> (j + 1);
        details_coarse_first.push(coeffs[pos..pos + len].to_vec());
        pos += len;
    }
    details_coarse_first.reverse();
    WaveletDecomposition {
        levels,
        approximation,
        details: details_coarse_first,
        original_len,
        padded_len,
        sample_rate_hz,
    }
}

struct EncodedSet {
    payload_body: Vec<u8>,
    cmax: f64,
    reconstructed: Vec<f64>,
}

/// Quantize the chosen coefficient set and serialize bitmap + values.
/// Coefficients that quantize to zero are dropped from the bitmap — they
/// carry no reconstruction information.
fn encode_set(coeffs: &[f64], keep: &[usize], bits: u32) -> EncodedSet {
    let qmax = (1i64 << (bits - 1)) - 1;
    let cmax = keep.iter().map(|&i| coeffs[i].abs()).fold(0.0f64, f64::max);
    let mut quantized: Vec<(usize, i64)> = Vec::with_capacity(keep.len());
    let mut reconstructed = vec![0.0; coeffs.len()];
    if cmax > 0.0 {
        for &i in keep {
            let q = (coeffs[i] / cmax * qmax as f64).round() as i64;
            if q != 0 {
                quantized.push((i, q));
                reconstructed[i] = q as f64 / qmax as f64 * cmax;
            }
        }
    }
    // The bitmap enumerates ascending indices; pack values the same way.
    quantized.sort_by_key(|&(i, _)| i);
    let mut bitmap = vec![0u8; coeffs.len().div_ceil(8)];
    for &(i, _) in &quantized {
        bitmap[i / 8] |= 1 << (i % 8);
    }
    let mut w = BitWriter::new();
    for &(_, q) in &quantized {
        w.put((q as u32) & ((1u32 << bits) - 1), bits);
    }
    let mut body = Vec::with_capacity(bitmap.len() + quantized.len() * bits as usize / 8 + 8);
    body.extend_from_slice(&bitmap);
    body.extend_from_slice(&w.finish());
    EncodedSet { payload_body: body, cmax, reconstructed }
}

fn assemble_payload(
    levels: usize,
    bits: u32,
    original_len: usize,
    padded_len: usize,
    kept: usize,
    sample_rate_hz: f64,
    cmax: f64,
    nmse: f64,
    ratio: f64,
    lzw_body: &[u8],
) -> Vec<u8> {
    let mut payload = Vec::with_capacity(PAYLOAD_HEADER_LEN + lzw_body.len());
    payload.push(levels as u8);
    payload.push(bits as u8);
    payload.extend_from_slice(&0u16.to_le_bytes());
    payload.extend_from_slice(&(original_len as u32).to_le_bytes());
    payload.extend_from_slice(&(padded_len as u32).to_le_bytes());
    payload.extend_from_slice(&(kept as u32).to_le_bytes());
    payload.extend_from_slice(&sample_rate_hz.to_le_bytes());
    payload.extend_from_slice(&cmax.to_le_bytes());
    payload.extend_from_slice(&nmse.to_le_bytes());
    payload.extend_from_slice(&ratio.to_le_bytes());
    payload.extend_from_slice(lzw_body);
    payload
}

/// Wavelet-domain lossy compression at a target ratio.
pub fn compress(s: &Signal, plan: &LossyPlan) -> Result<Codestream, WaveletError> {
    plan.validate()?;
    let d = dwt(s, COMPRESS_LEVELS)?;
    let coeffs = flatten(&d);
    let original_bytes = s.samples.len() * BYTES_PER_SAMPLE;
    let budget = (original_bytes as f64 / plan.target_ratio).floor() as usize;
    let fixed = CONTAINER_HEADER_LEN + PAYLOAD_HEADER_LEN + coeffs.len().div_ceil(8);
    if budget < fixed {
        return Err(WaveletError::RatioUnreachable { target_ratio: plan.target_ratio });
    }
    // Largest m whose bitmap + packed coefficients + headers fit the budget.
    let mut m = ((budget - fixed) * 8 / plan.quantizer_bits as usize).min(coeffs.len());

    let mut order: Vec<usize> = (0..coeffs.len()).collect();
    order.sort_by(|&a, &b| {
        coeffs[b]
            .abs()
            .partial_cmp(&coeffs[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });

    loop {
        let keep = &order[..m];
        let set = encode_set(&coeffs, keep, plan.quantizer_bits);
        let lzw_body = lzw::compress_payload(&set.payload_body);
        let total = CONTAINER_HEADER_LEN + PAYLOAD_HEADER_LEN + lzw_body.len();
        if total > budget {
            if m == 0 {
                return Err(WaveletError::RatioUnreachable { target_ratio: plan.target_ratio });
            }
            // The entropy stage came in over budget; shrink the kept set.
            m = (m * 7 / 8).min(m - 1);
            continue;
        }
        let rec_dec = unflatten(
            &set.reconstructed,
            COMPRESS_LEVELS,
            d.padded_len,
            d.original_len,
            d.sample_rate_hz,
        );
        let rec = idwt(&rec_dec)?;
        let ref_energy: f64 = s.samples.iter().map(|x| x * x).sum();
        let err_energy: f64 = s
            .samples
            .iter()
            .zip(&rec.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let nmse = if ref_energy > 0.0 { err_energy / ref_energy } else { 0.0 };
        let kept = set.payload_body.len(); // recomputed below from bitmap
        let _ = kept;
        let kept_count = order[..m]
            .iter()
            .filter(|&&i| set.reconstructed[i] != 0.0)
            .count();
        let ratio = original_bytes as f64 / total as f64;
        let payload = assemble_payload(
            COMPRESS_LEVELS,
            plan.quantizer_bits,
            d.original_len,
            d.padded_len,
            kept_count,
            d.sample_rate_hz,
            set.cmax,
            nmse,
            ratio,
            &lzw_body,
        );
        return Ok(Codestream::new_lossy(
            Algorithm::Wavelet,
            original_bytes as u64,
            payload,
        ));
    }
}

/// Ratio and NMSE the encoder recorded in a wavelet or hybrid container.
#[derive(Debug, Clone, Copy)]
pub struct LossyInfo {
    pub achieved_ratio: f64,
    pub nmse: f64,
}

pub fn info(c: &Codestream) -> Result<LossyInfo, WaveletError> {
    if c.algo != Algorithm::Wavelet {
        return Err(CodecError::WrongAlgorithm { expected: Algorithm::Wavelet, found: c.algo }.into());
    }
    if c.payload.len() < PAYLOAD_HEADER_LEN {
        return Err(CodecError::CorruptStream("wavelet payload shorter than header").into());
    }
    let nmse = f64::from_le_bytes(c.payload[32..40].try_into().unwrap());
    let achieved_ratio = f64::from_le_bytes(c.payload[40..48].try_into().unwrap());
    Ok(LossyInfo { achieved_ratio, nmse })
}

pub fn decompress(c: &Codestream) -> Result<Signal, WaveletError> {
    let p = parse_coefficients(c)?;
    let dec = unflatten(&p.coeffs, p.levels, p.padded_len, p.original_len, p.sample_rate_hz);
    idwt(&dec)
}

/// The dequantized coefficient vector a container carries, in canonical
/// order (approximation, then details coarsest to finest).
pub fn kept_coefficients(c: &Codestream) -> Result<Vec<f64>, WaveletError> {
    Ok(parse_coefficients(c)?.coeffs)
}

struct ParsedWavelet {
    levels: usize,
    original_len: usize,
    padded_len: usize,
    sample_rate_hz: f64,
    coeffs: Vec<f64>,
}

fn parse_coefficients(c: &Codestream) -> Result<ParsedWavelet, WaveletError> {
    if c.algo != Algorithm::Wavelet {
        return Err(CodecError::WrongAlgorithm { expected: Algorithm::Wavelet, found: c.algo }.into());
    }
    if c.payload.len() < PAYLOAD_HEADER_LEN {
        return Err(CodecError::CorruptStream("wavelet payload shorter than header").into());
    }
    let levels = c.payload[0] as usize;
    let bits = c.payload[1] as u32;
    let original_len = u32::from_le_bytes(c.payload[4..8].try_into().unwrap()) as usize;
    let padded_len = u32::from_le_bytes(c.payload[8..12].try_into().unwrap()) as usize;
    let kept = u32::from_le_bytes(c.payload[12..16].try_into().unwrap()) as usize;
    let sample_rate_hz = f64::from_le_bytes(c.payload[16..24].try_into().unwrap());
    let cmax = f64::from_le_bytes(c.payload[24..32].try_into().unwrap());

    if levels == 0 || levels > 24 || !(4..=16).contains(&bits) {
        return Err(CodecError::CorruptStream("implausible wavelet header").into());
    }
    if padded_len == 0
        || padded_len % (1 << levels) != 0
        || (padded_len >> levels) < 4
        || original_len > padded_len
        || original_len == 0
    {
        return Err(CodecError::CorruptStream("implausible wavelet lengths").into());
    }
    if !(sample_rate_hz > 0.0) || !cmax.is_finite() || cmax < 0.0 {
        return Err(CodecError::CorruptStream("bad wavelet header fields").into());
    }
    if c.original_len != (original_len * BYTES_PER_SAMPLE) as u64 {
        return Err(CodecError::CorruptStream("header length disagrees with container").into());
    }

    let body = lzw::decompress_payload(&c.payload[PAYLOAD_HEADER_LEN..], None)?;
    let bitmap_len = padded_len.div_ceil(8);
    if body.len() < bitmap_len {
        return Err(CodecError::CorruptStream("wavelet body shorter than bitmap").into());
    }
    let (bitmap, packed) = body.split_at(bitmap_len);
    let indices: Vec<usize> = (0..padded_len)
        .filter(|i| bitmap[i / 8] & (1 << (i % 8)) != 0)
        .collect();
    if indices.len() != kept {
        return Err(CodecError::CorruptStream("bitmap population disagrees with header").into());
    }
    let expected_packed = (kept * bits as usize).div_ceil(8);
    if packed.len() != expected_packed {
        return Err(CodecError::CorruptStream("wavelet coefficient block length mismatch").into());
    }

    let qmax = (1i64 << (bits - 1)) - 1;
    let mut coeffs = vec![0.0f64; padded_len];
    let mut r = BitReader::new(packed);
    for &i in &indices {
        let raw = r
            .get(bits)
            .ok_or(CodecError::CorruptStream("truncated coefficient block"))?;
        // Sign-extend from `bits` wide two's complement.
        let shift = 32 - bits;
        let q = ((raw << shift) as i32 >> shift) as i64;
        coeffs[i] = q as f64 / qmax as f64 * cmax;
    }
    if !r.only_zero_padding_remains() {
        return Err(CodecError::CorruptStream("garbage after coefficient block").into());
    }

    Ok(ParsedWavelet { levels, original_len, padded_len, sample_rate_hz, coeffs })
}
